"""How far do the reported readings drift from the real ones as noise grows?

Jensen-Shannon divergence (bits) between the histogram of true readings and
the histogram of what meters report, for 20 synthetic households.
"""

from zsbilling.datasets import desk_dataset
from zsbilling.privacy import TABLE_SCALES, noise_scale_sweep

data, tariffs = desk_dataset()
series = list(data.series.values())

for binning in ("reference", "combined"):
    rows = noise_scale_sweep(series, tariffs[1], TABLE_SCALES, config=data.config, binning=binning)
    print(f"{binning} bins:")
    for scale, js in rows:
        print(f"  scale {scale:7.4f}  JS {js:.4f}  " + "#" * int(40 * js))

# %% A vanishing scale leaves the distribution essentially untouched.
((_, js),) = noise_scale_sweep(series, tariffs[1], [1e-9], config=data.config)
print(f"scale 1e-9: JS {js:.5f}")
