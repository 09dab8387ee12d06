"""Packet sizes, air time, memory and compute for one billing period."""

from pathlib import Path

from zsbilling.overhead import (
    Role,
    compute_cost_estimate,
    fit_fragmentation,
    load_links,
    memory_estimate,
    overhead_table,
    residuals,
)

links = load_links(Path(__file__).parent / "config" / "links.ini")

for row in overhead_table([4, 11520], links):
    print(f"payload {row.payload} B")
    for name, size, seconds in row.cells:
        print(f"  {name:8s} {size:6d} B  {seconds:.5f} s")

print("residuals:", [(p, n, m - ref) for p, n, m, ref in residuals(overhead_table([4, 11520], links))])

# %% Which small-frame fragment layouts give the published 14 333 bytes?
for n, f, lo, hi in [fit for fit in fit_fragmentation(11520, 14333, 25) if fit[2] <= 200]:
    print(f"  {n} frames, {f} B per extra fragment, frame payload {lo}..{hi} B")

# %% Analytic per-period cost for a day, a month and a year of 15-minute intervals.
for L in (96, 2880, 35040):
    print(f"L={L:6d}  meter {memory_estimate(Role.METER, L) / 1e3:8.1f} kB  "
          f"provider {memory_estimate(Role.PROVIDER, L) / 1e3:8.1f} kB  "
          f"compute {compute_cost_estimate(Role.TOTAL, L) * 1e3:.3f} ms")
