"""Three intervals by hand: how the last noise value cancels the rest.

A meter reads 1, 2 and 3 kWh under prices 0.1, 0.2 and 0.3. We script the
drawn noise so every number is easy to follow.
"""

from zsbilling import BillingPeriodConfig, ProviderLedger, SmartMeter, TariffSchedule
from zsbilling.meter import run_meter_period
from zsbilling.noise import ScriptedNoise

config = BillingPeriodConfig(interval_minutes=480, days=1)  # three 8-hour intervals
print("intervals per period:", config.L)

consumption = [1.0, 2.0, 3.0]
tariffs = TariffSchedule(area=1, prices=[0.1, 0.2, 0.3])

# %% The meter perturbs every reading; only the last noise is computed.
meter = SmartMeter(meter_id=7, area=1, config=config, stream=ScriptedNoise([0.5, -0.4]))
readings = run_meter_period(meter, consumption, tariffs.prices)
for r in readings:
    print(f"interval {r.interval_index}: reported {r.value:.3f} kWh")
print("closing noise:", round(meter.last_noise, 6))

# %% The provider sees only the noisy values and still gets the true bill.
ledger = ProviderLedger(config)
ledger.register_meter(7, 1)
ledger.issue_schedule(tariffs)
for r in readings:
    ledger.record_reading(r)
print("partial bills:", [round(x, 4) for x in ledger.compute_partial_bills(7)])
print("final bill:", round(ledger.compute_final_bill(7), 6),
      "true bill:", round(sum(c * p for c, p in zip(consumption, tariffs.prices)), 6))

# %% Prices change after the fact: one replacement reading is enough.
flat = TariffSchedule(area=1, prices=[0.2, 0.2, 0.2])
replacement = meter.apply_tariff_adjustment(flat)
print(f"replacement reading for interval 3: {replacement.value:.3f} kWh")
print("new bill:", round(ledger.rebill(7, flat, replacement), 6))

# %% The period is over; the meter forgets its noise.
meter.purge()
print("meter phase:", meter.phase.value)
