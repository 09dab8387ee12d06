from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from zsbilling import (
    AdjustmentBudgetExhausted,
    BillingPeriodConfig,
    LengthMismatch,
    Phase,
    PhaseError,
    PriceNotPositive,
    SequenceError,
    SmartMeter,
    TariffSchedule,
    ValidationError,
)
from zsbilling.meter import run_meter_period
from zsbilling.noise import ScriptedNoise, SeedMaterial, derive_stream


def _meter(case, **kw):
    return SmartMeter(7, 1, case["config"], case["noise"], **kw)


def test_hand_instance(hand_case):
    meter = _meter(hand_case)
    readings = run_meter_period(meter, hand_case["consumption"], hand_case["tariffs"].prices)
    assert [r.interval_index for r in readings] == [1, 2, 3]
    assert [r.value for r in readings] == pytest.approx([1.5, 1.6, 3.1])
    assert meter.phase is Phase.CLOSED
    assert meter.retained_noise == [0.5, -0.4]
    assert meter.last_noise == pytest.approx(0.1)

    replacement = meter.apply_tariff_adjustment(TariffSchedule(1, [0.2, 0.2, 0.2]))
    assert replacement.replacement and replacement.interval_index == 3
    assert replacement.value == pytest.approx(2.9)


def test_hand_instance_exact(hand_case):
    meter = SmartMeter(7, 1, hand_case["config"], ScriptedNoise([Fraction(1, 2), Fraction(-2, 5)]), exact=True)
    trf = [Fraction(1, 10), Fraction(1, 5), Fraction(3, 10)]
    readings = run_meter_period(meter, [1, 2, 3], trf)
    assert [r.value for r in readings] == [Fraction(3, 2), Fraction(8, 5), Fraction(31, 10)]
    new = meter.apply_tariff_adjustment(TariffSchedule(1, [Fraction(1, 5)] * 3))
    assert new.value == Fraction(29, 10)


def test_out_of_order_and_early_close(hand_case):
    meter = _meter(hand_case)
    with pytest.raises(SequenceError):
        meter.report_interval(1, 0.1, 2)
    with pytest.raises(SequenceError):
        meter.close_period(3, 0.3)
    meter.report_interval(1, 0.1, 1)
    with pytest.raises(SequenceError):
        meter.report_interval(1, 0.1, 1)
    meter.report_interval(2, 0.2, 2)
    with pytest.raises(SequenceError):
        meter.report_interval(3, 0.3, 3)  # the last interval goes through close_period


def test_bad_values_leave_state_untouched(hand_case):
    meter = _meter(hand_case)
    with pytest.raises(PriceNotPositive):
        meter.report_interval(1, 0.0, 1)
    with pytest.raises(ValidationError):
        meter.report_interval(-1, 0.1, 1)
    assert meter.reported == 0 and hand_case["noise"].position == 0
    meter.report_interval(1, 0.1, 1)
    meter.report_interval(2, 0.2, 2)
    with pytest.raises(PriceNotPositive):
        meter.close_period(3, -0.3)
    assert meter.phase is Phase.OPEN


def test_phase_rules(hand_case):
    meter = _meter(hand_case)
    with pytest.raises(PhaseError):
        meter.apply_tariff_adjustment(hand_case["tariffs"])
    with pytest.raises(PhaseError):
        meter.purge()
    run_meter_period(meter, [1, 2, 3], [0.1, 0.2, 0.3])
    with pytest.raises(PhaseError):
        meter.report_interval(1, 0.1, 1)
    with pytest.raises(LengthMismatch):
        meter.apply_tariff_adjustment(TariffSchedule(1, [0.1, 0.2]))
    assert meter.adjustments_applied == 0


def test_adjustment_budget(hand_case):
    meter = _meter(hand_case)
    run_meter_period(meter, [1, 2, 3], [0.1, 0.2, 0.3])
    meter.apply_tariff_adjustment(TariffSchedule(1, [0.2] * 3))
    with pytest.raises(AdjustmentBudgetExhausted):
        meter.apply_tariff_adjustment(TariffSchedule(1, [0.4] * 3))
    assert meter.adjustments_applied == 1


def test_zero_budget_and_warning(hand_case, caplog):
    meter = SmartMeter(7, 1, hand_case["config"], ScriptedNoise([0, 0]), max_adjustments=0)
    run_meter_period(meter, [1, 2, 3], [0.1, 0.2, 0.3])
    with pytest.raises(AdjustmentBudgetExhausted):
        meter.apply_tariff_adjustment(TariffSchedule(1, [0.2] * 3))
    with caplog.at_level("WARNING"):
        SmartMeter(8, 1, hand_case["config"], ScriptedNoise([]), max_adjustments=2)
    assert "max_adjustments=2" in caplog.text
    with pytest.raises(ValidationError):
        SmartMeter(8, 1, hand_case["config"], ScriptedNoise([]), max_adjustments=-1)


def test_purge_clears_retained_state(hand_case):
    meter = _meter(hand_case)
    run_meter_period(meter, [1, 2, 3], [0.1, 0.2, 0.3])
    meter.purge()
    meter.purge()  # idempotent
    assert meter.phase is Phase.PURGED
    assert meter.retained_noise == [] and meter.last_true_reading is None and meter.stream is None
    with pytest.raises(PhaseError):
        meter.apply_tariff_adjustment(TariffSchedule(1, [0.2] * 3))


def test_single_interval_period():
    cfg = BillingPeriodConfig(1440, 1)
    meter = SmartMeter(1, 1, cfg, ScriptedNoise([]))
    (reading,) = run_meter_period(meter, [4.0], [0.25])
    assert reading.value == 4.0  # nothing to cancel, closing noise is zero
    assert meter.apply_tariff_adjustment(TariffSchedule(1, [0.5])).value == 4.0


def test_footprint_counts_values(hand_case):
    meter = _meter(hand_case)
    assert meter.footprint_values() == 1
    run_meter_period(meter, [1, 2, 3], [0.1, 0.2, 0.3])
    assert meter.footprint_values() == 4


@given(
    st.integers(2, 40).flatmap(lambda L: st.tuples(
        st.lists(st.floats(0, 10), min_size=L, max_size=L),
        st.lists(st.floats(0.01, 1), min_size=L, max_size=L),
        st.lists(st.floats(0.01, 1), min_size=L, max_size=L),
    )),
    st.floats(0.05, 5),
    st.integers(0, 2**64 - 1),
)
@settings(max_examples=200, deadline=None)
def test_noise_cancels_in_the_bill(data, sigma, meter_id):
    c, trf, new_trf = data
    cfg = BillingPeriodConfig(1440, len(c))
    meter = SmartMeter(meter_id, 1, cfg, derive_stream(SeedMaterial(bytes(32), meter_id), sigma))
    nc = [r.value for r in run_meter_period(meter, c, trf)]
    scale = sum(ci * ti for ci, ti in zip(c, trf)) + sigma
    assert abs(sum(n * t for n, t in zip(nc, trf)) - sum(ci * ti for ci, ti in zip(c, trf))) <= 1e-9 * scale
    nc[-1] = meter.apply_tariff_adjustment(TariffSchedule(1, new_trf)).value
    new_truth = sum(ci * ti for ci, ti in zip(c, new_trf))
    assert abs(sum(n * t for n, t in zip(nc, new_trf)) - new_truth) <= 1e-9 * (new_truth + sigma)
