import random
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from zsbilling import (
    BillingPeriodConfig,
    DuplicateReading,
    IncompletePeriod,
    NoisyReading,
    PriceNotPositive,
    ProviderLedger,
    ReplacementOutOfPlace,
    SequenceError,
    TariffSchedule,
    ValidationError,
)
from zsbilling.billing import BillRecord, read_bills_csv, round_bill, write_bills_csv
from zsbilling.errors import UnknownMeter


def _ledger(cfg, readings=(1.5, 1.6, 3.1), tariffs=(0.1, 0.2, 0.3)):
    ledger = ProviderLedger(cfg)
    ledger.register_meter(7, 1)
    ledger.issue_schedule(TariffSchedule(1, list(tariffs)))
    for i, v in enumerate(readings, start=1):
        ledger.record_reading(NoisyReading(7, i, v))
    return ledger


def test_hand_bill_and_rebill(hand_period):
    ledger = _ledger(hand_period)
    assert ledger.compute_partial_bills(7) == pytest.approx([0.15, 0.32, 0.93])
    assert ledger.compute_final_bill(7) == pytest.approx(1.40)
    new = TariffSchedule(1, [0.2, 0.2, 0.2])
    assert ledger.rebill(7, new, NoisyReading(7, 3, 2.9, replacement=True)) == pytest.approx(1.2)
    acct = ledger.accounts[7]
    assert acct.readings[:2] == [1.5, 1.6] and acct.readings[2] == 2.9
    assert acct.final_bill == pytest.approx(1.40) and acct.adjusted_tariffs is new


def test_hand_bill_exact(hand_period):
    f = Fraction
    ledger = _ledger(hand_period, (f(3, 2), f(8, 5), f(31, 10)), (f(1, 10), f(1, 5), f(3, 10)))
    assert ledger.compute_final_bill(7) == f(7, 5)


def test_reading_arrival_order_does_not_matter(hand_period):
    order = [3, 1, 2]
    ledger = ProviderLedger(hand_period)
    ledger.register_meter(7, 1)
    ledger.issue_schedule(TariffSchedule(1, [0.1, 0.2, 0.3]))
    values = {1: 1.5, 2: 1.6, 3: 3.1}
    for i in order:
        ledger.record_reading(NoisyReading(7, i, values[i]))
    assert ledger.compute_final_bill(7) == _ledger(hand_period).compute_final_bill(7)


@given(st.permutations(range(1, 97)))
def test_permuted_arrivals_give_identical_bills(perm):
    cfg = BillingPeriodConfig(15, 1)
    rng = random.Random(5)
    values = [rng.uniform(-3, 10) for _ in range(96)]
    prices = [rng.uniform(0.02, 1) for _ in range(96)]
    bills = []
    for order in (range(1, 97), perm):
        ledger = ProviderLedger(cfg)
        ledger.register_meter(1, 1)
        ledger.issue_schedule(TariffSchedule(1, prices))
        for i in order:
            ledger.record_reading(NoisyReading(1, i, values[i - 1]))
        bills.append(ledger.compute_final_bill(1))
    assert bills[0] == bills[1]


def test_ledger_errors(hand_period):
    ledger = ProviderLedger(hand_period)
    ledger.register_meter(7, 1)
    with pytest.raises(ValidationError):
        ledger.register_meter(7, 1)
    with pytest.raises(UnknownMeter):
        ledger.record_reading(NoisyReading(8, 1, 1.0))
    with pytest.raises(TypeError):
        ledger.record_reading((7, 1, 1.0))
    ledger.record_reading(NoisyReading(7, 1, 1.0))
    with pytest.raises(DuplicateReading):
        ledger.record_reading(NoisyReading(7, 1, 2.0))
    with pytest.raises(SequenceError):
        ledger.record_reading(NoisyReading(7, 4, 2.0))
    with pytest.raises(IncompletePeriod):
        ledger.record_reading(NoisyReading(7, 3, 2.0, replacement=True))
    with pytest.raises(IncompletePeriod):
        ledger.compute_final_bill(7)
    with pytest.raises(IncompletePeriod):
        ledger.compute_final_bill(99)


def test_tariff_issue_rules(hand_period):
    ledger = ProviderLedger(hand_period)
    ledger.issue_tariff(1, 1, 0.1)
    with pytest.raises(SequenceError):
        ledger.issue_tariff(1, 3, 0.3)
    with pytest.raises(PriceNotPositive):
        ledger.issue_tariff(1, 2, 0.0)
    with pytest.raises(IncompletePeriod):
        ledger.schedule_for(1)
    ledger.issue_tariff(1, 2, 0.2)
    ledger.issue_tariff(1, 3, 0.3)
    assert ledger.schedule_for(1).prices == (0.1, 0.2, 0.3)
    assert len(ledger.tariff_history[1]) == 1


def test_rebill_guards(hand_period):
    ledger = _ledger(hand_period)
    ledger.compute_final_bill(7)
    new = TariffSchedule(1, [0.2] * 3)
    with pytest.raises(ReplacementOutOfPlace):
        ledger.rebill(7, new, NoisyReading(7, 3, 2.9))
    with pytest.raises(ReplacementOutOfPlace):
        ledger.record_reading(NoisyReading(7, 2, 2.9, replacement=True))
    with pytest.raises(ValidationError):
        ledger.rebill(7, TariffSchedule(2, [0.2] * 3), NoisyReading(7, 3, 2.9, replacement=True))
    with pytest.raises(ValidationError):
        ledger.rebill(7, new, NoisyReading(8, 3, 2.9, replacement=True))
    with pytest.raises(IncompletePeriod):
        ledger.rebill(99, new, NoisyReading(99, 3, 2.9, replacement=True))
    assert ledger.accounts[7].readings[2] == 3.1


@pytest.mark.parametrize("value, text", [(1.005, "1.00"), (1.015, "1.02"), (1.025, "1.02"), (2.5, "2.50"), (-0.125, "-0.12")])
def test_round_bill(value, text):
    assert round_bill(value) == Decimal(text)


def test_bill_file_round_trip(tmp_path):
    records = [BillRecord(3, 0, 1.4, True), BillRecord(1, 0, 12.345678, False)]
    path = tmp_path / "bills.csv"
    write_bills_csv(path, records)
    assert path.read_text().splitlines() == [
        "meter_id,period_id,final_bill,adjusted",
        "1,0,12.35,false",
        "3,0,1.40,true",
    ]
    back = read_bills_csv(path)
    assert [(r.meter, r.adjusted) for r in back] == [(1, False), (3, True)]
