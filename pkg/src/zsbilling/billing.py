"""Utility-provider ledger: tariff issuance, noisy-reading collection and billing.

The ledger only ever receives :class:`NoisyReading` objects; there is no
method that accepts a true consumption series.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from numbers import Real
from pathlib import Path
from typing import Iterable

from .core_types import BillingPeriodConfig, NoisyReading, TariffSchedule, check_id, validate_tariff_schedule
from .errors import (
    DuplicateReading,
    IncompletePeriod,
    PriceNotPositive,
    ReplacementOutOfPlace,
    SequenceError,
    UnknownMeter,
    ValidationError,
)


@dataclass(frozen=True)
class TariffNotice:
    """A price issued to every meter of an area for one interval."""

    area: int
    interval_index: int
    price: Real


@dataclass
class MeterAccount:
    area: int
    readings: list  # index i-1 holds nc_i, None until received
    partial_bills: list | None = None
    final_bill: Real | None = None
    new_final_bill: Real | None = None
    adjusted_tariffs: TariffSchedule | None = None

    @property
    def complete(self) -> bool:
        return all(r is not None for r in self.readings)


@dataclass
class ProviderLedger:
    config: BillingPeriodConfig
    period_id: int = 0
    accounts: dict[int, MeterAccount] = field(default_factory=dict)
    tariffs: dict[int, list] = field(default_factory=dict)
    tariff_history: dict[int, list[TariffSchedule]] = field(default_factory=dict)

    def register_meter(self, meter: int, area: int) -> None:
        check_id(meter, "meter")
        check_id(area, "area")
        if meter in self.accounts:
            raise ValidationError(f"meter {meter} already registered")
        self.accounts[meter] = MeterAccount(area, [None] * self.config.interval_count)

    def _account(self, meter: int) -> MeterAccount:
        try:
            return self.accounts[meter]
        except KeyError:
            raise UnknownMeter(f"meter {meter} is not registered") from None

    # -- tariffs ---------------------------------------------------------

    def issue_tariff(self, area: int, index: int, price: Real) -> TariffNotice:
        check_id(area, "area")
        if not price > 0:
            raise PriceNotPositive(f"area {area}: price {price!r} at interval {index}")
        prices = self.tariffs.setdefault(area, [])
        if index != len(prices) + 1 or index > self.config.interval_count:
            raise SequenceError(f"area {area}: expected tariff for interval {len(prices) + 1}, got {index}")
        prices.append(price)
        if len(prices) == self.config.interval_count:
            self.tariff_history.setdefault(area, []).append(TariffSchedule(area, prices))
        return TariffNotice(area, index, price)

    def issue_schedule(self, schedule: TariffSchedule) -> list[TariffNotice]:
        validate_tariff_schedule(schedule, self.config)
        check_id(schedule.area, "area")
        if self.tariffs.get(schedule.area):
            raise SequenceError(f"area {schedule.area}: schedule issued after per-interval tariffs")
        self.tariffs[schedule.area] = list(schedule.prices)
        self.tariff_history.setdefault(schedule.area, []).append(schedule)
        return [TariffNotice(schedule.area, i, p) for i, p in enumerate(schedule.prices, start=1)]

    def schedule_for(self, area: int) -> TariffSchedule:
        prices = self.tariffs.get(area, [])
        if len(prices) != self.config.interval_count:
            raise IncompletePeriod(f"area {area}: {len(prices)} of {self.config.interval_count} tariffs issued")
        return TariffSchedule(area, prices)

    # -- readings --------------------------------------------------------

    def record_reading(self, reading: NoisyReading) -> None:
        if not isinstance(reading, NoisyReading):
            raise TypeError("the ledger only accepts NoisyReading values")
        acct = self._account(reading.meter)
        L = self.config.interval_count
        if reading.replacement:
            if reading.interval_index != L:
                raise ReplacementOutOfPlace(
                    f"meter {reading.meter}: replacement for interval {reading.interval_index}, only {L} allowed"
                )
            if not acct.complete:
                raise IncompletePeriod(f"meter {reading.meter}: replacement before the period is complete")
            acct.readings[L - 1] = reading.value
            return
        if not 1 <= reading.interval_index <= L:
            raise SequenceError(f"meter {reading.meter}: interval {reading.interval_index} outside 1..{L}")
        if acct.readings[reading.interval_index - 1] is not None:
            raise DuplicateReading(f"meter {reading.meter}: interval {reading.interval_index} already recorded")
        acct.readings[reading.interval_index - 1] = reading.value

    # -- billing ---------------------------------------------------------

    def _complete_account(self, meter: int) -> MeterAccount:
        acct = self.accounts.get(meter)
        if acct is None:
            raise IncompletePeriod(f"meter {meter}: no readings recorded")
        if not acct.complete:
            missing = sum(r is None for r in acct.readings)
            raise IncompletePeriod(f"meter {meter}: {missing} readings missing")
        return acct

    def compute_partial_bills(self, meter: int, tariffs: TariffSchedule | None = None) -> list:
        acct = self._complete_account(meter)
        schedule = tariffs if tariffs is not None else self.schedule_for(acct.area)
        nb = [nc * trf for nc, trf in zip(acct.readings, schedule.prices)]
        acct.partial_bills = nb
        return nb

    def compute_final_bill(self, meter: int) -> Real:
        nb = self.compute_partial_bills(meter)
        total = 0
        for x in nb:  # ascending interval order, fixed for reproducibility
            total = total + x
        self.accounts[meter].final_bill = total
        return total

    def rebill(self, meter: int, new_tariffs: TariffSchedule, replacement: NoisyReading) -> Real:
        acct = self._complete_account(meter)
        if replacement.meter != meter:
            raise ValidationError(f"replacement for meter {replacement.meter} passed to rebill of {meter}")
        if not replacement.replacement or replacement.interval_index != self.config.interval_count:
            raise ReplacementOutOfPlace(
                f"meter {meter}: rebill needs a flagged replacement for interval {self.config.interval_count}"
            )
        validate_tariff_schedule(new_tariffs, self.config)
        if new_tariffs.area != acct.area:
            raise ValidationError(f"meter {meter} is in area {acct.area}, tariffs are for area {new_tariffs.area}")
        self.record_reading(replacement)
        nb = self.compute_partial_bills(meter, new_tariffs)
        total = 0
        for x in nb:
            total = total + x
        acct.new_final_bill = total
        acct.adjusted_tariffs = new_tariffs
        return total

    def record_adjustment(self, schedule: TariffSchedule) -> None:
        self.tariff_history.setdefault(schedule.area, []).append(schedule)

    def footprint_values(self) -> int:
        """Number of scalar values held: readings, partial bills, bills and tariffs."""
        n = 0
        for acct in self.accounts.values():
            n += sum(r is not None for r in acct.readings)
            n += len(acct.partial_bills or ())
            n += (acct.final_bill is not None) + (acct.new_final_bill is not None)
        n += sum(len(p) for p in self.tariffs.values())
        return n


@dataclass(frozen=True)
class BillRecord:
    meter: int
    period_id: int
    final_bill: Real
    adjusted: bool


def round_bill(value: Real) -> Decimal:
    return Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN)


def write_bills_csv(path: str | Path, records: Iterable[BillRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["meter_id", "period_id", "final_bill", "adjusted"])
        for r in sorted(records, key=lambda r: r.meter):
            writer.writerow([r.meter, r.period_id, str(round_bill(r.final_bill)), "true" if r.adjusted else "false"])


def read_bills_csv(path: str | Path) -> list[BillRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        BillRecord(int(r["meter_id"]), int(r["period_id"]), Decimal(r["final_bill"]), r["adjusted"] == "true")
        for r in rows
    ]
