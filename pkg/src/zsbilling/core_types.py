"""Domain value types and billing-period arithmetic.

Energy, tariff, noise and bill values are plain Python numbers. Production
paths use ``float``; the same code accepts :class:`fractions.Fraction` so
tests can replay a period in exact rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from numbers import Real
from typing import Sequence

from .errors import LengthMismatch, PriceNotPositive, ValidationError

MINUTES_PER_DAY = 24 * 60
MAX_ID = 2**64 - 1


def compute_interval_count(interval_minutes: int, days: int) -> int:
    """Number of reporting intervals in a billing period.

    >>> compute_interval_count(15, 1)
    96
    """
    if isinstance(interval_minutes, bool) or not isinstance(interval_minutes, int):
        raise ValidationError(f"interval_minutes must be an integer, got {interval_minutes!r}")
    if isinstance(days, bool) or not isinstance(days, int):
        raise ValidationError(f"days must be an integer, got {days!r}")
    if not 1 <= interval_minutes <= MINUTES_PER_DAY:
        raise ValidationError(f"interval_minutes must be in [1, 1440], got {interval_minutes}")
    if days < 1:
        raise ValidationError(f"days must be >= 1, got {days}")
    return math.ceil(MINUTES_PER_DAY / interval_minutes) * days


@dataclass(frozen=True)
class BillingPeriodConfig:
    interval_minutes: int = 15
    days: int = 30
    interval_count: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "interval_count", compute_interval_count(self.interval_minutes, self.days))

    @property
    def L(self) -> int:
        return self.interval_count


def check_id(value: int, what: str = "id") -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= MAX_ID:
        raise ValidationError(f"{what} must be an unsigned 64-bit integer, got {value!r}")
    return value


@dataclass(frozen=True)
class TariffSchedule:
    """Per-area unit prices, one per interval (index 1 is ``prices[0]``)."""

    area: int
    prices: tuple

    def __init__(self, area: int, prices: Sequence[Real]) -> None:
        object.__setattr__(self, "area", check_id(area, "area"))
        object.__setattr__(self, "prices", tuple(prices))

    def __len__(self) -> int:
        return len(self.prices)

    def price(self, index: int) -> Real:
        """Price at 1-based interval ``index``."""
        return self.prices[index - 1]


def validate_tariff_schedule(schedule: TariffSchedule, config: BillingPeriodConfig) -> TariffSchedule:
    if len(schedule.prices) != config.interval_count:
        raise LengthMismatch(
            f"area {schedule.area}: tariff schedule has {len(schedule.prices)} prices, expected {config.interval_count}"
        )
    for i, p in enumerate(schedule.prices, start=1):
        if not math.isfinite(p) or not p > 0:
            raise PriceNotPositive(f"area {schedule.area}: price at interval {i} is {p!r}")
    return schedule


@dataclass(frozen=True)
class ConsumptionSeries:
    meter: int
    readings: tuple

    def __init__(self, meter: int, readings: Sequence[Real]) -> None:
        object.__setattr__(self, "meter", check_id(meter, "meter"))
        values = tuple(readings)
        for i, c in enumerate(values, start=1):
            if not math.isfinite(c) or c < 0:
                raise ValidationError(f"meter {meter}: reading {i} must be finite and >= 0, got {c!r}")
        object.__setattr__(self, "readings", values)

    def __len__(self) -> int:
        return len(self.readings)

    def validate(self, config: BillingPeriodConfig) -> "ConsumptionSeries":
        if len(self.readings) != config.interval_count:
            raise LengthMismatch(
                f"meter {self.meter}: {len(self.readings)} readings, expected {config.interval_count}"
            )
        return self


@dataclass(frozen=True)
class NoisyReading:
    """A perturbed reading as seen by aggregators and the provider.

    ``replacement`` is set only on the re-perturbed last reading produced by a
    tariff adjustment.
    """

    meter: int
    interval_index: int
    value: Real
    replacement: bool = False

    def __post_init__(self) -> None:
        if self.interval_index < 1:
            raise ValidationError(f"interval_index must be >= 1, got {self.interval_index}")
        if not math.isfinite(self.value):
            raise ValidationError(f"noisy value must be finite, got {self.value!r}")
