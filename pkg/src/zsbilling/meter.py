"""Smart-meter state machine for one billing period.

Intervals ``1..L-1`` are perturbed with fresh noise; interval ``L`` is closed
with computed noise so the tariff-weighted noise over the period sums to zero.
After close the meter keeps its raw noise values and the true last reading so
that one tariff adjustment can re-perturb the last reading. ``purge`` erases
them at the end of the retention window.
"""

from __future__ import annotations

import enum
import logging
from fractions import Fraction
from numbers import Real

from .core_types import BillingPeriodConfig, NoisyReading, TariffSchedule, check_id, validate_tariff_schedule
from .errors import AdjustmentBudgetExhausted, PhaseError, PriceNotPositive, SequenceError, ValidationError
from .noise import closing_noise, closing_noise_adjusted

logger = logging.getLogger(__name__)


class Phase(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"
    PURGED = "purged"


class SmartMeter:
    """Per-meter protocol state. Single owner; not thread-safe.

    ``stream`` is anything with a ``next()`` returning the next noise value,
    normally a :class:`~zsbilling.noise.GaussianStream`. With ``exact=True``
    every input and drawn value is converted to :class:`Fraction` so the
    whole period runs in rational arithmetic; ``exact`` may also name another
    exact rational type with the same operators (e.g. ``gmpy2.mpq``).
    """

    def __init__(
        self,
        meter_id: int,
        area: int,
        config: BillingPeriodConfig,
        stream,
        max_adjustments: int = 1,
        exact: bool | type = False,
    ) -> None:
        self.id = check_id(meter_id, "meter")
        self.area = check_id(area, "area")
        self.config = config
        self.stream = stream
        if max_adjustments < 0:
            raise ValidationError("max_adjustments must be >= 0")
        if max_adjustments > 1:
            logger.warning(
                "meter %d: max_adjustments=%d; every adjustment publishes another linear equation in the "
                "retained noise and the last true reading",
                self.id,
                max_adjustments,
            )
        self.max_adjustments = max_adjustments
        self.exact = bool(exact)
        self._rational = Fraction if exact is True else (exact or None)
        self.retained_noise: list = []
        self.weighted_sum: Real = self._rational(0) if self.exact else 0.0
        self.last_true_reading: Real | None = None
        self.last_noise: Real | None = None
        self.phase = Phase.OPEN
        self.adjustments_applied = 0

    def _num(self, x: Real) -> Real:
        return self._rational(x) if self.exact else x

    @property
    def reported(self) -> int:
        return len(self.retained_noise)

    def _require(self, phase: Phase, action: str) -> None:
        if self.phase is not phase:
            raise PhaseError(f"meter {self.id}: cannot {action} in phase {self.phase.value}")

    def show_price(self, index: int, price: Real) -> None:
        """In-home display hook; carries no state."""
        logger.debug("meter %d: interval %d price %r", self.id, index, price)

    def report_interval(self, c: Real, trf: Real, index: int) -> NoisyReading:
        if self.phase is not Phase.OPEN:
            self._require(Phase.OPEN, "report")
        expected = len(self.retained_noise) + 1
        if index != expected or index >= self.config.interval_count:
            raise SequenceError(f"meter {self.id}: expected interval {expected}, got {index}")
        if not trf > 0:
            raise PriceNotPositive(f"meter {self.id}: tariff {trf!r} at interval {index}")
        if not c >= 0:
            raise ValidationError(f"meter {self.id}: reading {c!r} at interval {index} is negative")
        if self.exact:
            c, trf = self._rational(c), self._rational(trf)
            s = self._rational(self.stream.next())
        else:
            s = self.stream.next()
        self.retained_noise.append(s)
        self.weighted_sum = self.weighted_sum + s * trf
        return NoisyReading(self.id, index, c + s)

    def close_period(self, c_last: Real, trf_last: Real) -> NoisyReading:
        self._require(Phase.OPEN, "close the period")
        L = self.config.interval_count
        if self.reported != L - 1:
            raise SequenceError(f"meter {self.id}: close after {self.reported} reports, need {L - 1}")
        if not c_last >= 0:
            raise ValidationError(f"meter {self.id}: last reading {c_last!r} is negative")
        c_last, trf_last = self._num(c_last), self._num(trf_last)
        s_last = closing_noise(self.weighted_sum, trf_last)
        self.last_true_reading = c_last
        self.last_noise = s_last
        self.phase = Phase.CLOSED
        return NoisyReading(self.id, L, c_last + s_last)

    def apply_tariff_adjustment(self, new_tariffs: TariffSchedule) -> NoisyReading:
        self._require(Phase.CLOSED, "apply a tariff adjustment")
        if self.adjustments_applied >= self.max_adjustments:
            raise AdjustmentBudgetExhausted(
                f"meter {self.id}: {self.adjustments_applied} of {self.max_adjustments} adjustments used"
            )
        validate_tariff_schedule(new_tariffs, self.config)
        prices = [self._num(p) for p in new_tariffs.prices]
        s_new = closing_noise_adjusted(self.retained_noise, prices)
        self.adjustments_applied += 1
        self.last_noise = s_new
        return NoisyReading(self.id, self.config.interval_count, self.last_true_reading + s_new, replacement=True)

    def purge(self) -> None:
        if self.phase is Phase.PURGED:
            return
        self._require(Phase.CLOSED, "purge")
        self.retained_noise = []
        self.weighted_sum = 0
        self.last_true_reading = None
        self.last_noise = None
        self.stream = None
        self.phase = Phase.PURGED

    def footprint_values(self) -> int:
        """Number of scalar values currently retained by the meter."""
        held = len(self.retained_noise) + 1  # running weighted sum
        if self.last_true_reading is not None:
            held += 1
        return held


def run_meter_period(meter: SmartMeter, consumption, tariffs) -> list[NoisyReading]:
    """Drive one full period through ``meter`` and return its L noisy readings."""
    L = meter.config.interval_count
    out = [meter.report_interval(consumption[i - 1], tariffs[i - 1], i) for i in range(1, L)]
    out.append(meter.close_period(consumption[L - 1], tariffs[L - 1]))
    return out
