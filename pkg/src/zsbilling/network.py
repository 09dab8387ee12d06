"""Discrete-event harness: meters -> area aggregators -> provider.

Time is logical: tick ``i`` carries interval ``i`` of the billing period; the
bill broadcast happens at tick ``L + 1`` and a tariff adjustment round at the
tick after that. Channels are reliable and ordered, and every delivery is
appended to the event trace as ``tick,kind,src,dst,bytes``.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import logging
import struct
from dataclasses import dataclass, field
from typing import Mapping

from .billing import BillRecord, ProviderLedger
from .core_types import BillingPeriodConfig, ConsumptionSeries, NoisyReading, TariffSchedule, validate_tariff_schedule
from .errors import AdjustmentBudgetExhausted, BillingError, PhaseError, RoutingError, ValidationError
from .meter import SmartMeter
from .noise import SeedMaterial, derive_stream

logger = logging.getLogger(__name__)

PROVIDER = "UP"
_F64 = struct.Struct("<d")


class Kind(enum.Enum):
    TARIFF_DOWN = "TariffDown"
    TARIFF_VECTOR_DOWN = "TariffVectorDown"
    READING_UP = "ReadingUp"
    BILL_DOWN = "BillDown"


def meter_node(meter: int) -> str:
    return f"SM:{meter}"


def aggregator_node(area: int) -> str:
    return f"AGG:{area}"


def encode_values(values) -> bytes:
    return b"".join(_F64.pack(float(v)) for v in values)


def decode_values(payload: bytes) -> list[float]:
    return [v for (v,) in _F64.iter_unpack(payload)]


@dataclass(frozen=True)
class Message:
    kind: Kind
    src: str
    dst: str
    interval_index: int
    payload: bytes
    area: int
    meter: int | None = None  # final meter for unicast; None for area broadcasts and uplink from `src`
    replacement: bool = False

    def hop(self, src: str, dst: str, **changes) -> "Message":
        return Message(self.kind, src, dst, self.interval_index, self.payload, self.area,
                       changes.get("meter", self.meter), self.replacement)


@dataclass
class Aggregator:
    """Per-area relay. Forwards payload bytes untouched."""

    area: int
    meters: list[int]

    @property
    def node(self) -> str:
        return aggregator_node(self.area)

    def relay(self, message: Message) -> list[Message]:
        if message.area != self.area or message.dst != self.node:
            raise RoutingError(f"{self.node} cannot route {message.kind.value} for area {message.area}")
        if message.kind is Kind.READING_UP:
            if message.meter not in self.meters:
                raise RoutingError(f"{self.node}: meter {message.meter} is not in this area")
            return [message.hop(self.node, PROVIDER)]
        if message.kind is Kind.BILL_DOWN:
            if message.meter not in self.meters:
                raise RoutingError(f"{self.node}: meter {message.meter} is not in this area")
            return [message.hop(self.node, meter_node(message.meter))]
        return [message.hop(self.node, meter_node(m), meter=m) for m in self.meters]


@dataclass
class SimConfig:
    areas: Mapping[int, int]  # meter id -> area id
    period: BillingPeriodConfig = field(default_factory=BillingPeriodConfig)
    sigma: float = 1.0
    secrets: Mapping[int, bytes] = field(default_factory=dict)
    period_id: int = 0
    max_adjustments: int = 1
    scenario: int = 1

    def validate(self) -> "SimConfig":
        if not self.areas:
            raise ValidationError("at least one meter is required")
        missing = sorted(set(self.areas) - set(self.secrets))
        if missing:
            raise ValidationError(f"no seed secret for meters {missing[:5]}")
        if self.scenario not in (1, 2):
            raise ValidationError(f"scenario must be 1 or 2, got {self.scenario}")
        return self


@dataclass
class AdjustmentOutcome:
    new_bills: dict[int, float]
    rejected: dict[int, BillingError]


class Simulation:
    """One billing period across all meters, driven tick by tick."""

    def __init__(
        self,
        config: SimConfig,
        consumption: Mapping[int, ConsumptionSeries],
        tariffs: Mapping[int, TariffSchedule],
        record_trace: bool = True,
        streams: Mapping | None = None,
    ) -> None:
        self.config = config.validate()
        period = config.period
        self.consumption = {}
        for meter in config.areas:
            if meter not in consumption:
                raise ValidationError(f"no consumption series for meter {meter}")
            self.consumption[meter] = consumption[meter].validate(period).readings
        self.tariffs = {}
        for area in sorted(set(config.areas.values())):
            if area not in tariffs:
                raise ValidationError(f"no tariff schedule for area {area}")
            self.tariffs[area] = validate_tariff_schedule(tariffs[area], period)

        self.aggregators = {
            area: Aggregator(area, sorted(m for m, a in config.areas.items() if a == area)) for area in self.tariffs
        }
        self.ledger = ProviderLedger(period, config.period_id)
        self.meters: dict[int, SmartMeter] = {}
        for meter in sorted(config.areas):
            if streams is not None:
                stream = streams[meter]
            else:
                seed = SeedMaterial(config.secrets[meter], meter, config.period_id)
                stream = derive_stream(seed, config.sigma)
            self.meters[meter] = SmartMeter(
                meter, config.areas[meter], period, stream, config.max_adjustments
            )
            self.ledger.register_meter(meter, config.areas[meter])

        self.record_trace = record_trace
        self.on_deliver = None  # optional callable(tick, message), e.g. a wire tap in tests
        self.trace: list[str] = []
        self.tick = 0
        self.bills: dict[int, float] = {}
        self.new_bills: dict[int, float] = {}
        self.adjusted_areas: set[int] = set()
        self._queue: list = []
        self._seq = itertools.count()
        self._pending_adjustment: dict[int, TariffSchedule] = {}
        self._rejected: dict[int, BillingError] = {}
        self._round_bills: dict[int, float] = {}

    @classmethod
    def restore(cls, config: SimConfig, tariffs: Mapping[int, TariffSchedule], meters: Mapping[int, SmartMeter],
                ledger: ProviderLedger, bills: Mapping[int, float], new_bills: Mapping[int, float],
                tick: int, adjusted_areas=()) -> "Simulation":
        """Rebuild a simulation after its billing period, e.g. from a saved state file."""
        sim = cls.__new__(cls)
        sim.config = config
        sim.consumption = {}
        sim.tariffs = dict(tariffs)
        sim.aggregators = {
            area: Aggregator(area, sorted(m for m, a in config.areas.items() if a == area)) for area in sim.tariffs
        }
        sim.ledger = ledger
        sim.meters = dict(meters)
        sim.record_trace = True
        sim.on_deliver = None
        sim.trace = []
        sim.tick = tick
        sim.bills = dict(bills)
        sim.new_bills = dict(new_bills)
        sim.adjusted_areas = set(adjusted_areas)
        sim._queue = []
        sim._seq = itertools.count()
        sim._pending_adjustment = {}
        sim._rejected = {}
        sim._round_bills = {}
        return sim

    # -- event plumbing --------------------------------------------------

    def send(self, message: Message) -> None:
        heapq.heappush(self._queue, (self.tick, next(self._seq), message))

    def _drain(self) -> None:
        while self._queue:
            tick, _, msg = heapq.heappop(self._queue)
            if self.record_trace:
                self.trace.append(f"{tick},{msg.kind.value},{msg.src},{msg.dst},{len(msg.payload)}")
            if self.on_deliver is not None:
                self.on_deliver(tick, msg)
            self._deliver(msg)

    def _deliver(self, msg: Message) -> None:
        if msg.dst == PROVIDER:
            self._provider_receive(msg)
        elif msg.dst.startswith("AGG:"):
            agg = self.aggregators.get(msg.area)
            if agg is None:
                raise RoutingError(f"no aggregator for area {msg.area}")
            for out in agg.relay(msg):
                self.send(out)
        else:
            self._meter_receive(msg)

    def _meter_receive(self, msg: Message) -> None:
        meter = self.meters[msg.meter]
        L = self.config.period.interval_count
        if msg.kind is Kind.TARIFF_DOWN:
            (price,) = decode_values(msg.payload)
            meter.show_price(msg.interval_index, price)
            i = msg.interval_index
            c = self.consumption[meter.id][i - 1]
            if i < L:
                reading = meter.report_interval(c, price, i)
            else:
                reading = meter.close_period(c, price)
            self._uplink(meter, reading)
        elif msg.kind is Kind.TARIFF_VECTOR_DOWN:
            schedule = self._pending_adjustment[meter.area]
            try:
                reading = meter.apply_tariff_adjustment(schedule)
            except (AdjustmentBudgetExhausted, PhaseError) as exc:
                logger.info("meter %d rejected adjustment: %s", meter.id, exc)
                self._rejected[meter.id] = exc
                return
            self._uplink(meter, reading)
        elif msg.kind is Kind.BILL_DOWN:
            logger.debug("meter %d received bill %r", meter.id, decode_values(msg.payload)[0])

    def _uplink(self, meter: SmartMeter, reading: NoisyReading) -> None:
        self.send(Message(Kind.READING_UP, meter_node(meter.id), aggregator_node(meter.area),
                          reading.interval_index, encode_values([reading.value]), meter.area,
                          meter.id, reading.replacement))

    def _provider_receive(self, msg: Message) -> None:
        (value,) = decode_values(msg.payload)
        reading = NoisyReading(msg.meter, msg.interval_index, value, msg.replacement)
        if msg.replacement:
            schedule = self._pending_adjustment[msg.area]
            bill = self.ledger.rebill(msg.meter, schedule, reading)
            self.new_bills[msg.meter] = self._round_bills[msg.meter] = bill
        else:
            self.ledger.record_reading(reading)

    def _send_bills(self, bills: Mapping[int, float]) -> None:
        for meter in sorted(bills):
            area = self.config.areas[meter]
            self.send(Message(Kind.BILL_DOWN, PROVIDER, aggregator_node(area), self.config.period.interval_count,
                              encode_values([bills[meter]]), area, meter))
        self._drain()

    # -- scenarios -------------------------------------------------------

    def run_period(self) -> dict[int, float]:
        """Scenario one: per-interval tariffs, perturbed reports, final bills."""
        L = self.config.period.interval_count
        for i in range(1, L + 1):
            self.tick = i
            for area in sorted(self.tariffs):
                notice = self.ledger.issue_tariff(area, i, self.tariffs[area].price(i))
                self.send(Message(Kind.TARIFF_DOWN, PROVIDER, aggregator_node(area), i,
                                  encode_values([notice.price]), area))
            self._drain()
        self.tick = L + 1
        self.bills = {m: self.ledger.compute_final_bill(m) for m in sorted(self.meters)}
        self._send_bills(self.bills)
        return dict(self.bills)

    def adjust_tariffs(self, new_tariffs: Mapping[int, TariffSchedule]) -> AdjustmentOutcome:
        """Scenario two round: broadcast new vectors, collect replacements, rebill."""
        if not self.bills:
            raise ValidationError("run the billing period before adjusting tariffs")
        for area in sorted(new_tariffs):
            if area not in self.tariffs:
                raise ValidationError(f"no meters in area {area}")
            validate_tariff_schedule(new_tariffs[area], self.config.period)
        self._rejected = {}
        self._round_bills = {}
        self._pending_adjustment = dict(new_tariffs)
        self.tick += 1
        for area in sorted(new_tariffs):
            schedule = new_tariffs[area]
            self.ledger.record_adjustment(schedule)
            if tuple(schedule.prices) != tuple(self.tariffs[area].prices):
                self.adjusted_areas.add(area)
            self.send(Message(Kind.TARIFF_VECTOR_DOWN, PROVIDER, aggregator_node(area),
                              self.config.period.interval_count, encode_values(schedule.prices), area))
        self._drain()
        fresh = dict(self._round_bills)
        self._send_bills(fresh)
        return AdjustmentOutcome(fresh, dict(self._rejected))

    def write_trace(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("tick,kind,src,dst,bytes\n")
            for line in self.trace:
                fh.write(line + "\n")

    def purge_meters(self) -> None:
        for meter in self.meters.values():
            meter.purge()

    def bill_records(self) -> list[BillRecord]:
        out = []
        for meter in sorted(self.meters):
            if meter in self.new_bills:
                adjusted = self.config.areas[meter] in self.adjusted_areas
                out.append(BillRecord(meter, self.config.period_id, self.new_bills[meter], adjusted))
            else:
                out.append(BillRecord(meter, self.config.period_id, self.bills[meter], False))
        return out


def run_scenario_one(config: SimConfig, consumption, tariffs, **kwargs) -> Simulation:
    sim = Simulation(config, consumption, tariffs, **kwargs)
    sim.run_period()
    return sim


def run_scenario_two(config: SimConfig, consumption, tariffs, new_tariffs, **kwargs) -> Simulation:
    sim = run_scenario_one(config, consumption, tariffs, **kwargs)
    sim.adjust_tariffs(new_tariffs)
    return sim
