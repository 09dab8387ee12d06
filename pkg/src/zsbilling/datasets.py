"""CSV ingestion and synthetic data for consumption, tariffs and area maps.

Formats (all with a header row):

* consumption: ``meter_id,interval_index,kwh`` -- dense, one row per meter and interval
* tariffs:     ``area_id,interval_index,price`` -- every area covers 1..L
* areas:       ``meter_id,area_id``
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .core_types import BillingPeriodConfig, ConsumptionSeries, TariffSchedule, check_id, validate_tariff_schedule
from .errors import DatasetError, ValidationError


@dataclass(frozen=True)
class ConsumptionDataset:
    config: BillingPeriodConfig
    series: Mapping[int, ConsumptionSeries]

    def rows(self):
        for meter in sorted(self.series):
            for i, kwh in enumerate(self.series[meter].readings, start=1):
                yield meter, i, kwh

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["meter_id", "interval_index", "kwh"])
            for meter, i, kwh in self.rows():
                writer.writerow([meter, i, repr(float(kwh))])


def read_rows(path: str | Path, header: list[str]):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [h.strip() for h in first] != header:
            raise DatasetError(f"{path}: expected header {','.join(header)}")
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DatasetError(f"{path}:{rowno}: expected {len(header)} columns, got {len(row)}")
            yield rowno, [cell.strip() for cell in row]


def _parse_int(text: str, what: str, where: str) -> int:
    try:
        return check_id(int(text), what)
    except (ValueError, ValidationError):
        raise DatasetError(f"{where}: bad {what} {text!r}") from None


def _parse_float(text: str, what: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DatasetError(f"{where}: bad {what} {text!r}") from None
    if not math.isfinite(value):
        raise DatasetError(f"{where}: {what} must be finite")
    return value


def load_consumption_csv(path: str | Path, config: BillingPeriodConfig) -> dict[int, ConsumptionSeries]:
    L = config.interval_count
    data: dict[int, list] = {}
    for rowno, (m, i, kwh) in read_rows(path, ["meter_id", "interval_index", "kwh"]):
        where = f"{path}:{rowno}"
        meter = _parse_int(m, "meter_id", where)
        index = _parse_int(i, "interval_index", where)
        value = _parse_float(kwh, "kwh", where)
        if not 1 <= index <= L:
            raise DatasetError(f"{where}: interval_index {index} outside 1..{L}")
        if value < 0:
            raise DatasetError(f"{where}: negative kwh {value} for meter {meter}")
        slots = data.setdefault(meter, [None] * L)
        if slots[index - 1] is not None:
            raise DatasetError(f"{where}: duplicate row for meter {meter} interval {index}")
        slots[index - 1] = value
    if not data:
        raise DatasetError(f"{path}: no rows")
    out = {}
    for meter in sorted(data):
        missing = [i for i, v in enumerate(data[meter], start=1) if v is None]
        if missing:
            raise DatasetError(f"{path}: meter {meter} is missing interval {missing[0]} ({len(missing)} missing)")
        out[meter] = ConsumptionSeries(meter, data[meter])
    return out


def load_tariffs_csv(path: str | Path, config: BillingPeriodConfig) -> dict[int, TariffSchedule]:
    L = config.interval_count
    data: dict[int, list] = {}
    for rowno, (a, i, price) in read_rows(path, ["area_id", "interval_index", "price"]):
        where = f"{path}:{rowno}"
        area = _parse_int(a, "area_id", where)
        index = _parse_int(i, "interval_index", where)
        value = _parse_float(price, "price", where)
        if not 1 <= index <= L:
            raise DatasetError(f"{where}: interval_index {index} outside 1..{L}")
        slots = data.setdefault(area, [None] * L)
        if slots[index - 1] is not None:
            raise DatasetError(f"{where}: duplicate tariff for area {area} interval {index}")
        slots[index - 1] = value
    if not data:
        raise DatasetError(f"{path}: no rows")
    out = {}
    for area in sorted(data):
        missing = [i for i, v in enumerate(data[area], start=1) if v is None]
        if missing:
            raise DatasetError(f"{path}: area {area} has no tariff for interval {missing[0]}")
        out[area] = validate_tariff_schedule(TariffSchedule(area, data[area]), config)
    return out


def write_tariffs_csv(path: str | Path, tariffs: Mapping[int, TariffSchedule]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["area_id", "interval_index", "price"])
        for area in sorted(tariffs):
            for i, p in enumerate(tariffs[area].prices, start=1):
                writer.writerow([area, i, repr(float(p))])


def load_areas_csv(path: str | Path) -> dict[int, int]:
    areas = {}
    for rowno, (m, a) in read_rows(path, ["meter_id", "area_id"]):
        where = f"{path}:{rowno}"
        meter = _parse_int(m, "meter_id", where)
        if meter in areas:
            raise DatasetError(f"{where}: meter {meter} listed twice")
        areas[meter] = _parse_int(a, "area_id", where)
    return areas


def write_areas_csv(path: str | Path, areas: Mapping[int, int]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["meter_id", "area_id"])
        for meter in sorted(areas):
            writer.writerow([meter, areas[meter]])


# -- synthetic data --------------------------------------------------------


def _hour_of_day(config: BillingPeriodConfig) -> np.ndarray:
    per_day = config.interval_count // config.days
    minutes = (np.arange(config.interval_count) % per_day) * config.interval_minutes
    return (minutes + config.interval_minutes / 2) / 60.0


def _bump(hours: np.ndarray, centre: float, width: float) -> np.ndarray:
    d = np.minimum(np.abs(hours - centre), 24 - np.abs(hours - centre))
    return np.exp(-0.5 * (d / width) ** 2)


def generate_synthetic(meters: int, config: BillingPeriodConfig, profile_seed: int = 0,
                       first_meter_id: int = 1) -> ConsumptionDataset:
    """Household-like load: base load plus morning and evening peaks, scaled per meter.

    Values are kWh per interval, non-negative, and a pure function of the arguments.
    """
    if meters < 1:
        raise ValidationError("meters must be >= 1")
    rng = np.random.default_rng(profile_seed)
    hours = _hour_of_day(config)
    hours_per_interval = config.interval_minutes / 60.0
    L = config.interval_count

    base = rng.uniform(0.15, 0.45, size=(meters, 1))          # kW
    morning = rng.uniform(0.4, 1.2, size=(meters, 1))
    evening = rng.uniform(0.8, 2.2, size=(meters, 1))
    shift = rng.normal(0.0, 0.5, size=(meters, 1))            # hours
    days = np.arange(L) // (L // config.days)
    day_factor = rng.lognormal(0.0, 0.15, size=(meters, config.days))[:, days]

    shape = (
        base
        + morning * _bump(hours[None, :], 7.5 + shift, 1.0)
        + evening * _bump(hours[None, :], 19.5 + shift, 1.6)
    )
    jitter = rng.gamma(4.0, 0.25, size=(meters, L))           # mean 1
    kw = shape * day_factor * jitter
    kwh = np.round(np.maximum(kw, 0.0) * hours_per_interval, 6)

    series = {
        first_meter_id + j: ConsumptionSeries(first_meter_id + j, kwh[j].tolist()) for j in range(meters)
    }
    return ConsumptionDataset(config, series)


def generate_tariffs(areas, config: BillingPeriodConfig, seed: int = 0,
                     base_price: float = 0.05, peak_price: float = 0.30) -> dict[int, TariffSchedule]:
    """Real-time price vectors per area: off-peak floor, daytime and evening peaks, per-interval wobble."""
    rng = np.random.default_rng(seed)
    hours = _hour_of_day(config)
    out = {}
    for area in sorted(areas):
        level = rng.uniform(0.85, 1.15)
        curve = 0.35 * _bump(hours, 9.0, 2.0) + _bump(hours, 19.0, 2.0)
        wobble = rng.uniform(0.95, 1.05, size=config.interval_count)
        prices = (base_price + (peak_price - base_price) * curve) * level * wobble
        out[area] = TariffSchedule(area, np.round(prices, 5).tolist())
    return out


def desk_dataset() -> tuple[ConsumptionDataset, dict[int, TariffSchedule]]:
    """Fixed synthetic dataset used for the privacy sweep: 20 meters, one 15-minute day, one area."""
    config = BillingPeriodConfig(15, 1)
    return generate_synthetic(20, config, profile_seed=2025), generate_tariffs([1], config, seed=2025)
