"""Simulation state file used between ``simulate`` and ``rebill``.

Layout::

    8 bytes   magic  b"ZSBSTATE"
    1 byte    format version
    4 bytes   body length, little-endian
    N bytes   UTF-8 JSON body (floats stored with float.hex for bit-exact round trips)
    32 bytes  SHA-256 of the body

The body holds the provider ledger, the issued tariffs, and each meter's
retained noise and true last reading.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

from .billing import MeterAccount, ProviderLedger
from .core_types import BillingPeriodConfig, TariffSchedule
from .errors import StateFileError
from .meter import Phase, SmartMeter
from .network import SimConfig, Simulation

MAGIC = b"ZSBSTATE"
VERSION = 1
_HEADER = struct.Struct("<8sBI")


def _f(x):
    return None if x is None else float(x).hex()


def _uf(x):
    return None if x is None else float.fromhex(x)


def _fl(xs):
    return [_f(x) for x in xs]


def _ufl(xs):
    return [_uf(x) for x in xs]


def _meter_to_dict(m: SmartMeter) -> dict:
    return {
        "id": m.id,
        "area": m.area,
        "phase": m.phase.value,
        "max_adjustments": m.max_adjustments,
        "adjustments_applied": m.adjustments_applied,
        "retained_noise": _fl(m.retained_noise),
        "weighted_sum": _f(m.weighted_sum),
        "last_true_reading": _f(m.last_true_reading),
        "last_noise": _f(m.last_noise),
    }


def _meter_from_dict(d: dict, config: BillingPeriodConfig) -> SmartMeter:
    m = SmartMeter.__new__(SmartMeter)
    m.id = d["id"]
    m.area = d["area"]
    m.config = config
    m.stream = None
    m.max_adjustments = d["max_adjustments"]
    m.exact = False
    m._rational = None
    m.retained_noise = _ufl(d["retained_noise"])
    m.weighted_sum = _uf(d["weighted_sum"])
    m.last_true_reading = _uf(d["last_true_reading"])
    m.last_noise = _uf(d["last_noise"])
    m.phase = Phase(d["phase"])
    m.adjustments_applied = d["adjustments_applied"]
    return m


def encode_state(sim: Simulation) -> bytes:
    cfg = sim.config
    ledger = sim.ledger
    body = {
        "period": {"interval_minutes": cfg.period.interval_minutes, "days": cfg.period.days},
        "period_id": cfg.period_id,
        "sigma": _f(cfg.sigma),
        "max_adjustments": cfg.max_adjustments,
        "areas": [[m, a] for m, a in sorted(cfg.areas.items())],
        "tick": sim.tick,
        "tariffs": {str(a): _fl(t.prices) for a, t in sorted(sim.tariffs.items())},
        "issued": {str(a): _fl(p) for a, p in sorted(ledger.tariffs.items())},
        "history": {str(a): [_fl(s.prices) for s in h] for a, h in sorted(ledger.tariff_history.items())},
        "accounts": {
            str(m): {
                "area": acct.area,
                "readings": _fl(acct.readings),
                "final_bill": _f(acct.final_bill),
                "new_final_bill": _f(acct.new_final_bill),
                "adjusted_tariffs": None if acct.adjusted_tariffs is None else _fl(acct.adjusted_tariffs.prices),
            }
            for m, acct in sorted(ledger.accounts.items())
        },
        "bills": {str(m): _f(b) for m, b in sorted(sim.bills.items())},
        "new_bills": {str(m): _f(b) for m, b in sorted(sim.new_bills.items())},
        "adjusted_areas": sorted(sim.adjusted_areas),
        "meters": [_meter_to_dict(sim.meters[m]) for m in sorted(sim.meters)],
    }
    raw = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    return _HEADER.pack(MAGIC, VERSION, len(raw)) + raw + hashlib.sha256(raw).digest()


def decode_state(blob: bytes) -> Simulation:
    if len(blob) < _HEADER.size + 32:
        raise StateFileError("state file truncated")
    magic, version, length = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise StateFileError("not a zsbilling state file")
    if version != VERSION:
        raise StateFileError(f"unsupported state format version {version}")
    raw = blob[_HEADER.size:_HEADER.size + length]
    digest = blob[_HEADER.size + length:]
    if len(raw) != length or hashlib.sha256(raw).digest() != digest:
        raise StateFileError("state file corrupt (checksum mismatch)")
    d = json.loads(raw)

    period = BillingPeriodConfig(d["period"]["interval_minutes"], d["period"]["days"])
    areas = {m: a for m, a in d["areas"]}
    config = SimConfig(areas=areas, period=period, sigma=_uf(d["sigma"]), period_id=d["period_id"],
                       max_adjustments=d["max_adjustments"], scenario=2)
    tariffs = {int(a): TariffSchedule(int(a), _ufl(p)) for a, p in d["tariffs"].items()}
    ledger = ProviderLedger(period, d["period_id"])
    ledger.tariffs = {int(a): _ufl(p) for a, p in d["issued"].items()}
    ledger.tariff_history = {int(a): [TariffSchedule(int(a), _ufl(p)) for p in h] for a, h in d["history"].items()}
    for m, acct in d["accounts"].items():
        adjusted = acct["adjusted_tariffs"]
        ledger.accounts[int(m)] = MeterAccount(
            area=acct["area"],
            readings=_ufl(acct["readings"]),
            final_bill=_uf(acct["final_bill"]),
            new_final_bill=_uf(acct["new_final_bill"]),
            adjusted_tariffs=None if adjusted is None else TariffSchedule(acct["area"], _ufl(adjusted)),
        )
    meters = {md["id"]: _meter_from_dict(md, period) for md in d["meters"]}
    return Simulation.restore(
        config,
        tariffs,
        meters,
        ledger,
        bills={int(m): _uf(b) for m, b in d["bills"].items()},
        new_bills={int(m): _uf(b) for m, b in d["new_bills"].items()},
        tick=d["tick"],
        adjusted_areas=d["adjusted_areas"],
    )


def save_state(path: str | Path, sim: Simulation) -> None:
    Path(path).write_bytes(encode_state(sim))


def load_state(path: str | Path) -> Simulation:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise StateFileError(f"cannot read {path}: {exc.strerror}") from None
    return decode_state(blob)
