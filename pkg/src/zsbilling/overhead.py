"""Analytic overhead model: link framing, transmission time, memory and compute cost.

Default link stacks reproduce the published per-link packet sizes for a
4-byte value (one frame) and for the 11 520-byte tariff vector of a 30-day,
15-minute period (fragmented):

========  ===============  =====  =========  ==========  ========
link      frame overhead   MTU    per frag   per dgram   vector
========  ===============  =====  =========  ==========  ========
SM-AGG    25               140    9          0           14 333
AGG-eNB   54               1500   0          8           11 960
eNB-PGW   122              1500   0          8           12 504
PGW-UP    66               1500   0          8           12 056
========  ===============  =====  =========  ==========  ========

The WAN rows are consistent with 1500-byte frames plus one 8-byte header
carried once per fragmented datagram. No physical 802.15.4g/6LoWPAN layout
gives 14 333 bytes exactly; the SM-AGG fragmentation pair is an integer fit
(see :func:`fit_fragmentation`). A 102-byte frame payload with no
per-fragment overhead, the classic 127-byte frame minus 25 bytes of MAC
framing, gives 14 345 bytes (+12 B, 0.08 %).
"""

from __future__ import annotations

import configparser
import csv
import enum
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ValidationError


@dataclass(frozen=True)
class LinkStack:
    name: str
    per_frame_overhead: int
    max_frame_payload: int
    per_fragment_overhead: int = 0
    per_datagram_overhead: int = 0
    bandwidth_total: float = 1000.0  # kbps
    meters_sharing: int = 20

    def __post_init__(self) -> None:
        for f in ("per_frame_overhead", "per_fragment_overhead", "per_datagram_overhead"):
            if getattr(self, f) < 0:
                raise ValidationError(f"{self.name}: {f} must be >= 0")
        if self.max_frame_payload < 1:
            raise ValidationError(f"{self.name}: max_frame_payload must be >= 1")
        if not self.bandwidth_total > 0 or self.meters_sharing < 1:
            raise ValidationError(f"{self.name}: bandwidth and meters_sharing must be positive")

    @property
    def bandwidth_per_meter(self) -> float:
        return self.bandwidth_total / self.meters_sharing


DEFAULT_LINKS: tuple[LinkStack, ...] = (
    LinkStack("SM-AGG", 25, 140, 9, 0, 250.0, 20),
    LinkStack("AGG-eNB", 54, 1500, 0, 8, 1000.0, 20),
    LinkStack("eNB-PGW", 122, 1500, 0, 8, 1000.0, 20),
    LinkStack("PGW-UP", 66, 1500, 0, 8, 1000.0, 20),
)

# Published per-link packet sizes for the two payload sizes, used only for residual reporting.
REFERENCE_PACKET_SIZES: dict[int, dict[str, int]] = {
    4: {"SM-AGG": 29, "AGG-eNB": 58, "eNB-PGW": 126, "PGW-UP": 70},
    11520: {"SM-AGG": 14333, "AGG-eNB": 11960, "eNB-PGW": 12504, "PGW-UP": 12056},
}


def default_links() -> dict[str, LinkStack]:
    return {link.name: link for link in DEFAULT_LINKS}


def frame_count(payload: int, stack: LinkStack) -> int:
    return max(1, math.ceil(payload / stack.max_frame_payload))


def packet_size(payload: int, stack: LinkStack) -> int:
    """Bytes on the wire for ``payload`` bytes of application data."""
    if payload < 0:
        raise ValidationError(f"payload must be >= 0, got {payload}")
    frames = frame_count(payload, stack)
    if frames == 1:
        return payload + stack.per_frame_overhead
    return (
        payload
        + frames * stack.per_frame_overhead
        + (frames - 1) * stack.per_fragment_overhead
        + stack.per_datagram_overhead
    )


def transmission_time(packet: int, bandwidth_per_meter: float) -> float:
    """Seconds to send ``packet`` bytes at ``bandwidth_per_meter`` kbps."""
    if not bandwidth_per_meter > 0:
        raise ValidationError(f"bandwidth must be > 0, got {bandwidth_per_meter}")
    return packet * 8 / (bandwidth_per_meter * 1000)


def min_bandwidth_payload(payloads: Iterable[int]) -> int:
    """Largest payload exchanged; it sizes the minimum bandwidth of a link."""
    sizes = list(payloads)
    if not sizes:
        raise ValidationError("at least one payload size is required")
    return max(sizes)


def fit_fragmentation(payload: int, target: int, per_frame_overhead: int, per_datagram_overhead: int = 0):
    """All integer ``(frames, per_fragment_overhead, mtu_lo, mtu_hi)`` giving ``target`` bytes.

    Any ``max_frame_payload`` in ``[mtu_lo, mtu_hi]`` yields ``frames`` frames.
    """
    fits = []
    for n in range(2, payload + 1):
        rem = target - payload - n * per_frame_overhead - per_datagram_overhead
        if rem < 0:
            break
        if rem % (n - 1):
            continue
        lo = math.ceil(payload / n)
        hi = math.ceil(payload / (n - 1)) - 1
        if lo <= hi:
            fits.append((n, rem // (n - 1), lo, hi))
    return fits


# -- memory / compute -----------------------------------------------------


class Role(enum.Enum):
    METER = "meter"
    PROVIDER = "provider"
    TOTAL = "total"


@dataclass(frozen=True)
class CostModel:
    t_prng: float = 1e-6
    t_arthm: float = 1e-8
    s_rand: int = 8
    s_c: int = 8
    s_nc: int = 8
    s_trf: int = 8
    s_s_trf: int = 8
    s_nb: int = 8
    s_fb: int = 8

    def __post_init__(self) -> None:
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValidationError(f"{f.name} must be positive")


def _check_L(L: int) -> None:
    if L < 1:
        raise ValidationError(f"L must be >= 1, got {L}")


def memory_estimate(role: Role | str, L: int, model: CostModel = CostModel()) -> float:
    """Bytes retained during one billing period."""
    role = Role(role)
    _check_L(L)
    meter = L * (model.s_rand + model.s_c + model.s_nc + model.s_trf) + (L - 1) * model.s_s_trf
    provider = L * (model.s_nc + model.s_nb + model.s_trf) + model.s_fb
    return {Role.METER: meter, Role.PROVIDER: provider, Role.TOTAL: meter + provider}[role]


def compute_cost_estimate(role: Role | str, L: int, model: CostModel = CostModel()) -> float:
    """Seconds of computation for one billing period."""
    role = Role(role)
    _check_L(L)
    meter = (L - 1) * model.t_prng + (2 * L + 1) * model.t_arthm
    provider = 2 * L * model.t_arthm
    return {Role.METER: meter, Role.PROVIDER: provider, Role.TOTAL: meter + provider}[role]


# -- config and reports ----------------------------------------------------

_INT_KEYS = ("per_frame_overhead", "max_frame_payload", "per_fragment_overhead", "per_datagram_overhead",
             "meters_sharing")


def load_links(path: str | Path) -> dict[str, LinkStack]:
    """Read ``[link-name]`` sections of ``key=value`` lines; unset keys fall back to defaults."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    defaults = default_links()
    links = {}
    for name in parser.sections():
        values = asdict(defaults[name]) if name in defaults else {"name": name}
        for key, raw in parser[name].items():
            if key == "bandwidth_total":
                values[key] = float(raw)
            elif key in _INT_KEYS:
                values[key] = int(raw)
            else:
                raise ValidationError(f"{path}: unknown key {key!r} in [{name}]")
        values["name"] = name
        try:
            links[name] = LinkStack(**values)
        except TypeError as exc:
            raise ValidationError(f"{path}: incomplete section [{name}]: {exc}") from None
    if not links:
        raise ValidationError(f"{path}: no link sections")
    return links


def write_links(path: str | Path, links: Mapping[str, LinkStack]) -> None:
    parser = configparser.ConfigParser()
    for name, link in links.items():
        parser[name] = {k: str(v) for k, v in asdict(link).items() if k != "name"}
    with open(path, "w") as fh:
        parser.write(fh)


@dataclass(frozen=True)
class OverheadRow:
    payload: int
    cells: tuple  # (link name, packet bytes, seconds) per link


def overhead_table(payloads: Sequence[int], links: Mapping[str, LinkStack]) -> list[OverheadRow]:
    rows = []
    for p in payloads:
        cells = tuple(
            (name, packet_size(p, link), transmission_time(packet_size(p, link), link.bandwidth_per_meter))
            for name, link in links.items()
        )
        rows.append(OverheadRow(p, cells))
    return rows


def write_overhead_csv(path: str | Path, rows: Sequence[OverheadRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["payload_bytes"]
        for name, _, _ in rows[0].cells:
            header += [f"{name}_packet_bytes", f"{name}_time_s"]
        writer.writerow(header)
        for row in rows:
            line = [row.payload]
            for _, size, seconds in row.cells:
                line += [size, f"{seconds:.5f}"]
            writer.writerow(line)


def residuals(rows: Sequence[OverheadRow]) -> list[tuple[int, str, int, int]]:
    """``(payload, link, modelled, published)`` for payloads with published sizes."""
    out = []
    for row in rows:
        ref = REFERENCE_PACKET_SIZES.get(row.payload)
        if not ref:
            continue
        for name, size, _ in row.cells:
            if name in ref:
                out.append((row.payload, name, size, ref[name]))
    return out
