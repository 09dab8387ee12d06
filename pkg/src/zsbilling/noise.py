"""Per-meter Gaussian noise streams and the closing-noise formulas.

Each stream is keyed by a 32-byte meter secret, the meter id and the billing
period counter. Value ``n`` of a stream comes from Threefry-2x64 block
``n // 2``; the two words of a block are mapped to uniforms in (0, 1) and
through Box-Muller to a cosine/sine pair of standard normals.
"""

from __future__ import annotations

import hashlib
import math
import re
import secrets
from dataclasses import dataclass, field
from numbers import Real
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core_types import TariffSchedule, check_id
from .errors import LengthMismatch, PriceNotPositive, ValidationError
from .threefry import threefry2x

SECRET_BYTES = 32
_BLOCKS_PER_CHUNK = 256
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SeedMaterial:
    secret: bytes
    meter: int
    period_id: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.secret, (bytes, bytearray)) or len(self.secret) != SECRET_BYTES:
            raise ValidationError(f"secret must be {SECRET_BYTES} bytes")
        check_id(self.meter, "meter")
        check_id(self.period_id, "period_id")

    def key(self) -> tuple[int, int]:
        """Threefry key: (PRF of the meter id under the secret, period counter)."""
        digest = hashlib.blake2b(self.meter.to_bytes(8, "little"), key=bytes(self.secret), digest_size=8).digest()
        return int.from_bytes(digest, "little"), self.period_id


def new_secret() -> bytes:
    return secrets.token_bytes(SECRET_BYTES)


def standard_normals(key: tuple[int, int], first_block: int, n_blocks: int) -> np.ndarray:
    """Standard normal variates for positions ``2*first_block`` onward (2 per block)."""
    counters = np.zeros((n_blocks, 2), dtype=np.uint64)
    counters[:, 0] = np.arange(first_block, first_block + n_blocks, dtype=np.uint64)
    words = threefry2x(key, counters)
    # top 53 bits, shifted to the open interval (0, 1)
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log(u[:, 0]))
    angle = _TWO_PI * u[:, 1]
    out = np.empty(2 * n_blocks)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out


@dataclass
class GaussianStream:
    """Deterministic N(0, sigma^2) stream; one owner per stream."""

    seed: SeedMaterial
    sigma: float
    position: int = 0
    _key: tuple = field(init=False, repr=False)
    _chunk_start: int = field(default=-1, init=False, repr=False)
    _chunk: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if not isinstance(self.sigma, Real) or not math.isfinite(self.sigma) or self.sigma <= 0:
            raise ValidationError(f"sigma must be a positive finite number, got {self.sigma!r}")
        self._key = self.seed.key()

    def value_at(self, position: int) -> float:
        span = 2 * _BLOCKS_PER_CHUNK
        start = position - position % span
        if start != self._chunk_start:
            self._chunk = standard_normals(self._key, start // 2, _BLOCKS_PER_CHUNK)
            self._chunk_start = start
        return float(self._chunk[position - start]) * self.sigma

    def next(self) -> float:
        value = self.value_at(self.position)
        self.position += 1
        return value

    def take(self, n: int) -> list[float]:
        return [self.next() for _ in range(n)]

    def reset(self) -> None:
        self.position = 0


def derive_stream(seed: SeedMaterial, sigma: float = 1.0) -> GaussianStream:
    return GaussianStream(seed, sigma)


def next_noise(stream) -> Real:
    return stream.next()


class ScriptedNoise:
    """Stream stand-in that replays fixed noise values (tests and worked examples)."""

    def __init__(self, values: Iterable[Real]) -> None:
        self.values = list(values)
        self.position = 0

    def next(self) -> Real:
        value = self.values[self.position]
        self.position += 1
        return value

    def reset(self) -> None:
        self.position = 0


def closing_noise(weighted_sum: Real, last_tariff: Real) -> Real:
    """Last-interval noise that brings the tariff-weighted noise sum to zero."""
    if not last_tariff > 0:
        raise PriceNotPositive(f"last tariff must be > 0, got {last_tariff!r}")
    return -weighted_sum / last_tariff


def weighted_noise_sum(noise: Sequence[Real], prices: Sequence[Real]) -> Real:
    """Sum of noise_i * price_i in ascending index order."""
    total = 0
    for s, trf in zip(noise, prices):
        total = total + s * trf
    return total


def closing_noise_adjusted(retained_noise: Sequence[Real], new_tariffs: TariffSchedule | Sequence[Real]) -> Real:
    """Replacement last-interval noise under a new tariff vector."""
    prices = new_tariffs.prices if isinstance(new_tariffs, TariffSchedule) else tuple(new_tariffs)
    if len(retained_noise) != len(prices) - 1:
        raise LengthMismatch(
            f"{len(retained_noise)} retained noise values for a {len(prices)}-interval tariff vector"
        )
    for i, p in enumerate(prices, start=1):
        if not p > 0:
            raise PriceNotPositive(f"new tariff at interval {i} is {p!r}")
    return closing_noise(weighted_noise_sum(retained_noise, prices[:-1]), prices[-1])


_SEED_LINE = re.compile(r"^\s*(\d+)\s*=\s*([0-9a-fA-F]{64})\s*$")


def read_seed_file(path: str | Path) -> dict[int, bytes]:
    """Parse ``meter_id=hex`` lines; blank lines and ``#`` comments are skipped."""
    seeds: dict[int, bytes] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        m = _SEED_LINE.match(line)
        if not m:
            raise ValidationError(f"{path}:{lineno}: expected meter_id=<64 hex chars>")
        meter = check_id(int(m.group(1)), "meter")
        if meter in seeds:
            raise ValidationError(f"{path}:{lineno}: duplicate seed for meter {meter}")
        seeds[meter] = bytes.fromhex(m.group(2))
    return seeds


def write_seed_file(path: str | Path, seeds: Mapping[int, bytes]) -> None:
    lines = [f"{meter}={seeds[meter].hex()}" for meter in sorted(seeds)]
    Path(path).write_text("\n".join(lines) + "\n")
