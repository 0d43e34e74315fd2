"""Exact fixed-point geohash: unit-square mapping, bit interleaving, cell
decoding, and base-32 text rendering.

All arithmetic on hash values is integer arithmetic.  A coordinate is mapped
to a 60-bit binary fraction of the unit interval without going through
floating point, so encoding is bit-exact and platform independent.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

BASE32 = "0123456789bcdefghjkmnpqrstuvwxyz"
_BASE32_INDEX = {c: i for i, c in enumerate(BASE32)}

MAX_BITS = 60
_UNIT_ONE = 1 << MAX_BITS  # denominator of the unit-square fixed point


def _as_ratio(value, field: str) -> tuple[int, int]:
    """Exact (numerator, denominator) of a coordinate value."""
    if isinstance(value, str):
        try:
            value = Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"{field} is not a valid number: {value!r}") from None
    try:
        return value.as_integer_ratio()
    except (ValueError, OverflowError):
        raise ValueError(f"{field} must be finite, got {value!r}") from None
    except AttributeError:
        raise TypeError(f"{field} must be a number or numeric text, got {type(value).__name__}") from None


def _check_range(num: int, den: int, lo: int, span: int, field: str) -> None:
    # half-open [lo, lo+span): the upper edge would map to 1.0 exactly
    if num < lo * den or num >= (lo + span) * den:
        raise ValueError(f"{field} out of range [{lo}, {lo + span}): {num / den}")


def _unit_fixed(value, lo: int, span: int, field: str) -> int:
    """floor(((value - lo) / span) * 2^60), exactly."""
    num, den = _as_ratio(value, field)
    _check_range(num, den, lo, span, field)
    return ((num - lo * den) << MAX_BITS) // (span * den)


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """A latitude/longitude pair in degrees.

    lat must lie in [-90, 90) and lon in [-180, 180); the upper edges are
    rejected so the unit-square mapping stays strictly below 1.  Coordinates
    may be given as floats or as decimal text (text keeps digits beyond
    double precision exact).
    """

    lat: float
    lon: float

    def __post_init__(self):
        lat, lon = self.lat, self.lon
        if type(lat) is float and type(lon) is float:
            # exact comparisons; NaN fails both sides
            if not (-90.0 <= lat < 90.0):
                raise ValueError(f"lat out of range [-90, 90): {lat}")
            if not (-180.0 <= lon < 180.0):
                raise ValueError(f"lon out of range [-180, 180): {lon}")
        else:
            n, d = _as_ratio(lat, "lat")
            _check_range(n, d, -90, 180, "lat")
            n, d = _as_ratio(lon, "lon")
            _check_range(n, d, -180, 360, "lon")


@dataclass(frozen=True, slots=True)
class UnitPoint:
    """A point of the unit square held as 60-bit fixed-point fractions.

    x_fp and y_fp are the numerators; the value is x_fp / 2^60.
    """

    x_fp: int
    y_fp: int

    def __post_init__(self):
        if not 0 <= self.x_fp < _UNIT_ONE:
            raise ValueError(f"x_fp must be in [0, 2^60): {self.x_fp}")
        if not 0 <= self.y_fp < _UNIT_ONE:
            raise ValueError(f"y_fp must be in [0, 2^60): {self.y_fp}")

    @property
    def x(self) -> Fraction:
        return Fraction(self.x_fp, _UNIT_ONE)

    @property
    def y(self) -> Fraction:
        return Fraction(self.y_fp, _UNIT_ONE)


@dataclass(frozen=True, slots=True)
class HashCode:
    """The top `bits` interleaved bits of a hash, left-aligned.

    The numeric value is code / 2^bits; comparing codes of equal bit count
    compares hash values.
    """

    code: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.bits <= MAX_BITS:
            raise ValueError(f"bits must be in [1, {MAX_BITS}]: {self.bits}")
        if not 0 <= self.code < (1 << self.bits):
            raise ValueError(f"code must be in [0, 2^{self.bits}): {self.code}")

    @property
    def value(self) -> float:
        """Approximate numeric value; exact only up to float precision."""
        return self.code / (1 << self.bits)

    def as_fraction(self) -> Fraction:
        return Fraction(self.code, 1 << self.bits)

    def bit_string(self) -> str:
        return format(self.code, f"0{self.bits}b")

    @classmethod
    def from_bit_string(cls, bits: str) -> "HashCode":
        if not bits or bits.strip("01"):
            raise ValueError(f"bit string must be nonempty 0/1 text: {bits!r}")
        return cls(int(bits, 2), len(bits))

    def truncate(self, bits: int) -> "HashCode":
        if bits > self.bits:
            raise ValueError(f"cannot extend {self.bits}-bit code to {bits} bits")
        return HashCode(self.code >> (self.bits - bits), bits)


@dataclass(frozen=True, slots=True)
class CellRect:
    """Axis-aligned rectangle in degrees, half-open on both axes."""

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self):
        if not self.lat_min < self.lat_max:
            raise ValueError(f"lat_min must be < lat_max: {self.lat_min} >= {self.lat_max}")
        if not self.lon_min < self.lon_max:
            raise ValueError(f"lon_min must be < lon_max: {self.lon_min} >= {self.lon_max}")

    def contains(self, lat: float, lon: float) -> bool:
        return (self.lat_min <= lat < self.lat_max
                and self.lon_min <= lon < self.lon_max)

    def intersects(self, other: "CellRect") -> bool:
        return (self.lat_min < other.lat_max and other.lat_min < self.lat_max
                and self.lon_min < other.lon_max and other.lon_min < self.lon_max)

    def within(self, other: "CellRect") -> bool:
        return (other.lat_min <= self.lat_min and self.lat_max <= other.lat_max
                and other.lon_min <= self.lon_min and self.lon_max <= other.lon_max)


WORLD = CellRect(-90.0, 90.0, -180.0, 180.0)


def to_unit(p: GeoPoint) -> UnitPoint:
    """Map a point linearly onto the unit square.

    x = (lon + 180) / 360 and y = (lat + 90) / 180, truncated to 60 exact
    binary digits.
    """
    return UnitPoint(
        x_fp=_unit_fixed(p.lon, -180, 360, "lon"),
        y_fp=_unit_fixed(p.lat, -90, 180, "lat"),
    )


# Morton-spread masks: bit i of a 32-bit input moves to bit 2i.
_M1 = 0x0000FFFF0000FFFF
_M2 = 0x00FF00FF00FF00FF
_M3 = 0x0F0F0F0F0F0F0F0F
_M4 = 0x3333333333333333
_M5 = 0x5555555555555555


def _spread(v: int) -> int:
    v = (v | (v << 16)) & _M1
    v = (v | (v << 8)) & _M2
    v = (v | (v << 4)) & _M3
    v = (v | (v << 2)) & _M4
    v = (v | (v << 1)) & _M5
    return v


def _compact(v: int) -> int:
    # inverse of _spread on the even bit positions
    v &= _M5
    v = (v | (v >> 1)) & _M4
    v = (v | (v >> 2)) & _M3
    v = (v | (v >> 4)) & _M2
    v = (v | (v >> 8)) & _M1
    v = (v | (v >> 16)) & 0x00000000FFFFFFFF
    return v


def encode(u: UnitPoint, m: int) -> HashCode:
    """Interleave the binary digits of (x, y) into an m-bit hash.

    Bit k of the result (most significant first) is digit ceil(k/2) of x for
    odd k and digit k/2 of y for even k, so longitude leads.
    """
    if not 1 <= m <= MAX_BITS:
        raise ValueError(f"bit count must be in [1, {MAX_BITS}]: {m}")
    x30 = u.x_fp >> 30
    y30 = u.y_fp >> 30
    code60 = (_spread(x30) << 1) | _spread(y30)
    return HashCode(code60 >> (MAX_BITS - m), m)


def _cell_rect(code: int, bits: int) -> CellRect:
    """Rectangle of a hash prefix; bits may be 0 for the whole domain."""
    if bits == 0:
        return WORLD
    xbits = (bits + 1) // 2
    ybits = bits // 2
    code60 = code << (MAX_BITS - bits)
    xv = _compact(code60 >> 1) >> (30 - xbits)
    yv = _compact(code60) >> (30 - ybits) if ybits else 0
    # all products below are exact in double precision
    lon_min = xv * 360.0 / (1 << xbits) - 180.0
    lon_max = (xv + 1) * 360.0 / (1 << xbits) - 180.0
    lat_min = yv * 180.0 / (1 << ybits) - 90.0
    lat_max = (yv + 1) * 180.0 / (1 << ybits) - 90.0
    return CellRect(lat_min, lat_max, lon_min, lon_max)


def decode_cell(h: HashCode) -> CellRect:
    """The exact rectangle of all points whose hash starts with h.

    Splits alternate longitude (odd bits) and latitude (even bits).
    """
    return _cell_rect(h.code, h.bits)


def render_base32(h: HashCode) -> str:
    """Render a hash whose bit count is a multiple of 5 as base-32 text."""
    if h.bits % 5:
        raise ValueError(f"bit count must be divisible by 5 to render base-32: {h.bits}")
    chars = h.bits // 5
    return "".join(BASE32[(h.code >> (5 * (chars - 1 - i))) & 31] for i in range(chars))


def parse_base32(text: str) -> HashCode:
    """Parse base-32 geohash text into a 5*len(text)-bit code."""
    if not text:
        raise ValueError("empty geohash text")
    code = 0
    for pos, ch in enumerate(text):
        try:
            code = (code << 5) | _BASE32_INDEX[ch]
        except KeyError:
            raise ValueError(f"invalid base-32 character {ch!r} at position {pos}") from None
    return HashCode(code, 5 * len(text))


def hash60(lat, lon) -> int:
    """Full-precision 60-bit hash of a coordinate pair, as an integer.

    Equivalent to encode(to_unit(GeoPoint(lat, lon)), 60).code but without
    constructing the intermediate values.
    """
    y30 = _unit_fixed(lat, -90, 180, "lat") >> 30
    x30 = _unit_fixed(lon, -180, 360, "lon") >> 30
    return (_spread(x30) << 1) | _spread(y30)


_NM1 = np.uint64(_M1)
_NM2 = np.uint64(_M2)
_NM3 = np.uint64(_M3)
_NM4 = np.uint64(_M4)
_NM5 = np.uint64(_M5)


def _spread_array(v: np.ndarray) -> np.ndarray:
    v = (v | (v << np.uint64(16))) & _NM1
    v = (v | (v << np.uint64(8))) & _NM2
    v = (v | (v << np.uint64(4))) & _NM3
    v = (v | (v << np.uint64(2))) & _NM4
    v = (v | (v << np.uint64(1))) & _NM5
    return v


# Distance from a 2^-30 grid line below which the float fast path may have
# misrounded; the worst-case float error is ~2^-21 grid units.
_SUSPECT_WINDOW = 2.0 ** -18


def _axis30_batch(vals: np.ndarray, lo: float, span: float, field: str) -> np.ndarray:
    """floor(((v - lo) / span) * 2^30) per element, exact.

    Fast float path with exact integer recomputation for elements that land
    within _SUSPECT_WINDOW of a grid line, where float rounding could flip
    the floor.
    """
    ok = (vals >= lo) & (vals < lo + span)
    if not ok.all():
        bad = int(np.argmin(ok))
        raise ValueError(f"{field} out of range [{lo:g}, {lo + span:g}) at index {bad}: {vals[bad]!r}")
    t = (vals - lo) * (float(1 << 30) / span)
    out = np.floor(t).astype(np.int64)
    np.clip(out, 0, (1 << 30) - 1, out=out)
    suspect = np.abs(t - np.rint(t)) < _SUSPECT_WINDOW
    if suspect.any():
        ilo, ispan = int(lo), int(span)
        for i in np.flatnonzero(suspect):
            out[i] = _unit_fixed(float(vals[i]), ilo, ispan, field) >> 30
    return out.astype(np.uint64)


def hash60_batch(lats, lons) -> np.ndarray:
    """Vectorized hash60 over float64 arrays; bit-identical to the scalar path."""
    lats = np.ascontiguousarray(lats, dtype=np.float64)
    lons = np.ascontiguousarray(lons, dtype=np.float64)
    if lats.shape != lons.shape:
        raise ValueError(f"lat/lon arrays differ in shape: {lats.shape} vs {lons.shape}")
    y30 = _axis30_batch(lats, -90.0, 180.0, "lat")
    x30 = _axis30_batch(lons, -180.0, 360.0, "lon")
    return (_spread_array(x30) << np.uint64(1)) | _spread_array(y30)
