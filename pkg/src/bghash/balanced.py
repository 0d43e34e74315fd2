"""The data-balanced hash: a monotone piecewise-linear rescaling of the
standard hash fitted from weighted sample points.

The model stores 2^q + 1 breakpoints s_0 <= ... <= s_{2^q} as fixed-point
fractions with denominator 2^63.  Fitting places the interior breakpoints at
scaled weighted quantiles of the sample's 60-bit hash values, so that each of
the 2^q top-level buckets carries roughly equal weight.  Encoding maps a
point's standard hash value through the inverse of the breakpoint map
(bucket index plus linear interpolation); decoding returns the exact
standard-hash preimage of a code's dyadic interval.

All breakpoint arithmetic is exact integer arithmetic with floor rounding,
so encoded keys are bit-stable across platforms and lexicographically
consistent with the interval math.
"""
from __future__ import annotations

import warnings
import zlib
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    MAX_BITS,
    CellRect,
    GeoPoint,
    HashCode,
    _cell_rect,
    hash60,
    hash60_batch,
)

MAX_BALANCE_BITS = 24
_FP_ONE = 1 << 63  # denominator of breakpoint fixed point
_MAGIC = b"BGH1"
_VERSION = 1
_HEADER_LEN = 24


@dataclass(frozen=True, slots=True)
class WeightedPoint:
    """A sample point with a nonnegative integer count weight."""

    point: GeoPoint
    weight: int = 1

    def __post_init__(self):
        w = self.weight
        if not isinstance(w, int) or isinstance(w, bool):
            raise TypeError(f"weight must be an integer, got {type(w).__name__}")
        if not 0 <= w < (1 << 64):
            raise ValueError(f"weight must be in [0, 2^64): {w}")


@dataclass(frozen=True, eq=False)
class BalancedModel:
    """A fitted balance map: q, breakpoints, and sample metadata.

    breakpoints is a read-only uint64 array of length 2^q + 1 whose values
    are fractions of 2^63; n_points is the number of distinct hash values in
    the fitting sample and total_weight the summed weights.
    """

    q: int
    breakpoints: np.ndarray
    n_points: int
    total_weight: int

    def __post_init__(self):
        if not isinstance(self.q, int) or not 1 <= self.q <= MAX_BALANCE_BITS:
            raise ValueError(f"q must be an integer in [1, {MAX_BALANCE_BITS}]: {self.q}")
        if not 1 <= self.n_points < (1 << 64):
            raise ValueError(f"n_points must be in [1, 2^64): {self.n_points}")
        if not 1 <= self.total_weight < (1 << 64):
            raise ValueError(f"total_weight must be in [1, 2^64): {self.total_weight}")
        bp = np.ascontiguousarray(self.breakpoints, dtype=np.uint64)
        if bp.ndim != 1 or len(bp) != (1 << self.q) + 1:
            raise ValueError(f"expected {(1 << self.q) + 1} breakpoints for q={self.q}, got {bp.shape}")
        if int(bp[0]) != 0:
            raise ValueError(f"first breakpoint must be 0: {int(bp[0])}")
        if int(bp[-1]) != _FP_ONE:
            raise ValueError(f"last breakpoint must be 2^63: {int(bp[-1])}")
        if not np.all(bp[1:] >= bp[:-1]):
            raise ValueError("breakpoints must be non-decreasing")
        bound = (self.n_points * _FP_ONE) // (self.n_points + 2) + 1
        if len(bp) > 2 and not np.all(bp[1:-1] <= np.uint64(bound)):
            raise ValueError("interior breakpoints exceed the N/(N+2) scaling bound")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    def __eq__(self, other):
        if not isinstance(other, BalancedModel):
            return NotImplemented
        return (self.q == other.q
                and self.n_points == other.n_points
                and self.total_weight == other.total_weight
                and np.array_equal(self.breakpoints, other.breakpoints))

    @classmethod
    def identity(cls, q: int) -> "BalancedModel":
        """The model whose balance map is the identity (breakpoints i/2^q).

        Sample metadata is nominal: n_points is set to 2^(q+1), the smallest
        count whose scaling bound admits uniform breakpoints.
        """
        if not 1 <= q <= MAX_BALANCE_BITS:
            raise ValueError(f"q must be in [1, {MAX_BALANCE_BITS}]: {q}")
        bp = np.arange((1 << q) + 1, dtype=np.uint64) << np.uint64(63 - q)
        n = 1 << (q + 1)
        return cls(q=q, breakpoints=bp, n_points=n, total_weight=n)


@dataclass(frozen=True, slots=True)
class HashInterval:
    """Half-open interval [start, end) of standard-hash values."""

    start: Fraction
    end: Fraction

    @property
    def empty(self) -> bool:
        return self.start == self.end

    def contains(self, value) -> bool:
        return self.start <= value < self.end

    @property
    def width(self) -> Fraction:
        return self.end - self.start


def point_hashes(points: Sequence[WeightedPoint]) -> tuple[np.ndarray, np.ndarray]:
    """Extract (60-bit hash, weight) arrays from weighted points.

    Float coordinates go through the vectorized path; exotic coordinate
    types (decimal text, fractions) are hashed exactly one by one.
    """
    n = len(points)
    lats = np.zeros(n, dtype=np.float64)
    lons = np.zeros(n, dtype=np.float64)
    weights = np.empty(n, dtype=np.uint64)
    exact: list[int] = []
    for i, wp in enumerate(points):
        p = wp.point
        la, lo = p.lat, p.lon
        if type(la) is float and type(lo) is float:
            lats[i] = la
            lons[i] = lo
        else:
            exact.append(i)
        weights[i] = wp.weight
    codes = hash60_batch(lats, lons)
    for i in exact:
        p = points[i].point
        codes[i] = hash60(p.lat, p.lon)
    return codes, weights


def _exact_weight_sum(weights: np.ndarray) -> int:
    approx = float(weights.sum(dtype=np.float64))
    if approx < 2.0**62:
        return int(weights.sum(dtype=np.uint64))
    total = sum(int(w) for w in weights)
    if total >= (1 << 64):
        raise ValueError(f"total weight must be below 2^64: {total}")
    return total


def fit(points: Sequence[WeightedPoint], q: int) -> BalancedModel:
    """Fit the balance map from weighted sample points.

    Interior breakpoint i is the weighted (i/2^q)-quantile of the sample's
    60-bit hash values (left-continuous inverse of the weighted ECDF, i.e.
    the ceil(i*W/2^q)-th smallest value counting multiplicity), scaled by
    N/(N+2) where N counts distinct hash values.  Zero-weight points are
    ignored.
    """
    if not isinstance(q, int) or not 1 <= q <= MAX_BALANCE_BITS:
        raise ValueError(f"q must be an integer in [1, {MAX_BALANCE_BITS}]: {q}")
    if not isinstance(points, Sequence):
        points = list(points)
    codes, weights = point_hashes(points)
    mask = weights > 0
    if not mask.any():
        raise ValueError("fit needs at least one positive-weight point")
    codes = codes[mask]
    weights = weights[mask]

    order = np.argsort(codes, kind="stable")
    hs = codes[order]
    ws = weights[order]
    total = _exact_weight_sum(ws)
    n_distinct = int(1 + np.count_nonzero(hs[1:] != hs[:-1]))

    cum = np.cumsum(ws)
    buckets = 1 << q
    if (buckets - 1) * (total + 1) < (1 << 63):
        i = np.arange(1, buckets, dtype=np.uint64)
        ranks = (i * np.uint64(total) + np.uint64(buckets - 1)) >> np.uint64(q)
    else:
        ranks = np.array(
            [(i * total + buckets - 1) >> q for i in range(1, buckets)],
            dtype=np.uint64,
        )
    idx = np.searchsorted(cum, ranks, side="left")
    graw = hs[idx]

    # s = floor(8*N*g / (N+2)) computed as 8g - ceil(16g / (N+2)) to stay in uint64
    n2 = np.uint64(n_distinct + 2)
    t16 = graw << np.uint64(4)
    quot, rem = np.divmod(t16, n2)
    interior = (graw << np.uint64(3)) - (quot + (rem != 0).astype(np.uint64))

    bp = np.empty(buckets + 1, dtype=np.uint64)
    bp[0] = 0
    bp[-1] = np.uint64(_FP_ONE)
    bp[1:-1] = interior
    return BalancedModel(q=q, breakpoints=bp, n_points=n_distinct, total_weight=total)


def _bucket_of(model: BalancedModel, gfp: int) -> int:
    """Least bucket i with s_i <= gfp < s_{i+1}; zero-width buckets skipped."""
    return int(np.searchsorted(model.breakpoints, gfp, side="right")) - 1


def _interp_code(model: BalancedModel, i: int, gfp: int, m: int) -> int:
    """First m bits of (i + (g - s_i)/(s_{i+1} - s_i)) / 2^q, floor rounded."""
    q = model.q
    if m <= q:
        return i >> (q - m)
    bp = model.breakpoints
    si = int(bp[i])
    delta = int(bp[i + 1]) - si
    return (i << (m - q)) + (((gfp - si) << (m - q)) // delta)


def balanced_encode(model: BalancedModel, p: GeoPoint, m: int) -> HashCode:
    """Encode a point to the first m bits of its balanced hash value."""
    if not 1 <= m <= MAX_BITS:
        raise ValueError(f"bit count must be in [1, {MAX_BITS}]: {m}")
    gfp = hash60(p.lat, p.lon) << 3
    i = _bucket_of(model, gfp)
    return HashCode(_interp_code(model, i, gfp, m), m)


def balanced_codes_batch(model: BalancedModel, codes60: np.ndarray, m: int) -> np.ndarray:
    """Vectorized balanced m-bit codes for an array of 60-bit hashes."""
    if not 1 <= m <= MAX_BITS:
        raise ValueError(f"bit count must be in [1, {MAX_BITS}]: {m}")
    q = model.q
    gfp = codes60.astype(np.uint64) << np.uint64(3)
    idx = np.searchsorted(model.breakpoints, gfp, side="right") - 1
    if m == q:
        return idx.astype(np.uint64)
    if m < q:
        return (idx >> (q - m)).astype(np.uint64)
    bp = model.breakpoints
    shift = m - q
    out = np.empty(len(gfp), dtype=np.uint64)
    for j, (i, g) in enumerate(zip(idx.tolist(), gfp.tolist())):
        si = int(bp[i])
        delta = int(bp[i + 1]) - si
        out[j] = (i << shift) + (((g - si) << shift) // delta)
    return out


def _inverse_point(model: BalancedModel, c: int, m: int) -> Fraction:
    """Exact standard-hash value whose forward image is c / 2^m.

    Defined as inf{t : forward(t) >= c/2^m}; c may equal 2^m (maps to 1).
    """
    q = model.q
    bp = model.breakpoints
    if m < q:
        return Fraction(int(bp[c << (q - m)]), _FP_ONE)
    j = c >> (m - q)
    if j == (1 << q):
        return Fraction(1)
    r = c - (j << (m - q))
    sj = int(bp[j])
    delta = int(bp[j + 1]) - sj
    num = (sj << (m - q)) + r * delta
    return Fraction(num, _FP_ONE << (m - q))


def balanced_decode(model: BalancedModel, h: HashCode) -> HashInterval:
    """Exact preimage of [value(h), value(h) + 2^-bits) under the forward map.

    The interval is empty (start == end) exactly when the code's bucket
    carries no width in the model.
    """
    return HashInterval(
        start=_inverse_point(model, h.code, h.bits),
        end=_inverse_point(model, h.code + 1, h.bits),
    )


def forward_to_grid(model: BalancedModel, u_fp: int, m: int, *, ceil: bool = False) -> int:
    """Forward balanced value of u = u_fp/2^63 rounded onto the 2^-m grid.

    Returns floor(F(u) * 2^m), or the ceiling when ceil is set; u_fp may
    equal 2^63 (u = 1, which maps to 2^m exactly).
    """
    if u_fp >= _FP_ONE:
        return 1 << m
    q = model.q
    bp = model.breakpoints
    i = _bucket_of(model, u_fp)
    si = int(bp[i])
    delta = int(bp[i + 1]) - si
    num = i * delta + (u_fp - si)
    if m >= q:
        a, den = num << (m - q), delta
    else:
        a, den = num, delta << (q - m)
    if ceil:
        return -((-a) // den)
    return a // den


def _dyadic_cover(lo: int, hi: int, depth: int) -> list[tuple[int, int]]:
    """Maximal dyadic intervals tiling [lo, hi) on the 2^-depth grid.

    Returns (code, bits) pairs; bits may be 0 for the full interval.
    """
    out = []
    cur = lo
    while cur < hi:
        align = (cur & -cur).bit_length() - 1 if cur else depth
        fit_ = (hi - cur).bit_length() - 1
        s = min(align, fit_, depth)
        out.append((cur >> s, depth - s))
        cur += 1 << s
    return out


def interval_cells(interval: HashInterval, depth_cap: int) -> list[CellRect]:
    """Geographic cells covering a standard-hash interval.

    The interval is rounded outward onto the 2^-depth_cap grid and split
    into maximal dyadic pieces, each of which is an exact cell rectangle.
    """
    if not 1 <= depth_cap <= MAX_BITS:
        raise ValueError(f"depth cap must be in [1, {MAX_BITS}]: {depth_cap}")
    if interval.empty:
        return []
    lo = (interval.start.numerator << depth_cap) // interval.start.denominator
    hi = -((-(interval.end.numerator << depth_cap)) // interval.end.denominator)
    return [_cell_rect(code, bits) for code, bits in _dyadic_cover(lo, hi, depth_cap)]


def bucket_regions(
    model: BalancedModel, k: int, depth_cap: int
) -> list[tuple[str, list[CellRect]]]:
    """Geographic rectangles covering each k-bit balanced bucket.

    Each bucket's standard-hash interval is rounded outward onto the
    2^-depth_cap grid and decomposed into maximal dyadic cells, so the
    rectangles of a bucket cover its true region (neighbouring buckets may
    overlap by up to one grid cell unless the model's breakpoints lie on the
    grid).  Empty buckets get an empty rectangle list.
    """
    if not 1 <= k <= MAX_BALANCE_BITS:
        raise ValueError(f"prefix bits must be in [1, {MAX_BALANCE_BITS}]: {k}")
    if not 1 <= depth_cap <= MAX_BITS:
        raise ValueError(f"depth cap must be in [1, {MAX_BITS}]: {depth_cap}")
    if k > model.q:
        warnings.warn(
            f"bucket prefix of {k} bits exceeds the model's balance depth q={model.q}; "
            "buckets beyond q are not balanced",
            stacklevel=2,
        )
    regions = []
    for prefix in range(1 << k):
        label = format(prefix, f"0{k}b")
        iv = balanced_decode(model, HashCode(prefix, k))
        regions.append((label, interval_cells(iv, depth_cap)))
    return regions


def save(model: BalancedModel, destination=None) -> bytes:
    """Serialize a model; optionally write it to a path or binary file.

    Layout (little endian): magic "BGH1", version byte, q byte, two reserved
    zero bytes, N and W as u64 (24-byte header), 2^q + 1 breakpoints as u64,
    CRC-32 of header plus payload.
    """
    header = (
        _MAGIC
        + bytes((_VERSION, model.q, 0, 0))
        + model.n_points.to_bytes(8, "little")
        + model.total_weight.to_bytes(8, "little")
    )
    payload = model.breakpoints.astype("<u8").tobytes()
    blob = header + payload + zlib.crc32(header + payload).to_bytes(4, "little")
    if destination is not None:
        if hasattr(destination, "write"):
            destination.write(blob)
        else:
            Path(destination).write_bytes(blob)
    return blob


def load(source) -> BalancedModel:
    """Read a model from bytes, a path, or a binary file; validates
    magic, version, length, checksum, and the model invariants."""
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
    else:
        data = Path(source).read_bytes()
    if len(data) < _HEADER_LEN + 4:
        raise ValueError(f"model data too short: {len(data)} bytes")
    if data[:4] != _MAGIC:
        raise ValueError(f"bad magic {data[:4]!r}, expected {_MAGIC!r}")
    version = data[4]
    if version != _VERSION:
        raise ValueError(f"unsupported model version {version}")
    q = data[5]
    if not 1 <= q <= MAX_BALANCE_BITS:
        raise ValueError(f"q out of range [1, {MAX_BALANCE_BITS}]: {q}")
    expected = _HEADER_LEN + ((1 << q) + 1) * 8 + 4
    if len(data) != expected:
        raise ValueError(f"model length mismatch: {len(data)} bytes, expected {expected} for q={q}")
    stored_crc = int.from_bytes(data[-4:], "little")
    actual_crc = zlib.crc32(data[:-4])
    if stored_crc != actual_crc:
        raise ValueError(f"checksum mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}")
    n_points = int.from_bytes(data[8:16], "little")
    total_weight = int.from_bytes(data[16:24], "little")
    bp = np.frombuffer(data[_HEADER_LEN:-4], dtype="<u8").astype(np.uint64)
    return BalancedModel(q=q, breakpoints=bp, n_points=n_points, total_weight=total_weight)
