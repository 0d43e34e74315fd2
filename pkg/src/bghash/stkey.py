"""Spatiotemporal keys (balanced-hash prefix | time bucket | hash suffix)
and range-query planning.

Key text is ``<prefix hex>:<12-digit time bucket>:<suffix hex>`` with fixed
widths, so lexicographic order of rendered keys equals (prefix, time,
suffix) tuple order.  Space is the outermost component.

Plan metrics use balanced-space widths as the data-volume proxy: every
p-bit prefix covers width 2^-p of balanced space, which the fitted model
makes approximately proportional to data mass.  The false-positive measure
compares the plan's spatial footprint against an unmerged fine-grid cover
of the query box; time-only coalescing (merging the per-prefix scans of
adjacent prefixes into one range) does not change the footprint.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .balanced import BalancedModel, balanced_encode, forward_to_grid
from .core import MAX_BITS, CellRect, GeoPoint, _cell_rect

_TIME_DIGITS = 12
_TIME_BUCKET_MAX = 10**_TIME_DIGITS - 1
_DESCENT_CAP = 24  # quadtree refinement floor for box covers


@dataclass(frozen=True, slots=True)
class StKeyConfig:
    """Key layout: prefix bits, seconds per time bucket, suffix bits."""

    prefix_bits: int
    time_resolution: int
    suffix_bits: int = 0

    def __post_init__(self):
        p, s = self.prefix_bits, self.suffix_bits
        if p % 4 or not 4 <= p <= 40:
            raise ValueError(f"prefix_bits must be a multiple of 4 in [4, 40]: {p}")
        if s % 4 or s < 0:
            raise ValueError(f"suffix_bits must be a nonnegative multiple of 4: {s}")
        if p + s > MAX_BITS:
            raise ValueError(f"prefix_bits + suffix_bits must be <= {MAX_BITS}: {p + s}")
        if not isinstance(self.time_resolution, int) or self.time_resolution < 1:
            raise ValueError(f"time_resolution must be a positive integer: {self.time_resolution}")


@dataclass(frozen=True, slots=True)
class StKey:
    """A rendered-width-aware spatiotemporal key."""

    prefix: int
    time_bucket: int
    suffix: int
    prefix_bits: int
    suffix_bits: int

    def __post_init__(self):
        if not 0 <= self.prefix < (1 << self.prefix_bits):
            raise ValueError(f"prefix out of range for {self.prefix_bits} bits: {self.prefix}")
        if self.suffix_bits:
            if not 0 <= self.suffix < (1 << self.suffix_bits):
                raise ValueError(f"suffix out of range for {self.suffix_bits} bits: {self.suffix}")
        elif self.suffix:
            raise ValueError("suffix must be 0 when suffix_bits is 0")
        if not 0 <= self.time_bucket <= _TIME_BUCKET_MAX:
            raise ValueError(f"time_bucket out of range [0, {_TIME_BUCKET_MAX}]: {self.time_bucket}")

    def text(self) -> str:
        sfx = format(self.suffix, f"0{self.suffix_bits // 4}x") if self.suffix_bits else ""
        return f"{self.prefix:0{self.prefix_bits // 4}x}:{self.time_bucket:0{_TIME_DIGITS}d}:{sfx}"

    def __str__(self) -> str:
        return self.text()

    def order_tuple(self) -> tuple[int, int, int]:
        return (self.prefix, self.time_bucket, self.suffix)


def parse_key(text: str, config: StKeyConfig | None = None) -> StKey:
    """Parse key text; widths are taken from the text unless a config pins them."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"key must have three ':'-separated fields: {text!r}")
    pfx, tb, sfx = parts
    if not pfx:
        raise ValueError(f"key has an empty prefix field: {text!r}")
    if len(tb) != _TIME_DIGITS or not tb.isdigit():
        raise ValueError(f"time field must be {_TIME_DIGITS} decimal digits: {tb!r}")
    try:
        prefix = int(pfx, 16)
        suffix = int(sfx, 16) if sfx else 0
    except ValueError:
        raise ValueError(f"prefix/suffix must be lowercase hex: {text!r}") from None
    key = StKey(
        prefix=prefix,
        time_bucket=int(tb),
        suffix=suffix,
        prefix_bits=4 * len(pfx),
        suffix_bits=4 * len(sfx),
    )
    if config is not None and (key.prefix_bits, key.suffix_bits) != (config.prefix_bits, config.suffix_bits):
        raise ValueError(
            f"key widths ({key.prefix_bits}, {key.suffix_bits}) do not match "
            f"config ({config.prefix_bits}, {config.suffix_bits})"
        )
    return key


def make_key(config: StKeyConfig, model: BalancedModel, p: GeoPoint, t: int) -> StKey:
    """Key a point at epoch-seconds t: balanced prefix, floored time bucket,
    balanced suffix."""
    if not isinstance(t, int) or isinstance(t, bool):
        raise ValueError(f"t must be integer epoch seconds: {t!r}")
    if t < 0:
        raise ValueError(f"t must be nonnegative (pre-1970 unsupported): {t}")
    bucket = t // config.time_resolution
    if bucket > _TIME_BUCKET_MAX:
        raise ValueError(f"time bucket {bucket} exceeds the {_TIME_DIGITS}-digit key field")
    code = balanced_encode(model, p, config.prefix_bits + config.suffix_bits).code
    s = config.suffix_bits
    return StKey(
        prefix=code >> s,
        time_bucket=bucket,
        suffix=code & ((1 << s) - 1) if s else 0,
        prefix_bits=config.prefix_bits,
        suffix_bits=s,
    )


@dataclass(frozen=True, slots=True)
class KeyRange:
    """Half-open lexicographic key range [start, end)."""

    start: str
    end: str

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"range start must sort before end: {self.start!r} >= {self.end!r}")

    def contains(self, key: str) -> bool:
        return self.start <= key < self.end


@dataclass(frozen=True, slots=True)
class QueryPlan:
    """Scan ranges plus cost metrics for one spatiotemporal query."""

    ranges: tuple[KeyRange, ...]
    range_count: int
    false_positive_measure: float
    max_range_share: float

    def __post_init__(self):
        for a, b in zip(self.ranges, self.ranges[1:]):
            if not a.end <= b.start:
                raise ValueError(f"ranges must be sorted and disjoint: {a.end!r} > {b.start!r}")
        if self.range_count != len(self.ranges):
            raise ValueError("range_count must equal the number of ranges")

    def to_text(self) -> str:
        lines = [f"{r.start}\t{r.end}" for r in self.ranges]
        lines.append(
            f"# ranges={self.range_count} fp={self.false_positive_measure:.6g} "
            f"max_share={self.max_range_share:.6g}"
        )
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "ranges": [{"start": r.start, "end": r.end} for r in self.ranges],
            "range_count": self.range_count,
            "false_positive_measure": self.false_positive_measure,
            "max_range_share": self.max_range_share,
        }


def _check_bbox(bbox: CellRect) -> None:
    if bbox.lat_min < -90 or bbox.lat_max > 90 or bbox.lon_min < -180 or bbox.lon_max > 180:
        raise ValueError(f"bbox exceeds the coordinate domain: {bbox}")


def _bbox_cells(bbox: CellRect, cap: int) -> list[tuple[int, int]]:
    """Standard dyadic cells covering bbox: fully inside cells are emitted
    maximal, boundary cells at the cap depth.  Ascending hash order."""
    out: list[tuple[int, int]] = []
    stack: list[tuple[int, int]] = [(0, 0)]
    while stack:
        code, depth = stack.pop()
        rect = _cell_rect(code, depth)
        if not rect.intersects(bbox):
            continue
        if depth == cap or rect.within(bbox):
            out.append((code, depth))
            continue
        stack.append(((code << 1) | 1, depth + 1))
        stack.append((code << 1, depth + 1))
    return out


def _raw_cover(model: BalancedModel, bbox: CellRect, m: int, cap: int) -> list[tuple[int, int]]:
    """Merged balanced-grid intervals covering the image of bbox, unbudgeted."""
    intervals: list[tuple[int, int]] = []
    for code, depth in _bbox_cells(bbox, cap):
        u_lo = code << (63 - depth)
        u_hi = (code + 1) << (63 - depth)
        lo = forward_to_grid(model, u_lo, m)
        hi = forward_to_grid(model, u_hi, m, ceil=True)
        intervals.append((lo, hi))
    intervals.sort()
    merged: list[list[int]] = []
    for lo, hi in intervals:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(lo, hi) for lo, hi in merged]


def _merge_to_budget(intervals: list[tuple[int, int]], budget: int) -> list[tuple[int, int]]:
    if len(intervals) <= budget:
        return intervals
    gaps = [intervals[i + 1][0] - intervals[i][1] for i in range(len(intervals) - 1)]
    drop = set(sorted(range(len(gaps)), key=lambda i: (gaps[i], i))[: len(intervals) - budget])
    out = []
    cur_lo, cur_hi = intervals[0]
    for i, (lo, hi) in enumerate(intervals[1:]):
        if i in drop:
            cur_hi = hi
        else:
            out.append((cur_lo, cur_hi))
            cur_lo, cur_hi = lo, hi
    out.append((cur_lo, cur_hi))
    return out


def cover_bbox(
    model: BalancedModel, bbox: CellRect, m: int, max_intervals: int
) -> list[tuple[int, int]]:
    """Balanced-hash intervals covering every point of bbox, on the 2^-m grid.

    The box is decomposed into standard cells, each cell's hash interval is
    pushed through the forward map (monotone, so intervals map to intervals)
    and rounded outward onto the grid, overlaps are merged, and if more than
    max_intervals remain the pairs with the smallest gaps are merged.  The
    union of the output always contains the exact balanced image of bbox.
    """
    if not 1 <= m <= MAX_BITS:
        raise ValueError(f"bit count must be in [1, {MAX_BITS}]: {m}")
    if max_intervals < 1:
        raise ValueError(f"max_intervals must be at least 1: {max_intervals}")
    _check_bbox(bbox)
    raw = _raw_cover(model, bbox, m, min(m, _DESCENT_CAP))
    return _merge_to_budget(raw, max_intervals)


def plan_query(
    config: StKeyConfig,
    model: BalancedModel,
    bbox: CellRect,
    t_start: int,
    t_end: int,
    max_ranges: int,
) -> QueryPlan:
    """Plan key ranges scanning bbox over [t_start, t_end] epoch seconds.

    Each covered prefix value scans its full time window as one range; when
    the budget is tighter than the prefix count, adjacent prefixes coalesce
    into a single range (which then also scans their out-of-window keys).
    Coalescing consumes zero-width gaps first, then the narrowest spatial
    gaps, leftmost first.
    """
    if not (isinstance(t_start, int) and isinstance(t_end, int)):
        raise ValueError("t_start and t_end must be integer epoch seconds")
    if t_start < 0 or t_end < t_start:
        raise ValueError(f"need 0 <= t_start <= t_end, got {t_start}..{t_end}")
    if max_ranges < 1:
        raise ValueError(f"max_ranges must be at least 1: {max_ranges}")
    res = config.time_resolution
    tb0, tb1 = t_start // res, t_end // res
    if tb1 + 1 > _TIME_BUCKET_MAX:
        raise ValueError(f"time bucket {tb1} too large for the {_TIME_DIGITS}-digit key field")

    p = config.prefix_bits
    intervals = cover_bbox(model, bbox, p, max_ranges)

    fine_m = min(MAX_BITS, p + 12)
    fine = _raw_cover(model, bbox, fine_m, min(fine_m, _DESCENT_CAP))
    baseline = Fraction(sum(hi - lo for lo, hi in fine), 1 << fine_m)

    # groups of consecutive prefix values, one key range each
    count = sum(hi - lo for lo, hi in intervals)
    deficit = max(0, count - max_ranges)
    groups: list[tuple[int, int]] = []
    for lo, hi in intervals:
        width = hi - lo
        if deficit >= width - 1:
            groups.append((lo, hi - 1))
            deficit -= width - 1
        elif deficit > 0:
            groups.append((lo, lo + deficit))
            groups.extend((pr, pr) for pr in range(lo + deficit + 1, hi))
            deficit = 0
        else:
            groups.extend((pr, pr) for pr in range(lo, hi))

    s = config.suffix_bits
    ranges = tuple(
        KeyRange(
            start=StKey(pr_a, tb0, 0, p, s).text(),
            end=StKey(pr_b, tb1 + 1, 0, p, s).text(),
        )
        for pr_a, pr_b in groups
    )
    widths = [pr_b - pr_a + 1 for pr_a, pr_b in groups]
    planned = Fraction(sum(widths), 1 << p)
    return QueryPlan(
        ranges=ranges,
        range_count=len(ranges),
        false_positive_measure=float(planned / baseline - 1),
        max_range_share=float(Fraction(max(widths), 1 << p) / planned),
    )
