"""Entropy of hash-prefix bucketings and the fit-quality bound calculator."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .balanced import BalancedModel, WeightedPoint, balanced_codes_batch, point_hashes
from .core import MAX_BITS

Scheme = Union[str, BalancedModel]  # "standard" or a fitted model


def entropy(bucket_weights) -> float:
    """Shannon entropy in bits of a weight histogram.

    H = -sum p_v log2 p_v over buckets with positive weight; empty buckets
    contribute zero.  Raises on negative weights or zero total.
    """
    counts = np.asarray(bucket_weights, dtype=np.float64)
    if counts.ndim != 1:
        counts = counts.ravel()
    if not np.all(np.isfinite(counts)) or (counts < 0).any():
        raise ValueError("bucket weights must be finite and nonnegative")
    total = counts.sum()
    if total <= 0:
        raise ValueError("total bucket weight must be positive")
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p))) + 0.0


@dataclass(frozen=True, slots=True)
class EntropyRow:
    scheme: str
    bits: int
    entropy: float
    entropy_per_bit: float


@dataclass(frozen=True, slots=True)
class EntropyReport:
    """Per-precision entropy rows for one or more hash schemes."""

    rows: tuple[EntropyRow, ...]

    CSV_HEADER = "scheme,bits,entropy,entropy_per_bit"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(f"{r.scheme},{r.bits},{r.entropy:.12g},{r.entropy_per_bit:.12g}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def merge(*reports: "EntropyReport") -> "EntropyReport":
        rows = []
        for rep in reports:
            rows.extend(rep.rows)
        return EntropyReport(rows=tuple(rows))


def _bucket_entropy(codes: np.ndarray, weights: np.ndarray) -> float:
    _, inverse = np.unique(codes, return_inverse=True)
    sums = np.zeros(int(inverse.max()) + 1, dtype=np.uint64)
    np.add.at(sums, inverse, weights)
    return entropy(sums)


def entropy_curve(
    points: Sequence[WeightedPoint],
    scheme: Scheme,
    precisions: Sequence[int],
) -> EntropyReport:
    """Entropy and entropy-per-bit of a point sample at each precision.

    scheme is either the string "standard" (raw interleaved hash) or a
    BalancedModel whose forward map rescales the hash before truncation.
    Weights count as multiplicities.
    """
    if not isinstance(points, Sequence):
        points = list(points)
    if not len(points):
        raise ValueError("entropy_curve needs at least one point")
    if not len(precisions):
        raise ValueError("entropy_curve needs at least one precision")
    for m in precisions:
        if not 1 <= m <= MAX_BITS:
            raise ValueError(f"precision must be in [1, {MAX_BITS}]: {m}")
    if isinstance(scheme, BalancedModel):
        model, label = scheme, "balanced"
    elif scheme == "standard":
        model, label = None, "standard"
    else:
        raise ValueError(f"scheme must be 'standard' or a BalancedModel, got {scheme!r}")

    codes60, weights = point_hashes(points)
    mask = weights > 0
    codes60 = codes60[mask]
    weights = weights[mask]
    if not len(codes60):
        raise ValueError("entropy_curve needs at least one positive-weight point")

    rows = []
    for m in precisions:
        if model is None:
            codes = codes60 >> np.uint64(MAX_BITS - m)
        else:
            codes = balanced_codes_batch(model, codes60, m)
        h = _bucket_entropy(codes, weights)
        rows.append(EntropyRow(scheme=label, bits=m, entropy=h, entropy_per_bit=h / m))
    return EntropyReport(rows=tuple(rows))


@dataclass(frozen=True, slots=True)
class BoundResult:
    """Entropy threshold and its probability lower bound for a fitted map."""

    threshold: float
    probability_lower_bound: float


def theorem_bound(q: int, n: int, a: float) -> BoundResult:
    """Entropy guarantee for a q-bit map fitted from n distinct points.

    With probability at least 1 - 2*exp(-0.49 * 2^(-2q) * n * (1-a)^2), the
    q-bit balanced entropy is at least q * n/(n+2) * a.  The probability can
    be vacuous (negative) for small n or a near 1.

    Note: at q=10, n=10^8, a=2/3 the probability bound evaluates to about
    0.9889, i.e. just under 0.99; the formula value is reported as is.
    """
    if not isinstance(q, int) or q < 1:
        raise ValueError(f"q must be a positive integer: {q}")
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer: {n}")
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must be in [0, 1]: {a}")
    threshold = q * (n / (n + 2)) * a
    exponent = -0.49 * (2.0 ** (-2 * q)) * n * (1.0 - a) ** 2
    return BoundResult(
        threshold=threshold,
        probability_lower_bound=1.0 - 2.0 * math.exp(exponent),
    )
