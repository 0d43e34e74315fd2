"""Shared test utilities: an independent reference geohash (float bisection,
used as an oracle against the fixed-point implementation), exact point
construction from hash codes, and mixture fixtures."""
from __future__ import annotations

import numpy as np

from bghash import GeoPoint, MixtureComponent, MixtureSpec
from bghash.core import BASE32, _compact

REF_ALPHABET = BASE32


def reference_bits(lat: float, lon: float, nbits: int) -> str:
    """Classic bisection geohash, independent of the integer implementation."""
    lat_lo, lat_hi = -90.0, 90.0
    lon_lo, lon_hi = -180.0, 180.0
    out = []
    for i in range(nbits):
        if i % 2 == 0:
            mid = (lon_lo + lon_hi) / 2
            if lon >= mid:
                out.append("1")
                lon_lo = mid
            else:
                out.append("0")
                lon_hi = mid
        else:
            mid = (lat_lo + lat_hi) / 2
            if lat >= mid:
                out.append("1")
                lat_lo = mid
            else:
                out.append("0")
                lat_hi = mid
    return "".join(out)


def reference_base32(lat: float, lon: float, nchars: int) -> str:
    bits = reference_bits(lat, lon, 5 * nchars)
    return "".join(REF_ALPHABET[int(bits[5 * i : 5 * i + 5], 2)] for i in range(nchars))


def point_for_code(code60: int) -> GeoPoint:
    """A point whose exact 60-bit hash equals code60.

    Requires the low 30 bits of each deinterleaved axis to be zero, which
    holds for any code60 with zero low bits beyond position 60-2*30; in
    practice pass codes of the form value << k with k >= 0 and mask the low
    bits if needed.
    """
    x30 = _compact(code60 >> 1)
    y30 = _compact(code60)
    lon = (x30 * 360.0) / (1 << 30) - 180.0
    lat = (y30 * 180.0) / (1 << 30) - 90.0
    return GeoPoint(lat, lon)


def random_geopoints(rng: np.random.Generator, n: int) -> list[GeoPoint]:
    lats = -90.0 + 180.0 * rng.random(n)
    lons = -180.0 + 360.0 * rng.random(n)
    return [GeoPoint(float(la), float(lo)) for la, lo in zip(lats, lons)]


def mild_mixture(seed: int) -> MixtureSpec:
    """Skewed but moderate density contrast (order 10:1), used where the
    balance map must recover near-uniform bucket masses."""
    return MixtureSpec(
        components=(
            MixtureComponent(GeoPoint(40.0, -95.0), 8.0, 14.0, 0.30),
            MixtureComponent(GeoPoint(-10.0, 30.0), 10.0, 18.0, 0.25),
            MixtureComponent(GeoPoint(25.0, 105.0), 9.0, 15.0, 0.20),
        ),
        uniform_floor=0.25,
        seed=seed,
    )


def skewed5_mixture(seed: int) -> MixtureSpec:
    """Five-component skewed mixture for fit-quality trials."""
    return MixtureSpec(
        components=(
            MixtureComponent(GeoPoint(40.7, -74.0), 2.0, 2.0, 0.30),
            MixtureComponent(GeoPoint(34.1, -118.2), 3.0, 3.0, 0.25),
            MixtureComponent(GeoPoint(41.9, -87.6), 1.5, 1.5, 0.20),
            MixtureComponent(GeoPoint(29.8, -95.4), 2.5, 2.5, 0.15),
            MixtureComponent(GeoPoint(47.6, -122.3), 2.0, 2.0, 0.05),
        ),
        uniform_floor=0.05,
        seed=seed,
    )
