"""Point ingestion, deterministic synthetic data, and export formats.

CSV format: UTF-8, comma separated, header ``lat,lon,weight`` (the weight
column may be omitted and defaults to 1), plain decimal numbers.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .balanced import WeightedPoint
from .core import CellRect, GeoPoint


def _open_text(source):
    if hasattr(source, "read"):
        return source, False
    return open(source, "r", encoding="utf-8", newline=""), True


def read_points_csv(source) -> list[WeightedPoint]:
    """Read weighted points from a path or text file.

    Rows are parsed strictly: malformed numbers, out-of-range coordinates,
    or wrong column counts raise with the offending line number.
    """
    fh, owned = _open_text(source)
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("missing CSV header") from None
        header = [h.strip().lower() for h in header]
        if header not in (["lat", "lon"], ["lat", "lon", "weight"]):
            raise ValueError(f"expected header 'lat,lon[,weight]', got {','.join(header)!r}")
        has_weight = len(header) == 3
        points = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"expected {len(header)} columns at line {lineno}, got {len(row)}")
            try:
                lat = float(row[0])
                lon = float(row[1])
            except ValueError:
                raise ValueError(f"malformed coordinate at line {lineno}: {row!r}") from None
            if has_weight:
                try:
                    weight = int(row[2])
                except ValueError:
                    raise ValueError(f"malformed weight at line {lineno}: {row[2]!r}") from None
            else:
                weight = 1
            try:
                points.append(WeightedPoint(GeoPoint(lat, lon), weight))
            except ValueError as exc:
                raise ValueError(f"{exc} at line {lineno}") from None
        return points
    finally:
        if owned:
            fh.close()


def write_points_csv(points: Sequence[WeightedPoint], destination) -> None:
    """Write points as ``lat,lon,weight`` rows; floats use shortest repr."""
    if hasattr(destination, "write"):
        fh, owned = destination, False
    else:
        fh, owned = open(destination, "w", encoding="utf-8", newline=""), True
    try:
        fh.write("lat,lon,weight\n")
        for wp in points:
            fh.write(f"{wp.point.lat!r},{wp.point.lon!r},{wp.weight}\n")
    finally:
        if owned:
            fh.close()


@dataclass(frozen=True, slots=True)
class MixtureComponent:
    """One Gaussian blob of a synthetic mixture."""

    center: GeoPoint
    sigma_lat: float
    sigma_lon: float
    weight: float

    def __post_init__(self):
        if not (self.sigma_lat > 0 and self.sigma_lon > 0):
            raise ValueError(f"sigmas must be positive: {self.sigma_lat}, {self.sigma_lon}")
        if not self.weight > 0:
            raise ValueError(f"mixing weight must be positive: {self.weight}")


@dataclass(frozen=True)
class MixtureSpec:
    """A seeded mixture of Gaussian components plus a uniform floor.

    Component weights and the uniform floor must sum to 1.
    """

    components: tuple[MixtureComponent, ...] = ()
    uniform_floor: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not 0.0 <= self.uniform_floor <= 1.0:
            raise ValueError(f"uniform_floor must be in [0, 1]: {self.uniform_floor}")
        total = sum(c.weight for c in self.components) + self.uniform_floor
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mixing weights plus uniform_floor must sum to 1, got {total}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise TypeError("seed must be an integer")
        if not 0 <= self.seed < (1 << 64):
            raise ValueError(f"seed must be in [0, 2^64): {self.seed}")

    @classmethod
    def from_dict(cls, data: dict) -> "MixtureSpec":
        comps = tuple(
            MixtureComponent(
                center=GeoPoint(float(c["lat"]), float(c["lon"])),
                sigma_lat=float(c["sigma_lat"]),
                sigma_lon=float(c["sigma_lon"]),
                weight=float(c["weight"]),
            )
            for c in data.get("components", [])
        )
        return cls(
            components=comps,
            uniform_floor=float(data.get("uniform_floor", 0.0)),
            seed=int(data.get("seed", 0)),
        )

    @classmethod
    def from_json(cls, source) -> "MixtureSpec":
        if hasattr(source, "read"):
            data = json.load(source)
        else:
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "uniform_floor": self.uniform_floor,
            "components": [
                {
                    "lat": c.center.lat,
                    "lon": c.center.lon,
                    "sigma_lat": c.sigma_lat,
                    "sigma_lon": c.sigma_lon,
                    "weight": c.weight,
                }
                for c in self.components
            ],
        }

    def with_seed(self, seed: int) -> "MixtureSpec":
        return MixtureSpec(components=self.components, uniform_floor=self.uniform_floor, seed=seed)


def synth_mixture(spec: MixtureSpec, n: int) -> list[WeightedPoint]:
    """Draw n unit-weight points from a mixture, deterministically by seed.

    The draw sequence is frozen: with rng = numpy default_rng(seed),
    (1) one uniform draw per point selects the component (components in
    listed order, the uniform floor last); (2) uniform-floor points draw an
    (n_u, 2) block mapping to [-90, 90) x [-180, 180); (3) Gaussian points
    draw (k, 2) standard-normal blocks in index order, scaled per component,
    with out-of-domain rows redrawn in further passes until all points land
    inside the half-open domain.
    """
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer: {n}")
    rng = np.random.default_rng(spec.seed)
    k = len(spec.components)
    cum = np.cumsum([c.weight for c in spec.components])

    pick = rng.random(n)
    comp = np.searchsorted(cum, pick, side="right")  # == k selects the uniform floor

    lats = np.empty(n, dtype=np.float64)
    lons = np.empty(n, dtype=np.float64)

    uniform_idx = np.flatnonzero(comp == k)
    if len(uniform_idx):
        u = rng.random((len(uniform_idx), 2))
        lats[uniform_idx] = -90.0 + 180.0 * u[:, 0]
        lons[uniform_idx] = -180.0 + 360.0 * u[:, 1]

    if k:
        c_lat = np.array([float(c.center.lat) for c in spec.components])
        c_lon = np.array([float(c.center.lon) for c in spec.components])
        s_lat = np.array([c.sigma_lat for c in spec.components])
        s_lon = np.array([c.sigma_lon for c in spec.components])
        active = np.flatnonzero(comp < k)
        while len(active):
            z = rng.standard_normal((len(active), 2))
            ci = comp[active]
            la = c_lat[ci] + s_lat[ci] * z[:, 0]
            lo = c_lon[ci] + s_lon[ci] * z[:, 1]
            ok = (la >= -90.0) & (la < 90.0) & (lo >= -180.0) & (lo < 180.0)
            idx = active[ok]
            lats[idx] = la[ok]
            lons[idx] = lo[ok]
            active = active[~ok]

    return [WeightedPoint(GeoPoint(float(la), float(lo)), 1) for la, lo in zip(lats, lons)]


def _rect_ring(rect: CellRect) -> list[list[float]]:
    # closed ring, lon-lat order, counterclockwise
    return [
        [rect.lon_min, rect.lat_min],
        [rect.lon_max, rect.lat_min],
        [rect.lon_max, rect.lat_max],
        [rect.lon_min, rect.lat_max],
        [rect.lon_min, rect.lat_min],
    ]


def export_buckets_geojson(regions: Sequence[tuple[str, Sequence[CellRect]]]) -> str:
    """Render bucket regions as a GeoJSON FeatureCollection string.

    One feature per bucket with properties ``prefix`` (bit string) and
    ``index``; empty buckets carry an empty MultiPolygon and ``empty: true``.
    """
    if not len(regions):
        raise ValueError("no bucket regions to export")
    features = []
    for index, (prefix, rects) in enumerate(regions):
        properties = {"prefix": prefix, "index": index}
        if not rects:
            properties["empty"] = True
        features.append(
            {
                "type": "Feature",
                "properties": properties,
                "geometry": {
                    "type": "MultiPolygon",
                    "coordinates": [[_rect_ring(r)] for r in rects],
                },
            }
        )
    doc = {"type": "FeatureCollection", "features": features}
    return json.dumps(doc, separators=(",", ":")) + "\n"
