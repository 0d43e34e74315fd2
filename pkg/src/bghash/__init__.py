"""Entropy-balanced geohash: fit a monotone rescaling of the standard
Z-order geohash from sampled data so equal-length prefixes carry roughly
equal data volume, then encode points, measure entropy, build
spatiotemporal keys, and plan range scans."""

from .balanced import (
    BalancedModel,
    HashInterval,
    WeightedPoint,
    balanced_decode,
    balanced_encode,
    bucket_regions,
    fit,
    interval_cells,
    load,
    save,
)
from .core import (
    BASE32,
    CellRect,
    GeoPoint,
    HashCode,
    UnitPoint,
    WORLD,
    decode_cell,
    encode,
    hash60,
    parse_base32,
    render_base32,
    to_unit,
)
from .ingest import (
    MixtureComponent,
    MixtureSpec,
    export_buckets_geojson,
    read_points_csv,
    synth_mixture,
    write_points_csv,
)
from .metrics import (
    BoundResult,
    EntropyReport,
    EntropyRow,
    entropy,
    entropy_curve,
    theorem_bound,
)
from .stkey import (
    KeyRange,
    QueryPlan,
    StKey,
    StKeyConfig,
    cover_bbox,
    make_key,
    parse_key,
    plan_query,
)

__version__ = "0.1.0"

__all__ = [
    "BASE32",
    "BalancedModel",
    "BoundResult",
    "CellRect",
    "EntropyReport",
    "EntropyRow",
    "GeoPoint",
    "HashCode",
    "HashInterval",
    "KeyRange",
    "MixtureComponent",
    "MixtureSpec",
    "QueryPlan",
    "StKey",
    "StKeyConfig",
    "UnitPoint",
    "WORLD",
    "WeightedPoint",
    "balanced_decode",
    "balanced_encode",
    "bucket_regions",
    "cover_bbox",
    "decode_cell",
    "encode",
    "entropy",
    "entropy_curve",
    "export_buckets_geojson",
    "fit",
    "hash60",
    "interval_cells",
    "load",
    "make_key",
    "parse_base32",
    "parse_key",
    "plan_query",
    "read_points_csv",
    "render_base32",
    "save",
    "synth_mixture",
    "theorem_bound",
    "to_unit",
    "write_points_csv",
]
