"""Command-line surface: fit, encode, decode, entropy, bound, buckets,
plan, synth.

Machine-readable output goes to stdout, diagnostics to stderr.  Exit codes:
0 success, 1 runtime or data error, 2 usage error.  File outputs are written
atomically (temp file then rename).
"""
from __future__ import annotations

import argparse
import io
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from .balanced import (
    balanced_decode,
    balanced_encode,
    bucket_regions,
    fit,
    interval_cells,
    load,
    save,
)
from .core import CellRect, GeoPoint, HashCode, render_base32
from .ingest import MixtureSpec, export_buckets_geojson, read_points_csv, synth_mixture, write_points_csv
from .metrics import EntropyReport, entropy_curve, theorem_bound
from .stkey import StKeyConfig, make_key, parse_key, plan_query


class _UsageError(ValueError):
    """Bad flag combination; maps to exit code 2."""


def _write_atomic(path, data) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp.{os.getpid()}")
    try:
        if isinstance(data, bytes):
            tmp.write_bytes(data)
        else:
            tmp.write_text(data, encoding="utf-8")
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def _parse_iso(text: str) -> int:
    t = text.strip()
    if t.endswith(("Z", "z")):
        t = t[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(t)
    except ValueError:
        raise ValueError(f"invalid ISO-8601 timestamp: {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _parse_bits_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"--bits must be a comma-separated integer list: {text!r}") from None


def _cmd_fit(args) -> int:
    points = read_points_csv(args.input)
    model = fit(points, args.q)
    _write_atomic(args.output, save(model))
    print(
        f"fitted q={model.q} model from {len(points)} rows "
        f"(N={model.n_points}, W={model.total_weight}) -> {args.output}",
        file=sys.stderr,
    )
    return 0


def _cmd_encode(args) -> int:
    model = load(args.model)
    point = GeoPoint(args.lat, args.lon)
    if args.time is not None:
        if args.resolution is None or args.prefix_bits is None:
            raise _UsageError("--time requires --resolution and --prefix-bits")
        config = StKeyConfig(
            prefix_bits=args.prefix_bits,
            time_resolution=args.resolution,
            suffix_bits=args.suffix_bits or 0,
        )
        key = make_key(config, model, point, _parse_iso(args.time))
        print(key.text())
        return 0
    h = balanced_encode(model, point, args.bits)
    print(render_base32(h) if args.bits % 5 == 0 else h.bit_string())
    return 0


def _cmd_decode(args) -> int:
    model = load(args.model)
    key = parse_key(args.key)
    bits = key.prefix_bits + key.suffix_bits
    code = (key.prefix << key.suffix_bits) | key.suffix
    interval = balanced_decode(model, HashCode(code, bits))
    cells = [
        [r.lon_min, r.lat_min, r.lon_max, r.lat_max]
        for r in interval_cells(interval, bits)
    ]
    doc = {
        "prefix_bits": key.prefix_bits,
        "prefix": format(key.prefix, f"0{key.prefix_bits // 4}x"),
        "time_bucket": key.time_bucket,
        "suffix_bits": key.suffix_bits,
        "suffix": format(key.suffix, f"0{key.suffix_bits // 4}x") if key.suffix_bits else "",
        "hash_interval": {
            "start": float(interval.start),
            "end": float(interval.end),
            "empty": interval.empty,
        },
        "cells": cells,
    }
    print(json.dumps(doc))
    return 0


def _cmd_entropy(args) -> int:
    points = read_points_csv(args.input)
    precisions = _parse_bits_list(args.bits)
    reports = []
    if args.scheme in ("standard", "both"):
        reports.append(entropy_curve(points, "standard", precisions))
    if args.scheme in ("balanced", "both"):
        if args.model is None:
            raise _UsageError(f"--scheme {args.scheme} requires --model")
        reports.append(entropy_curve(points, load(args.model), precisions))
    sys.stdout.write(EntropyReport.merge(*reports).to_csv())
    return 0


def _cmd_bound(args) -> int:
    result = theorem_bound(args.q, args.n, args.a)
    print(f"threshold\t{result.threshold:.4f}")
    print(f"probability\t{result.probability_lower_bound:.4f}")
    return 0


def _cmd_buckets(args) -> int:
    model = load(args.model)
    regions = bucket_regions(model, args.prefix_bits, args.depth_cap)
    _write_atomic(args.output, export_buckets_geojson(regions))
    print(f"wrote {len(regions)} bucket features -> {args.output}", file=sys.stderr)
    return 0


def _cmd_plan(args) -> int:
    model = load(args.model)
    parts = args.bbox.split(",")
    if len(parts) != 4:
        raise _UsageError(f"--bbox must be minlon,minlat,maxlon,maxlat: {args.bbox!r}")
    try:
        min_lon, min_lat, max_lon, max_lat = (float(p) for p in parts)
    except ValueError:
        raise _UsageError(f"--bbox must contain four numbers: {args.bbox!r}") from None
    bbox = CellRect(lat_min=min_lat, lat_max=max_lat, lon_min=min_lon, lon_max=max_lon)
    config = StKeyConfig(prefix_bits=args.prefix_bits, time_resolution=args.resolution)
    plan = plan_query(
        config, model, bbox, _parse_iso(args.t_from), _parse_iso(args.t_to), args.max_ranges
    )
    sys.stdout.write(plan.to_text())
    return 0


def _cmd_synth(args) -> int:
    spec = MixtureSpec.from_json(args.spec)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    points = synth_mixture(spec, args.n)
    buf = io.StringIO()
    write_points_csv(points, buf)
    _write_atomic(args.output, buf.getvalue())
    print(f"wrote {len(points)} points -> {args.output}", file=sys.stderr)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bghash",
        description="Data-balanced geohash: fit, encode, measure, and plan range scans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a balanced model from weighted-point CSV")
    p.add_argument("--input", required=True, help="input CSV (lat,lon[,weight])")
    p.add_argument("--q", required=True, type=int, help="balance depth in bits")
    p.add_argument("--output", required=True, help="output model file")
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("encode", help="encode a point (optionally as a spatiotemporal key)")
    p.add_argument("--model", required=True)
    p.add_argument("--lat", required=True, help="latitude in degrees (decimal text kept exact)")
    p.add_argument("--lon", required=True, help="longitude in degrees")
    p.add_argument("--bits", type=int, default=40, help="hash precision (default 40)")
    p.add_argument("--time", help="ISO-8601 timestamp; switches to key output")
    p.add_argument("--resolution", type=int, help="seconds per time bucket")
    p.add_argument("--prefix-bits", dest="prefix_bits", type=int)
    p.add_argument("--suffix-bits", dest="suffix_bits", type=int, default=0)
    p.set_defaults(handler=_cmd_encode)

    p = sub.add_parser("decode", help="decode a key back to its hash interval and cells")
    p.add_argument("--model", required=True)
    p.add_argument("--key", required=True)
    p.set_defaults(handler=_cmd_decode)

    p = sub.add_parser("entropy", help="entropy curve of a point sample")
    p.add_argument("--input", required=True)
    p.add_argument("--model")
    p.add_argument("--bits", required=True, help="comma-separated precisions, e.g. 1,2,4")
    p.add_argument("--scheme", choices=("standard", "balanced", "both"), default="standard")
    p.set_defaults(handler=_cmd_entropy)

    p = sub.add_parser("bound", help="entropy threshold and probability lower bound")
    p.add_argument("--q", required=True, type=int)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--a", required=True, type=float)
    p.set_defaults(handler=_cmd_bound)

    p = sub.add_parser("buckets", help="export bucket regions as GeoJSON")
    p.add_argument("--model", required=True)
    p.add_argument("--prefix-bits", dest="prefix_bits", required=True, type=int)
    p.add_argument("--depth-cap", dest="depth_cap", required=True, type=int)
    p.add_argument("--output", required=True)
    p.set_defaults(handler=_cmd_buckets)

    p = sub.add_parser("plan", help="plan key ranges for a box and time window")
    p.add_argument("--model", required=True)
    p.add_argument(
        "--bbox", required=True,
        help="minlon,minlat,maxlon,maxlat (use --bbox=... when values are negative)",
    )
    p.add_argument("--from", dest="t_from", required=True, help="ISO-8601 window start")
    p.add_argument("--to", dest="t_to", required=True, help="ISO-8601 window end")
    p.add_argument("--resolution", required=True, type=int, help="seconds per time bucket")
    p.add_argument("--prefix-bits", dest="prefix_bits", required=True, type=int)
    p.add_argument("--max-ranges", dest="max_ranges", required=True, type=int)
    p.set_defaults(handler=_cmd_plan)

    p = sub.add_parser("synth", help="generate deterministic synthetic points")
    p.add_argument("--spec", required=True, help="mixture spec JSON file")
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--seed", type=int, help="override the spec's seed")
    p.add_argument("--output", required=True)
    p.set_defaults(handler=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 2
    try:
        return args.handler(args) or 0
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
