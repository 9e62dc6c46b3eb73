"""CSV/JSON codecs for point configurations, networks, profiles and run outputs.

Floats are written in their shortest round-trip form so a file read back
reproduces the exact coordinates. Every manifest carries ``schema: 1``.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from geometry import PointConfig, SamplingModel, Window
from network import FamilyTag, Network, VertexKind
from road_errors import InvalidParameterError, RoadNetError, SerializationError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

POINTS_HEADER = ["id", "x", "y"]
VERTICES_HEADER = ["id", "x", "y", "kind", "cityId"]
EDGES_HEADER = ["u", "v", "length"]
PROFILE_HEADER = ["d_center", "count", "mean_ratio", "max_ratio"]
SUMMARY_HEADER = ["family", "param", "n", "rep", "L", "degree", "rtilde", "rmax", "rave", "unreachable"]
CURVE_HEADER = ["label", "L", "R"]
ANALYTICS_HEADER = ["name", "value", "provenance"]


def fmt(value) -> str:
    """Shortest round-trip text for a number; '' for None, 'inf'/'nan' for specials."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def write_json(path, data: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_json(path) -> dict:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as exc:
        raise SerializationError(str(path), "file not found") from exc
    except json.JSONDecodeError as exc:
        raise SerializationError(str(path), f"invalid JSON: {exc.msg}") from exc


def write_csv(path, header: list[str], rows: Iterable[Iterable]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def _read_csv(path, header: list[str]) -> list[dict]:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != header:
                raise SerializationError(str(path), f"expected header {','.join(header)}, got {reader.fieldnames}")
            return list(reader)
    except FileNotFoundError as exc:
        raise SerializationError(str(path), "file not found") from exc


def _check_schema(path, manifest: dict) -> None:
    if manifest.get("schema") != SCHEMA_VERSION:
        raise SerializationError(str(path), f"unsupported schema {manifest.get('schema')!r}")


# ==================== Points ====================

def sidecar_path(points_path) -> Path:
    return Path(points_path).with_suffix(".json")


def write_points(config: PointConfig, path) -> Path:
    """Write the points CSV and its JSON sidecar."""
    rows = ((i, x, y) for i, (x, y) in enumerate(config.points))
    path = write_csv(path, POINTS_HEADER, rows)
    write_json(sidecar_path(path), {"schema": SCHEMA_VERSION, **config.sidecar()})
    return path


def read_points(path) -> PointConfig:
    """Read a points CSV; window, model and seed come from the sidecar when present."""
    rows = _read_csv(path, POINTS_HEADER)
    try:
        rows.sort(key=lambda r: int(r["id"]))
        xy = np.array([[float(r["x"]), float(r["y"])] for r in rows], dtype=float).reshape(-1, 2)
    except ValueError as exc:
        raise SerializationError(str(path), f"malformed row: {exc}") from exc

    side_file = sidecar_path(path)
    if side_file.exists():
        meta = read_json(side_file)
        if meta.get("n") != len(xy):
            raise SerializationError(str(path), f"sidecar says n={meta.get('n')}, file has {len(xy)} rows")
        side, seed, model = float(meta["side"]), int(meta["seed"]), SamplingModel(meta["model"])
    else:
        side, seed, model = math.sqrt(len(xy)), 0, SamplingModel.FINITE_UNIFORM
    try:
        return PointConfig(window=Window(side), points=xy, seed=seed, model=model)
    except InvalidParameterError as exc:
        raise SerializationError(str(path), str(exc)) from exc


# ==================== Networks ====================

def write_network(net: Network, out_dir) -> Path:
    """Write vertices.csv, edges.csv and manifest.json into a directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vertex_rows = (
        (v, x, y, kind.value, "" if net.city_id(v) is None else net.city_id(v))
        for v, ((x, y), kind) in enumerate(zip(net.positions, net.kinds))
    )
    write_csv(out_dir / "vertices.csv", VERTICES_HEADER, vertex_rows)
    write_csv(out_dir / "edges.csv", EDGES_HEADER,
              ((u, v, length) for (u, v), length in zip(net.edges, net.lengths)))
    manifest = {
        "schema": SCHEMA_VERSION,
        "familyTag": net.family.to_dict(),
        "parameters": dict(sorted(net.family.params.items())),
        "seed": net.config.seed,
        "sourceConfig": {"hash": net.config.config_hash(), **net.config.sidecar()},
    }
    write_json(out_dir / "manifest.json", manifest)
    return out_dir


def read_network(in_dir) -> Network:
    in_dir = Path(in_dir)
    manifest = read_json(in_dir / "manifest.json")
    _check_schema(in_dir / "manifest.json", manifest)
    vertices = _read_csv(in_dir / "vertices.csv", VERTICES_HEADER)
    edge_rows = _read_csv(in_dir / "edges.csv", EDGES_HEADER)
    try:
        vertices.sort(key=lambda r: int(r["id"]))
        kinds = [VertexKind(r["kind"]) for r in vertices]
        xy = np.array([[float(r["x"]), float(r["y"])] for r in vertices], dtype=float).reshape(-1, 2)
        edges = [(int(r["u"]), int(r["v"])) for r in edge_rows]
    except ValueError as exc:
        raise SerializationError(str(in_dir), f"malformed row: {exc}") from exc

    n = sum(1 for k in kinds if k == VertexKind.CITY)
    if kinds[:n] != [VertexKind.CITY] * n:
        raise SerializationError(str(in_dir), "city vertices must come first")
    source = manifest["sourceConfig"]
    config = PointConfig(window=Window(float(source["side"])), points=xy[:n],
                         seed=int(source["seed"]), model=SamplingModel(source["model"]))
    if config.config_hash() != source["hash"]:
        raise SerializationError(str(in_dir), "city coordinates do not match the recorded config hash")
    tag = manifest["familyTag"]
    try:
        return Network(config, edges, FamilyTag(tag["label"], tag.get("params", {})),
                       extra_positions=xy[n:], extra_kinds=kinds[n:])
    except RoadNetError as exc:
        raise SerializationError(str(in_dir), str(exc)) from exc


# ==================== Statistics ====================

def write_profile(profile, path) -> Path:
    rows = ((b.center, b.count, b.mean_ratio, b.max_ratio) for b in profile.bins)
    return write_csv(path, PROFILE_HEADER, rows)


def write_summary(summary, path) -> Path:
    return write_json(path, {"schema": SCHEMA_VERSION, **summary.to_dict()})


def write_records(records, path) -> Path:
    return write_csv(path, SUMMARY_HEADER, (r.to_row() for r in records))


def write_curve(points, path) -> Path:
    return write_csv(path, CURVE_HEADER, ((p.label, p.L, p.R) for p in points))


def write_analytics(values, path: Optional[str] = None):
    """Write analytic constants as name,value,provenance (to a file or a list of lines)."""
    rows = [(v.name, v.value, v.provenance.value) for v in values]
    if path is not None:
        return write_csv(path, ANALYTICS_HEADER, rows)
    return [",".join(ANALYTICS_HEADER)] + [f"{name},{fmt(value)},{prov}" for name, value, prov in rows]
