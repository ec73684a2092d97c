"""Versioned on-disk formats: pair files, scene/RANSAC configs, bench outputs.

All files are JSON (or JSONL / CSV for benchmark outputs) with a top-level
"format_version": 1. Serialization keeps full float precision through repr
round-tripping and sorts object keys, so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict
from typing import Optional, Sequence

from .geometry import CameraIntrinsics, Correspondence, ImagePoint
from .robust import RansacConfig
from .synthbench import BenchCell, DepthCorruption, SceneConfig, ScenePair

FORMAT_VERSION = 1

__all__ = [
    "PairFileError",
    "load_pair_file",
    "save_pair_file",
    "pair_file_from_scene",
    "load_scene_config",
    "load_ransac_config",
    "load_bench_grid",
    "dump_json",
    "bench_rows_to_csv",
    "bench_records_to_jsonl",
]


class PairFileError(ValueError):
    """The file is not a well-formed pair/config document."""


def dump_json(obj) -> str:
    """Canonical JSON text: sorted keys, exact float round-trip, newline end."""
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _check_version(doc: dict, path: str) -> None:
    if not isinstance(doc, dict):
        raise PairFileError(f"{path}: expected a JSON object at top level")
    v = doc.get("format_version")
    if v != FORMAT_VERSION:
        raise PairFileError(f"{path}: unsupported format_version {v!r}")


def _camera_from(doc, path) -> Optional[CameraIntrinsics]:
    if doc is None:
        return None
    try:
        return CameraIntrinsics(float(doc["f"]), float(doc.get("cx", 0.0)),
                                float(doc.get("cy", 0.0)))
    except (KeyError, TypeError, ValueError) as e:
        raise PairFileError(f"{path}: bad camera block: {e}") from e


def load_pair_file(path: str):
    """Read a pair file -> (correspondences, K1, K2, meta dict)."""
    try:
        with open(path, "r") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise PairFileError(f"{path}: {e}") from e
    _check_version(doc, path)
    cams = doc.get("cameras") or {}
    K1 = _camera_from(cams.get("K1"), path)
    K2 = _camera_from(cams.get("K2"), path)
    matches = doc.get("matches")
    if not isinstance(matches, list):
        raise PairFileError(f"{path}: missing 'matches' list")
    corrs = []
    for i, m in enumerate(matches):
        try:
            d1 = m.get("d1")
            d2 = m.get("d2")
            corrs.append(
                Correspondence(
                    ImagePoint(float(m["x1"]), float(m["y1"])),
                    ImagePoint(float(m["x2"]), float(m["y2"])),
                    None if d1 is None else float(d1),
                    None if d2 is None else float(d2),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise PairFileError(f"{path}: match {i}: {e}") from e
    return corrs, K1, K2, doc.get("meta") or {}


def _match_dict(c: Correspondence) -> dict:
    m = {"x1": c.p.x, "y1": c.p.y, "x2": c.q.x, "y2": c.q.y}
    if c.depth1 is not None:
        m["d1"] = c.depth1
    if c.depth2 is not None:
        m["d2"] = c.depth2
    return m


def save_pair_file(
    path: str,
    correspondences: Sequence[Correspondence],
    K1: Optional[CameraIntrinsics] = None,
    K2: Optional[CameraIntrinsics] = None,
    meta: Optional[dict] = None,
) -> None:
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "matches": [_match_dict(c) for c in correspondences],
        "meta": meta or {},
    }
    cams = {}
    if K1 is not None:
        cams["K1"] = {"f": K1.f, "cx": K1.cx, "cy": K1.cy}
    if K2 is not None:
        cams["K2"] = {"f": K2.f, "cx": K2.cx, "cy": K2.cy}
    if cams:
        doc["cameras"] = cams
    with open(path, "w") as fh:
        fh.write(dump_json(doc))


def pair_file_from_scene(scene: ScenePair) -> tuple:
    """(correspondences, K1, K2, meta-with-ground-truth) for saving."""
    gt = {
        "rotation": [float(x) for x in scene.gt_pose.rotation.matrix.ravel()],
        "translation": [float(x) for x in scene.gt_pose.translation],
        "s": scene.gt_params.scale,
        "u": scene.gt_params.shift1,
        "v": scene.gt_params.shift2,
        "f1": scene.K1.f,
        "f2": scene.K2.f,
        "outliers": [int(i) for i in scene.outlier_mask.nonzero()[0]],
    }
    return scene.correspondences, scene.K1, scene.K2, {"gt": gt}


# ---------------------------------------------------------------------------
# configs
# ---------------------------------------------------------------------------

def load_scene_config(path: str) -> SceneConfig:
    try:
        with open(path, "r") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise PairFileError(f"{path}: {e}") from e
    _check_version(doc, path)
    return scene_config_from_dict(doc, path)


def scene_config_from_dict(doc: dict, path: str = "<config>") -> SceneConfig:
    try:
        depth = DepthCorruption(**doc.get("depth", {}))
        kwargs = {
            k: doc[k]
            for k in (
                "n_points", "rotation_magnitude_deg", "baseline", "f1", "f2",
                "image_size", "pixel_noise_sigma", "outlier_fraction", "seed",
            )
            if k in doc
        }
        if "depth_range" in doc:
            kwargs["depth_range"] = tuple(doc["depth_range"])
        return SceneConfig(depth=depth, **kwargs)
    except (TypeError, ValueError) as e:
        raise PairFileError(f"{path}: bad scene config: {e}") from e


def ransac_config_from_dict(doc: dict, path: str = "<config>") -> RansacConfig:
    try:
        return RansacConfig(**doc)
    except (TypeError, ValueError) as e:
        raise PairFileError(f"{path}: bad RANSAC config: {e}") from e


def load_ransac_config(path: str) -> RansacConfig:
    try:
        with open(path, "r") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise PairFileError(f"{path}: {e}") from e
    _check_version(doc, path)
    doc = {k: v for k, v in doc.items() if k != "format_version"}
    return ransac_config_from_dict(doc, path)


def load_bench_grid(path: str) -> list[BenchCell]:
    try:
        with open(path, "r") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise PairFileError(f"{path}: {e}") from e
    _check_version(doc, path)
    cells = doc.get("cells")
    if not isinstance(cells, list) or not cells:
        raise PairFileError(f"{path}: missing non-empty 'cells' list")
    out = []
    for i, cd in enumerate(cells):
        try:
            scene = scene_config_from_dict(cd.get("scene", {}), path)
            ransac = ransac_config_from_dict(cd.get("ransac", {}), path)
            out.append(BenchCell(scene=scene, solver=cd["solver"], ransac=ransac))
        except (KeyError, TypeError, ValueError) as e:
            raise PairFileError(f"{path}: cell {i}: {e}") from e
    return out


# ---------------------------------------------------------------------------
# benchmark outputs
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def bench_rows_to_csv(rows: Sequence[dict], include_timing: bool = False) -> str:
    cols = [
        "solver", "noise_px", "outlier_fraction",
        "median_pose_err_deg", "maa_pose", "maa_focal",
    ]
    if include_timing:
        cols.append("median_runtime_us")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def bench_records_to_jsonl(records: Sequence[dict], include_timing: bool = False) -> str:
    lines = []
    for r in records:
        r = dict(r)
        if not include_timing:
            r.pop("runtime_us", None)
        for k, v in list(r.items()):
            if isinstance(v, float) and (math.isinf(v) or math.isnan(v)):
                r[k] = None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        lines.append(json.dumps(r, sort_keys=True))
    return "\n".join(lines) + "\n"
