"""Line-delimited dataset records shared by scripted and human collection.

One JSON object per line. Rasters are zlib-compressed float16 bytes in
base64; everything else is plain JSON. Scripted and human records are
schema-identical so either provenance can feed training unchanged.
"""

from __future__ import annotations

import base64
import json
import zlib
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "bimanual.v1"

KINDS = ("keypoint", "restab", "acting_demo", "bimanual_demo", "stab_demo",
         "trace", "train_report")
PROVENANCES = ("scripted", "human")


class RecordError(Exception):
    pass


def encode_raster(raster: np.ndarray) -> dict:
    arr = np.asarray(raster, dtype=np.float16)
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(zlib.compress(arr.tobytes(), level=6)).decode(),
    }


def decode_raster(blob: dict) -> np.ndarray:
    raw = zlib.decompress(base64.b64decode(blob["data"]))
    return np.frombuffer(raw, dtype=np.float16).reshape(blob["shape"]).astype(np.float32)


def make_record(kind: str, task: str, seed: int, *, provenance: str = "scripted",
                raster: np.ndarray | None = None, proprio=None, label=None,
                variant: str = "in_dist", demo_id: int | None = None,
                step: int | None = None, extras: dict | None = None) -> dict:
    rec = {
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "task": task,
        "variant": variant,
        "seed": int(seed),
        "provenance": provenance,
    }
    if raster is not None:
        rec["raster"] = encode_raster(raster)
    if proprio is not None:
        rec["proprio"] = [float(v) for v in np.asarray(proprio).ravel()]
    if label is not None:
        rec["label"] = label
    if demo_id is not None:
        rec["demo_id"] = int(demo_id)
    if step is not None:
        rec["step"] = int(step)
    if extras:
        rec["extras"] = extras
    validate_record(rec)
    return rec


_LABEL_CHECKS = {
    "keypoint": lambda lab: (isinstance(lab, list) and len(lab) == 2
                             and all(isinstance(v, int) for v in lab)),
    "restab": lambda lab: lab in (0, 1),
    "acting_demo": lambda lab: isinstance(lab, list) and len(lab) == 3,
    "bimanual_demo": lambda lab: isinstance(lab, list) and len(lab) == 8,
    "stab_demo": lambda lab: isinstance(lab, list) and len(lab) == 3,
}


def validate_record(rec: dict) -> None:
    """Raise RecordError when the record does not satisfy the schema."""
    if rec.get("schema") != SCHEMA_VERSION:
        raise RecordError(f"bad schema tag {rec.get('schema')!r}")
    if rec.get("kind") not in KINDS:
        raise RecordError(f"unknown kind {rec.get('kind')!r}")
    if rec.get("provenance") not in PROVENANCES:
        raise RecordError(f"unknown provenance {rec.get('provenance')!r}")
    if not isinstance(rec.get("seed"), int):
        raise RecordError("seed must be an int")
    kind = rec["kind"]
    if kind in _LABEL_CHECKS:
        if "label" not in rec or not _LABEL_CHECKS[kind](rec["label"]):
            raise RecordError(f"bad label for kind {kind!r}: {rec.get('label')!r}")
        if "raster" not in rec or "proprio" not in rec:
            raise RecordError(f"kind {kind!r} requires raster and proprio")
        if len(rec["proprio"]) != 8:
            raise RecordError("proprio must have 8 entries")
    if "raster" in rec:
        blob = rec["raster"]
        if not isinstance(blob, dict) or "shape" not in blob or "data" not in blob:
            raise RecordError("malformed raster blob")


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def write_records(path, records) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w") as f:
        for rec in records:
            validate_record(rec)
            f.write(dumps_record(rec) + "\n")
            n += 1
    return n


def read_records(path, validate: bool = True) -> list[dict]:
    out = []
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise RecordError(f"{path}:{line_no}: not JSON ({e})") from e
            if validate:
                validate_record(rec)
            out.append(rec)
    return out


def group_demos(records: list[dict]) -> dict[int, list[dict]]:
    """Bucket per-frame demo records by demo_id, frames ordered by step."""
    demos: dict[int, list[dict]] = {}
    for rec in records:
        demos.setdefault(rec.get("demo_id", 0), []).append(rec)
    for frames in demos.values():
        frames.sort(key=lambda r: r.get("step", 0))
    return demos
