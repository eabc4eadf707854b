"""File formats, JSON conversion and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import BoundarySpec
from .errors import InputError


def to_jsonable(obj):
    """Plain JSON types; complex numbers become {re, im}, non-finite floats null."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def file_sha256(path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def load_domain(path) -> BoundarySpec:
    d = read_json(path)
    if not isinstance(d, dict):
        raise InputError("domain file must hold a JSON object")
    return BoundarySpec.from_dict(d)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass
class RunManifest:
    command: str
    argv: list
    domain_sha256: str | None = None
    seed: int | None = None
    tolerances: dict = field(default_factory=dict)
    version: str = __version__
    python: str = field(default_factory=platform.python_version)
    numpy: str = np.__version__
    elapsed_s: float = 0.0
    started: float = field(default_factory=time.time)

    def finish(self) -> "RunManifest":
        self.elapsed_s = time.time() - self.started
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("started")
        return d


def manifest_path(out) -> Path:
    p = Path(out)
    return p.with_name(p.name + ".manifest.json")
