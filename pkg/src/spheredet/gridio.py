"""File formats: prediction-grid container, annotation and candidate CSVs.

Grid container layout::

    b"SCPMGRID1\\n"
    <one-line JSON header>\\n
    <raw little-endian float32 payload>

The header carries {"dims": [D, H, W], "stride": R, "level": int,
"dtype": "f32le"} plus an optional "scan_id"; the payload is five (D, H, W)
blocks in z-major order: probability map, radius map, then the three offset
channels (x, y, z).  Readers fall back to the file stem when the header has
no scan id.

All writers are atomic (temp file + rename) and byte-deterministic for
identical inputs.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .decode import Candidate, PredictionGrid
from .froc import FrocCurve
from .geometry import Sphere
from .matching import GridSpec, NoduleAnnotation

GRID_MAGIC = b"SCPMGRID1"

ANNOTATION_HEADER = "seriesuid,coordX,coordY,coordZ,diameter_mm"
CANDIDATE_HEADER = "seriesuid,coordX,coordY,coordZ,radius,probability"
FROC_HEADER = "fps_per_scan,sensitivity"


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Writes a file via a same-directory temp file and atomic rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_grid(path: Path, grid: PredictionGrid) -> None:
    """Serializes a PredictionGrid to the binary container."""
    header: Dict[str, object] = {
        "dims": list(grid.spec.dims),
        "stride": grid.spec.stride,
        "level": grid.level,
        "dtype": "f32le",
    }
    if grid.scan_id:
        header["scan_id"] = grid.scan_id
    blocks = [
        grid.center_prob,
        grid.radius,
        grid.offset[..., 0],
        grid.offset[..., 1],
        grid.offset[..., 2],
    ]
    payload = b"".join(np.ascontiguousarray(b, dtype="<f4").tobytes() for b in blocks)
    blob = (
        GRID_MAGIC
        + b"\n"
        + json.dumps(header, sort_keys=True, separators=(",", ":")).encode("ascii")
        + b"\n"
        + payload
    )
    atomic_write_bytes(Path(path), blob)


def read_grid(path: Path) -> PredictionGrid:
    """Parses the binary container back into a PredictionGrid.

    Raises:
        ValueError: on a bad magic prefix, malformed or incomplete header,
            unsupported dtype, or payload size mismatch.
    """
    path = Path(path)
    data = path.read_bytes()
    prefix = GRID_MAGIC + b"\n"
    if not data.startswith(prefix):
        raise ValueError(f"{path}: not a grid container (bad magic)")
    rest = data[len(prefix):]
    newline = rest.find(b"\n")
    if newline < 0:
        raise ValueError(f"{path}: missing header line")
    try:
        header = json.loads(rest[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: malformed header JSON ({exc})") from exc
    for key in ("dims", "stride", "level", "dtype"):
        if key not in header:
            raise ValueError(f"{path}: header missing {key!r}")
    if header["dtype"] != "f32le":
        raise ValueError(f"{path}: unsupported dtype {header['dtype']!r}")
    dims = header["dims"]
    if (
        not isinstance(dims, list)
        or len(dims) != 3
        or not all(isinstance(v, int) and v >= 1 for v in dims)
    ):
        raise ValueError(f"{path}: bad dims {dims!r}")
    spec = GridSpec(dims=tuple(dims), stride=header["stride"])
    d, h, w = spec.dims
    payload = rest[newline + 1:]
    expected = 5 * d * h * w * 4
    if len(payload) != expected:
        raise ValueError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    maps = np.frombuffer(payload, dtype="<f4").reshape(5, d, h, w).astype(np.float64)
    offset = np.stack([maps[2], maps[3], maps[4]], axis=-1)
    scan_id = header.get("scan_id") or path.stem
    return PredictionGrid(
        spec=spec,
        center_prob=maps[0],
        radius=maps[1],
        offset=offset,
        level=int(header["level"]),
        scan_id=str(scan_id),
    )


def _parse_float(token: str, path: Path, lineno: int, column: str) -> float:
    try:
        value = float(token)
    except ValueError as exc:
        raise ValueError(
            f"{path}:{lineno}: malformed {column} value {token!r}"
        ) from exc
    if not np.isfinite(value):
        raise ValueError(f"{path}:{lineno}: non-finite {column} value {token!r}")
    return value


def _read_csv_rows(path: Path, header: str) -> List[Tuple[int, List[str]]]:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != header:
        found = lines[0].strip() if lines else "<empty file>"
        raise ValueError(f"{path}:1: expected header {header!r}, found {found!r}")
    rows = []
    n_columns = len(header.split(","))
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != n_columns:
            raise ValueError(
                f"{path}:{lineno}: expected {n_columns} columns, found {len(fields)}"
            )
        rows.append((lineno, fields))
    return rows


def read_annotations(path: Path) -> Dict[str, List[NoduleAnnotation]]:
    """Reads an annotation CSV, converting diameters to radii.

    Returns scan id -> annotations in file order.  Annotation ids are
    "<seriesuid>:<per-scan ordinal>".
    """
    by_scan: Dict[str, List[NoduleAnnotation]] = {}
    for lineno, fields in _read_csv_rows(Path(path), ANNOTATION_HEADER):
        scan_id = fields[0]
        if not scan_id:
            raise ValueError(f"{path}:{lineno}: empty seriesuid")
        x = _parse_float(fields[1], path, lineno, "coordX")
        y = _parse_float(fields[2], path, lineno, "coordY")
        z = _parse_float(fields[3], path, lineno, "coordZ")
        diameter = _parse_float(fields[4], path, lineno, "diameter_mm")
        if diameter <= 0.0:
            raise ValueError(f"{path}:{lineno}: diameter must be > 0, got {diameter}")
        items = by_scan.setdefault(scan_id, [])
        items.append(
            NoduleAnnotation(
                id=f"{scan_id}:{len(items)}", center=(x, y, z), radius=diameter / 2.0
            )
        )
    return by_scan


def write_annotations(
    path: Path, rows: Sequence[Tuple[str, NoduleAnnotation]]
) -> None:
    """Writes (scan id, annotation) pairs as an annotation CSV (diameters)."""
    lines = [ANNOTATION_HEADER]
    for scan_id, annotation in rows:
        x, y, z = annotation.center
        lines.append(
            f"{scan_id},{x!r},{y!r},{z!r},{2.0 * annotation.radius!r}"
        )
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def read_candidates(path: Path) -> Dict[str, List[Candidate]]:
    """Reads a candidate CSV; returns scan id -> candidates in file order."""
    by_scan: Dict[str, List[Candidate]] = {}
    for lineno, fields in _read_csv_rows(Path(path), CANDIDATE_HEADER):
        scan_id = fields[0]
        if not scan_id:
            raise ValueError(f"{path}:{lineno}: empty seriesuid")
        x = _parse_float(fields[1], path, lineno, "coordX")
        y = _parse_float(fields[2], path, lineno, "coordY")
        z = _parse_float(fields[3], path, lineno, "coordZ")
        radius = _parse_float(fields[4], path, lineno, "radius")
        probability = _parse_float(fields[5], path, lineno, "probability")
        if radius <= 0.0:
            raise ValueError(f"{path}:{lineno}: radius must be > 0, got {radius}")
        if not 0.0 <= probability <= 1.0:
            raise ValueError(
                f"{path}:{lineno}: probability must lie in [0, 1], got {probability}"
            )
        by_scan.setdefault(scan_id, []).append(
            Candidate(sphere=Sphere((x, y, z), radius), score=probability)
        )
    return by_scan


def write_candidates(path: Path, rows: Sequence[Tuple[str, Candidate]]) -> None:
    lines = [CANDIDATE_HEADER]
    for scan_id, candidate in rows:
        x, y, z = candidate.sphere.center
        lines.append(
            f"{scan_id},{x!r},{y!r},{z!r},{candidate.sphere.radius!r},{candidate.score!r}"
        )
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def write_froc_csv(path: Path, curve: FrocCurve) -> None:
    lines = [FROC_HEADER]
    for fps, sensitivity in curve.points:
        lines.append(f"{fps!r},{sensitivity!r}")
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def froc_json_payload(curve: FrocCurve) -> Dict[str, object]:
    return {
        "points": [
            {"fps_per_scan": fps, "sensitivity": sensitivity}
            for fps, sensitivity in curve.points
        ],
        "average": curve.average,
    }
