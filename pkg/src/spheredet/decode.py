"""Decoding prediction grids into candidates and sphere-overlap NMS.

A cell decodes to a candidate sphere with world center ((i + 0.5 + v) * R)
per axis and world radius (radius map value * R).  Cells whose decoded
radius is nonpositive are dropped (counted, never clamped).  Candidate
ordering everywhere is descending score, with ties broken by ascending
linear index of the producing cell and then by level tag, which makes the
pipeline output independent of input permutation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, List, Optional, Sequence, Tuple

import math

import numpy as np

from .geometry import Sphere, distance_radius_ratio, siou
from .matching import GridSpec


@dataclass
class PredictionGrid:
    """Raw per-cell predictions on one grid.

    Attributes:
        spec: grid geometry.
        center_prob: (D, H, W) probabilities in [0, 1].
        radius: (D, H, W) radii in grid units.
        offset: (D, H, W, 3) center offsets in grid units, channels (x, y, z).
        level: integer tag of the producing output level.
        scan_id: owning scan, "" when unknown.
    """

    spec: GridSpec
    center_prob: np.ndarray
    radius: np.ndarray
    offset: np.ndarray
    level: int = 0
    scan_id: str = ""

    def __post_init__(self) -> None:
        d, h, w = self.spec.dims
        if self.center_prob.shape != (d, h, w):
            raise ValueError(
                f"center_prob shape {self.center_prob.shape} != grid dims {(d, h, w)}"
            )
        if self.radius.shape != (d, h, w):
            raise ValueError(f"radius shape {self.radius.shape} != grid dims {(d, h, w)}")
        if self.offset.shape != (d, h, w, 3):
            raise ValueError(
                f"offset shape {self.offset.shape} != {(d, h, w, 3)}"
            )
        for name, arr in (("center_prob", self.center_prob),
                          ("radius", self.radius),
                          ("offset", self.offset)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        if np.any(self.center_prob < 0.0) or np.any(self.center_prob > 1.0):
            raise ValueError("center_prob values must lie in [0, 1]")


@dataclass(frozen=True)
class Candidate:
    """One decoded detection: sphere, score, producing level and cell."""

    sphere: Sphere
    score: float
    level: int = 0
    cell_index: int = -1

    def __post_init__(self) -> None:
        if not math.isfinite(self.score) or not 0.0 <= self.score <= 1.0:
            raise ValueError(f"candidate score must lie in [0, 1], got {self.score!r}")


@dataclass(frozen=True)
class NmsParams:
    """Suppression thresholds: overlap above tau_siou or normalized center
    distance below tau_dr kills the lower-scoring candidate."""

    tau_siou: float = 0.05
    tau_dr: float = 0.5


@dataclass
class DecodeStats:
    """Counters reported by the decoding stage."""

    dropped_nonpositive_radius: int = 0


def _sort_key(candidate: Candidate):
    return (-candidate.score, candidate.cell_index, candidate.level)


def decode_cell(grid: PredictionGrid, cell: Tuple[int, int, int]) -> Candidate:
    """Decodes one (ix, iy, iz) cell into a candidate.

    Raises:
        IndexError: if the cell lies outside the grid.
        ValueError: if the decoded radius is nonpositive (callers that scan
            many cells catch this and count the drop).
    """
    ix, iy, iz = cell
    d, h, w = grid.spec.dims
    if not (0 <= ix < w and 0 <= iy < h and 0 <= iz < d):
        raise IndexError(f"cell {cell} outside grid dims (W={w}, H={h}, D={d})")
    stride = grid.spec.stride
    decoded_radius = float(grid.radius[iz, iy, ix]) * stride
    if decoded_radius <= 0.0:
        raise ValueError(f"nonpositive decoded radius at cell {cell}")
    v = grid.offset[iz, iy, ix]
    center = (
        (ix + 0.5 + float(v[0])) * stride,
        (iy + 0.5 + float(v[1])) * stride,
        (iz + 0.5 + float(v[2])) * stride,
    )
    return Candidate(
        sphere=Sphere(center, decoded_radius),
        score=float(grid.center_prob[iz, iy, ix]),
        level=grid.level,
        cell_index=grid.spec.linear_index((ix, iy, iz)),
    )


def top_n_candidates(
    grid: PredictionGrid, n: int, stats: Optional[DecodeStats] = None
) -> List[Candidate]:
    """Decodes the n highest-probability cells, dropping nonpositive radii.

    Returns candidates sorted by descending score (ties by ascending linear
    cell index).  Dropped cells are tallied in ``stats`` when provided.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    flat = grid.center_prob.ravel()
    order = np.argsort(-flat, kind="stable")[: min(n, flat.size)]
    d, h, w = grid.spec.dims
    out: List[Candidate] = []
    for lin in order:
        lin = int(lin)
        iz, rem = divmod(lin, h * w)
        iy, ix = divmod(rem, w)
        try:
            out.append(decode_cell(grid, (ix, iy, iz)))
        except ValueError:
            if stats is not None:
                stats.dropped_nonpositive_radius += 1
    return out


def merge_levels(a: Sequence[Candidate], b: Sequence[Candidate]) -> List[Candidate]:
    """Concatenates two candidate lists, re-sorted by descending score."""
    return sorted(list(a) + list(b), key=_sort_key)


def nms_siou(candidates: Sequence[Candidate], params: NmsParams) -> List[Candidate]:
    """Greedy sphere-overlap NMS.

    Repeatedly accepts the highest-scoring remaining candidate and removes
    every candidate that overlaps it (siou > tau_siou) or sits too close to
    it (distance_radius_ratio < tau_dr).  The kept list is an antichain
    under those two tests and the operation is idempotent.
    """
    pending = sorted(candidates, key=_sort_key)
    suppressed = [False] * len(pending)
    kept: List[Candidate] = []
    for i, candidate in enumerate(pending):
        if suppressed[i]:
            continue
        kept.append(candidate)
        for j in range(i + 1, len(pending)):
            if suppressed[j]:
                continue
            other = pending[j]
            if (
                siou(candidate.sphere, other.sphere) > params.tau_siou
                or distance_radius_ratio(candidate.sphere, other.sphere) < params.tau_dr
            ):
                suppressed[j] = True
    return kept


def detect_candidates(
    grids: Sequence[PredictionGrid],
    top_n: int,
    params: NmsParams,
    stats: Optional[DecodeStats] = None,
) -> List[Candidate]:
    """Full per-scan pipeline: per-grid top-n, merge across levels, NMS."""
    per_level = [top_n_candidates(g, top_n, stats) for g in grids]
    if not per_level:
        return []
    merged = reduce(merge_levels, per_level)
    return nms_siou(merged, params)
