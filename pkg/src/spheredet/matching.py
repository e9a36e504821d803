"""Center-points label assignment on a downsampled prediction grid.

A grid cell with integer index (ix, iy, iz) covers the world-voxel cube
[i*R, (i+1)*R) per axis and has its center at ((i + 0.5) * R).  Grid arrays
are stored (D, H, W) = (z, y, x), so the linear cell index (C-order ravel)
runs z-major, then y, then x — that order breaks every tie in this package.

Assignment rules, applied per annotation in list order:

* the K nearest cells (center-to-centroid distance, ties by ascending
  linear index) become Positive and are matched to that annotation;
  cells already Positive for an earlier annotation are skipped, so later
  annotations claim their next-nearest unclaimed cells;
* cells within world distance (radius + 2R) of the centroid that are not
  Positive become Ignored (a later annotation may promote an Ignored cell
  to Positive; nothing ever demotes a Positive);
* everything else stays Negative.

Online hard-example mining then keeps the N hardest negatives (N = n * M
positives, or 100 when there are no positives) and demotes the rest to
Ignored.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Tuple

import numpy as np

from .geometry import Point3


@dataclass(frozen=True)
class GridSpec:
    """Prediction grid geometry.

    Attributes:
        dims: cell counts (D, H, W) along (z, y, x).
        stride: world voxels per cell (R).
    """

    dims: Tuple[int, int, int]
    stride: int

    def __post_init__(self) -> None:
        if len(self.dims) != 3 or any(int(d) != d or d < 1 for d in self.dims):
            raise ValueError(f"grid dims must be 3 positive integers, got {self.dims!r}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ValueError(f"grid stride must be a positive integer, got {self.stride!r}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "stride", int(self.stride))

    @property
    def n_cells(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    def linear_index(self, cell: Tuple[int, int, int]) -> int:
        """Linear index (z-major, then y, then x) of an (ix, iy, iz) cell."""
        ix, iy, iz = cell
        return (iz * self.dims[1] + iy) * self.dims[2] + ix


@dataclass(frozen=True)
class NoduleAnnotation:
    """One annotated nodule: world-voxel centroid and radius."""

    id: str
    center: Point3
    radius: float

    def __post_init__(self) -> None:
        if len(self.center) != 3 or not all(math.isfinite(c) for c in self.center):
            raise ValueError(f"annotation center must be 3 finite components, got {self.center!r}")
        if not math.isfinite(self.radius) or self.radius <= 0.0:
            raise ValueError(f"annotation radius must be finite and > 0, got {self.radius!r}")


class Label(enum.IntEnum):
    NEGATIVE = 0
    POSITIVE = 1
    IGNORED = 2


@dataclass
class LabelAssignment:
    """Per-cell labels plus regression targets for one grid.

    ``matched_nodule`` holds the annotation list index at Positive cells and
    -1 elsewhere.  ``radius_target`` (grid units) and ``offset_target``
    (grid units, channels x/y/z) are zero until ``regression_targets``
    fills them.
    """

    grid: GridSpec
    labels: np.ndarray
    matched_nodule: np.ndarray
    radius_target: np.ndarray
    offset_target: np.ndarray

    def __post_init__(self) -> None:
        d, h, w = self.grid.dims
        if self.labels.shape != (d, h, w):
            raise ValueError(f"labels shape {self.labels.shape} != grid dims {(d, h, w)}")
        if self.matched_nodule.shape != (d, h, w):
            raise ValueError("matched_nodule shape mismatch")
        if self.radius_target.shape != (d, h, w):
            raise ValueError("radius_target shape mismatch")
        if self.offset_target.shape != (d, h, w, 3):
            raise ValueError("offset_target shape mismatch")

    @property
    def positive_count(self) -> int:
        return int(np.count_nonzero(self.labels == Label.POSITIVE))


def distance_map(grid: GridSpec, centroid: Point3) -> np.ndarray:
    """Per-cell Euclidean distance from the cell center to a world point.

    The squared components are accumulated in (x, y, z) order before the
    square root, matching the scalar evaluation ``(dx*dx + dy*dy) + dz*dz``
    bit for bit so that independent implementations agree on ties.
    """
    d, h, w = grid.dims
    r = float(grid.stride)
    dx = (np.arange(w, dtype=np.float64) + 0.5) * r - centroid[0]
    dy = (np.arange(h, dtype=np.float64) + 0.5) * r - centroid[1]
    dz = (np.arange(d, dtype=np.float64) + 0.5) * r - centroid[2]
    sq = (dx * dx)[None, None, :] + (dy * dy)[None, :, None]
    sq = sq + (dz * dz)[:, None, None]
    return np.sqrt(sq)


def _empty_assignment(grid: GridSpec) -> LabelAssignment:
    d, h, w = grid.dims
    return LabelAssignment(
        grid=grid,
        labels=np.full((d, h, w), Label.NEGATIVE, dtype=np.int8),
        matched_nodule=np.full((d, h, w), -1, dtype=np.int32),
        radius_target=np.zeros((d, h, w), dtype=np.float64),
        offset_target=np.zeros((d, h, w, 3), dtype=np.float64),
    )


def assign_labels(
    grid: GridSpec, nodules: Sequence[NoduleAnnotation], k: int
) -> LabelAssignment:
    """Assigns Positive/Negative/Ignored labels for a list of annotations.

    Annotations are processed in list order; see the module docstring for
    the claiming and ignore-ring rules.

    Raises:
        ValueError: if k < 1 or k exceeds the cell count, if an annotation
            centroid lies outside the grid's world extent, or if fewer than
            k unclaimed cells remain for some annotation.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > grid.n_cells:
        raise ValueError(f"k = {k} exceeds the cell count {grid.n_cells}")
    extent = tuple(grid.dims[2 - i] * grid.stride for i in range(3))  # (x, y, z)
    assignment = _empty_assignment(grid)
    labels_flat = assignment.labels.ravel()
    matched_flat = assignment.matched_nodule.ravel()
    two_r = 2.0 * grid.stride
    for index, nodule in enumerate(nodules):
        for axis in range(3):
            if not 0.0 <= nodule.center[axis] <= extent[axis]:
                raise ValueError(
                    f"annotation {nodule.id!r} center {nodule.center} lies outside "
                    f"the volume extent {extent}"
                )
        dmap = distance_map(grid, nodule.center)
        order = np.argsort(dmap.ravel(), kind="stable")
        claimed = 0
        for lin in order:
            if claimed == k:
                break
            if labels_flat[lin] != Label.POSITIVE:
                labels_flat[lin] = Label.POSITIVE
                matched_flat[lin] = index
                claimed += 1
        if claimed < k:
            raise ValueError(
                f"fewer than k = {k} unclaimed cells remain for annotation "
                f"{nodule.id!r}"
            )
        ring = (dmap <= nodule.radius + two_r) & (
            assignment.labels == Label.NEGATIVE
        )
        assignment.labels[ring] = Label.IGNORED
    return assignment


def regression_targets(
    grid: GridSpec,
    assignment: LabelAssignment,
    nodules: Sequence[NoduleAnnotation],
) -> LabelAssignment:
    """Fills radius/offset targets at Positive cells (grid units).

    The offset target is the matched centroid in grid coordinates minus the
    cell center (x + 0.5); the radius target is radius / stride.  Decoding a
    cell with these targets reproduces the annotation exactly.
    """
    r = float(grid.stride)
    radius_target = np.zeros_like(assignment.radius_target)
    offset_target = np.zeros_like(assignment.offset_target)
    for iz, iy, ix in np.argwhere(assignment.labels == Label.POSITIVE):
        index = int(assignment.matched_nodule[iz, iy, ix])
        if index < 0 or index >= len(nodules):
            raise ValueError(
                f"positive cell ({ix}, {iy}, {iz}) has no matched nodule"
            )
        nodule = nodules[index]
        radius_target[iz, iy, ix] = nodule.radius / r
        offset_target[iz, iy, ix, 0] = nodule.center[0] / r - (ix + 0.5)
        offset_target[iz, iy, ix, 1] = nodule.center[1] / r - (iy + 0.5)
        offset_target[iz, iy, ix, 2] = nodule.center[2] / r - (iz + 0.5)
    return replace(
        assignment, radius_target=radius_target, offset_target=offset_target
    )


def ohem_refine(
    assignment: LabelAssignment, per_cell_cls_loss: np.ndarray, n: int
) -> LabelAssignment:
    """Keeps the hardest negatives, demoting the rest to Ignored.

    N = n * (positive count), or 100 when there are no positives.  Hardness
    is the per-cell classification loss, descending; ties fall back to
    ascending linear cell index.

    Raises:
        ValueError: if n < 1, the loss map shape mismatches, or the loss is
            not finite on some Negative cell.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    loss = np.asarray(per_cell_cls_loss, dtype=np.float64)
    if loss.shape != assignment.labels.shape:
        raise ValueError(
            f"loss map shape {loss.shape} != label grid shape {assignment.labels.shape}"
        )
    negative_lin = np.flatnonzero(assignment.labels.ravel() == Label.NEGATIVE)
    values = loss.ravel()[negative_lin]
    if not np.all(np.isfinite(values)):
        raise ValueError("per-cell loss must be finite on all Negative cells")
    positives = assignment.positive_count
    budget = n * positives if positives > 0 else 100
    keep = min(budget, negative_lin.size)
    order = np.argsort(-values, kind="stable")
    demote = negative_lin[order[keep:]]
    labels = assignment.labels.copy()
    labels.ravel()[demote] = Label.IGNORED
    return replace(assignment, labels=labels)
