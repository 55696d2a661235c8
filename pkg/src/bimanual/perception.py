"""Observation rendering, the keypoint heatmap codec, and raster/world mapping.

The raster is a G x G x 4 grid: channel 0 chains, channel 1 rigid bodies,
channel 2 arms, channel 3 task-progress decorations. Values live in [0, 1].
Row index follows y, column index follows x; cell (0, 0) sits at the
workspace minimum corner.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .world import WorldState

GRID = 96
CHANNELS = 4
CH_CHAIN, CH_BODY, CH_ARM, CH_META = 0, 1, 2, 3

SIGMA_CELLS = 1.2  # heatmap spread, scaled from the source annotation width


class NoPeakError(Exception):
    """Raised when decoding a heatmap that has no positive cell."""


class MappingError(Exception):
    """Raised for off-grid cells or out-of-bounds world points."""


@dataclass(frozen=True)
class RasterMapping:
    """Bijection between grid cell centers and a lattice of world points."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float
    grid: int = GRID

    @classmethod
    def from_bounds(cls, bounds, grid: int = GRID) -> "RasterMapping":
        b = np.asarray(bounds, dtype=np.float64)
        return cls(b[0, 0], b[0, 1], b[1, 0], b[1, 1], grid)

    @property
    def cell_w(self) -> float:
        return (self.xmax - self.xmin) / self.grid

    @property
    def cell_h(self) -> float:
        return (self.ymax - self.ymin) / self.grid

    def contains(self, point) -> bool:
        x, y = float(point[0]), float(point[1])
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def world_to_cell(self, point) -> tuple[int, int]:
        if not self.contains(point):
            raise MappingError(f"point {point} outside workspace")
        col = min(int((float(point[0]) - self.xmin) / self.cell_w), self.grid - 1)
        row = min(int((float(point[1]) - self.ymin) / self.cell_h), self.grid - 1)
        return row, col

    def cell_to_world(self, cell) -> np.ndarray:
        row, col = int(cell[0]), int(cell[1])
        if not (0 <= row < self.grid and 0 <= col < self.grid):
            raise MappingError(f"cell {cell} off the {self.grid}x{self.grid} grid")
        return np.array([self.xmin + (col + 0.5) * self.cell_w,
                         self.ymin + (row + 0.5) * self.cell_h])

    def cell_float(self, point) -> np.ndarray:
        """Fractional (row, col) coordinates without bounds checks."""
        return np.array([(float(point[1]) - self.ymin) / self.cell_h - 0.5,
                         (float(point[0]) - self.xmin) / self.cell_w - 0.5])


def raster_to_world(cell, mapping: RasterMapping) -> np.ndarray:
    return mapping.cell_to_world(cell)


def world_to_raster(point, mapping: RasterMapping) -> tuple[int, int]:
    return mapping.world_to_cell(point)


@dataclass
class Observation:
    raster: np.ndarray   # (G, G, C) float32 in [0, 1]
    proprio: np.ndarray  # (8,): per arm x, y, angle, gripper

    def copy(self) -> "Observation":
        return Observation(self.raster.copy(), self.proprio.copy())


# -- rendering ---------------------------------------------------------------


def _stamp(raster: np.ndarray, ch: int, rows, cols, radius_cells: float,
           value: float, grid: int) -> None:
    r_int = int(np.floor(radius_cells))
    offs = [(dr, dc)
            for dr in range(-r_int, r_int + 1)
            for dc in range(-r_int, r_int + 1)
            if dr * dr + dc * dc <= radius_cells * radius_cells]
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    for dr, dc in offs:
        rr = rows + dr
        cc = cols + dc
        keep = (rr >= 0) & (rr < grid) & (cc >= 0) & (cc < grid)
        if keep.any():
            np.maximum.at(raster[:, :, ch], (rr[keep], cc[keep]), value)


def _cells_of(points: np.ndarray, mapping: RasterMapping) -> tuple[np.ndarray, np.ndarray]:
    cols = np.floor((points[:, 0] - mapping.xmin) / mapping.cell_w).astype(np.int64)
    rows = np.floor((points[:, 1] - mapping.ymin) / mapping.cell_h).astype(np.int64)
    return rows, cols


def _chain_samples(chain, mapping: RasterMapping) -> tuple[np.ndarray, np.ndarray]:
    """Dense sample points along active links plus their rest arc lengths."""
    pts, arcs = [], []
    arc = chain.arc_lengths()
    step = 0.5 * min(mapping.cell_w, mapping.cell_h)
    for i in range(chain.n - 1):
        if not chain.link_active[i]:
            pts.append(chain.points[i][None])
            arcs.append([arc[i]])
            continue
        seg = chain.points[i + 1] - chain.points[i]
        n = max(2, int(np.ceil(np.linalg.norm(seg) / step)) + 1)
        t = np.linspace(0.0, 1.0, n)[:, None]
        pts.append(chain.points[i] + t * seg)
        arcs.append(arc[i] + t[:, 0] * (arc[i + 1] - arc[i]))
    pts.append(chain.points[-1][None])
    arcs.append([arc[-1]])
    return np.concatenate(pts), np.concatenate(arcs)


def _body_cells(body, mapping: RasterMapping) -> tuple[np.ndarray, np.ndarray]:
    """Cells whose centers fall inside the body footprint."""
    g = mapping.grid
    if body.shape == "disc":
        r = body.size[0]
        half = (r, r)
    else:
        half = (body.size[0] / 2 + mapping.cell_w, body.size[1] / 2 + mapping.cell_h)
    x0, y0 = body.pose[0] - half[0], body.pose[1] - half[1]
    x1, y1 = body.pose[0] + half[0], body.pose[1] + half[1]
    c0 = max(0, int(np.floor((x0 - mapping.xmin) / mapping.cell_w)))
    c1 = min(g - 1, int(np.floor((x1 - mapping.xmin) / mapping.cell_w)))
    r0 = max(0, int(np.floor((y0 - mapping.ymin) / mapping.cell_h)))
    r1 = min(g - 1, int(np.floor((y1 - mapping.ymin) / mapping.cell_h)))
    if c1 < c0 or r1 < r0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    cc, rr = np.meshgrid(np.arange(c0, c1 + 1), np.arange(r0, r1 + 1))
    cx = mapping.xmin + (cc + 0.5) * mapping.cell_w - body.pose[0]
    cy = mapping.ymin + (rr + 0.5) * mapping.cell_h - body.pose[1]
    if body.shape == "disc":
        inside = cx ** 2 + cy ** 2 <= body.size[0] ** 2 + 1e-12
    else:
        ang = -body.pose[2]
        ca, sa = np.cos(ang), np.sin(ang)
        lx = ca * cx - sa * cy
        ly = sa * cx + ca * cy
        inside = (np.abs(lx) <= body.size[0] / 2) & (np.abs(ly) <= body.size[1] / 2)
    return rr[inside].ravel(), cc[inside].ravel()


def render_observation(state: WorldState, mapping: RasterMapping) -> Observation:
    """Deterministically rasterize the world plus the proprioceptive vector."""
    g = mapping.grid
    raster = np.zeros((g, g, CHANNELS), dtype=np.float32)

    for chain in state.chains:
        pts, arcs = _chain_samples(chain, mapping)
        occl = chain.tags.get("occlude_arc_range")
        if occl is not None:
            keep = ~((arcs >= occl[0]) & (arcs <= occl[1]))
            pts, arcs = pts[keep], arcs[keep]
        if len(pts) == 0:
            continue
        rows, cols = _cells_of(pts, mapping)
        _stamp(raster, CH_CHAIN, rows, cols, 1.0, chain.intensity, g)
        meta_range = chain.tags.get("meta_arc_range")
        if meta_range is not None and chain.meta_intensity > 0:
            sel = (arcs >= meta_range[0]) & (arcs <= meta_range[1])
            if sel.any():
                _stamp(raster, CH_META, rows[sel], cols[sel], 1.0,
                       chain.meta_intensity, g)
        for arc_pos, value in chain.tags.get("meta_ticks", []):
            p = chain.point_at_arc(arc_pos)[None]
            trow, tcol = _cells_of(p, mapping)
            _stamp(raster, CH_META, trow, tcol, 1.6, value, g)

    for body in state.bodies:
        if not mapping.contains(body.pose[:2]):
            warnings.warn(f"body {body.body_id} outside workspace; clipped",
                          stacklevel=2)
        rows, cols = _body_cells(body, mapping)
        if rows.size == 0:
            continue
        np.maximum.at(raster[:, :, CH_BODY], (rows, cols), body.intensity)
        if body.meta_intensity > 0:
            np.maximum.at(raster[:, :, CH_META], (rows, cols), body.meta_intensity)

    for i, arm in enumerate(state.arms):
        p = np.asarray(arm.pos)[None]
        rows, cols = _cells_of(p, mapping)
        value = 0.6 if i == 0 else 1.0
        _stamp(raster, CH_ARM, rows, cols, 1.5, value, g)
        tip = p + 2.0 * mapping.cell_w * np.array([[np.cos(arm.angle), np.sin(arm.angle)]])
        trow, tcol = _cells_of(tip, mapping)
        _stamp(raster, CH_ARM, trow, tcol, 0.5, value, g)

    np.clip(raster, 0.0, 1.0, out=raster)
    proprio = np.array([
        state.arms[0].pos[0], state.arms[0].pos[1], state.arms[0].angle,
        1.0 if state.arms[0].closed else 0.0,
        state.arms[1].pos[0], state.arms[1].pos[1], state.arms[1].angle,
        1.0 if state.arms[1].closed else 0.0,
    ])
    return Observation(raster, proprio)


# -- heatmap codec -----------------------------------------------------------


def encode_heatmap(kp, sigma: float = SIGMA_CELLS, grid: int = GRID) -> np.ndarray:
    """Gaussian heatmap with peak value exactly 1.0 at the keypoint cell."""
    row, col = int(kp[0]), int(kp[1])
    if not (0 <= row < grid and 0 <= col < grid):
        raise MappingError(f"keypoint {kp} off the grid")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rr = np.arange(grid)[:, None] - row
    cc = np.arange(grid)[None, :] - col
    return np.exp(-(rr ** 2 + cc ** 2) / (2.0 * sigma ** 2))


def decode_heatmap(heat: np.ndarray) -> tuple[int, int]:
    """Argmax cell; ties resolve to the first cell in row-major order."""
    if heat.max() <= 0.0:
        raise NoPeakError("heatmap has no positive cell")
    flat = int(np.argmax(heat))
    return flat // heat.shape[1], flat % heat.shape[1]
