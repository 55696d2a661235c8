"""Label-preserving raster augmentation.

Photometric ops perturb channel values only and never touch labels.
Geometric ops warp the raster with an affine map and push keypoint labels
through the identical map; binary labels are never changed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .perception import Observation


@dataclass(frozen=True)
class AugmentConfig:
    # photometric (value-channel analogs of the usual image-space table)
    contrast: tuple[float, float] = (0.95, 1.05)
    brightness: tuple[float, float] = (-10 / 255, 10 / 255)
    gamma: tuple[float, float] = (0.95, 1.05)
    blur_sigma: tuple[float, float] = (0.0, 0.6)
    channel_gain: tuple[float, float] = (0.95, 1.05)
    noise_std: float = 3.1875 / 255
    # geometric
    scale: tuple[float, float] = (1.0, 1.2)
    translate_frac: float = 0.08
    rotate_deg: float = 15.0
    shear_deg: float = 8.0
    fill: tuple[float, float] = (0.0, 20 / 255)
    fill_modes: tuple[str, ...] = ("constant", "edge")
    photometric: bool = True
    geometric: bool = True
    max_retries: int = 10


IDENTITY = AugmentConfig(
    contrast=(1, 1), brightness=(0, 0), gamma=(1, 1), blur_sigma=(0, 0),
    channel_gain=(1, 1), noise_std=0.0, scale=(1, 1), translate_frac=0.0,
    rotate_deg=0.0, shear_deg=0.0, fill=(0, 0))


def sample_affine(cfg: AugmentConfig, rng: np.random.Generator, grid: int):
    """Sample (matrix, translation) acting on (row, col) about the grid center."""
    s = rng.uniform(*cfg.scale)
    th = np.deg2rad(rng.uniform(-cfg.rotate_deg, cfg.rotate_deg))
    sh = np.deg2rad(rng.uniform(-cfg.shear_deg, cfg.shear_deg))
    t = rng.uniform(-cfg.translate_frac, cfg.translate_frac, size=2) * grid
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    shear = np.array([[1.0, np.tan(sh)], [0.0, 1.0]])
    mat = rot @ shear @ (s * np.eye(2))
    return mat, t


def apply_affine_to_cell(cell, mat: np.ndarray, t: np.ndarray, grid: int):
    ctr = (grid - 1) / 2.0
    p = np.asarray(cell, dtype=np.float64) - ctr
    q = mat @ p + ctr + t
    return q


def warp_raster(raster: np.ndarray, mat: np.ndarray, t: np.ndarray,
                fill: float, mode: str) -> np.ndarray:
    """Warp (G, G, C) raster so content moves by the forward map (mat, t)."""
    grid = raster.shape[0]
    ctr = np.array([(grid - 1) / 2.0] * 2)
    inv = np.linalg.inv(mat)
    offset = ctr - inv @ (ctr + t)
    ndi_mode = "nearest" if mode == "edge" else "constant"
    out = np.empty_like(raster)
    for ch in range(raster.shape[2]):
        out[:, :, ch] = ndimage.affine_transform(
            raster[:, :, ch], inv, offset=offset, order=1,
            mode=ndi_mode, cval=fill)
    return np.clip(out, 0.0, 1.0)


def _photometric(raster: np.ndarray, cfg: AugmentConfig,
                 rng: np.random.Generator) -> np.ndarray:
    out = raster.astype(np.float32) * rng.uniform(*cfg.contrast)
    out = out + rng.uniform(*cfg.brightness)
    out = np.clip(out, 0.0, 1.0) ** rng.uniform(*cfg.gamma)
    sig = rng.uniform(*cfg.blur_sigma)
    if sig > 1e-3:
        out = ndimage.gaussian_filter(out, sigma=(sig, sig, 0.0))
    gains = rng.uniform(*cfg.channel_gain, size=out.shape[2])
    out = out * gains[None, None, :]
    if cfg.noise_std > 0:
        out = out + rng.normal(0.0, cfg.noise_std, size=out.shape)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def augment(sample, cfg: AugmentConfig, rng: np.random.Generator):
    """Augment one (Observation, label) pair.

    The label is either a keypoint cell (row, col) or a binary int; cells
    follow the affine map, bits pass through untouched. Returns None when a
    keypoint keeps landing off-grid after ``max_retries`` transform draws.
    """
    obs, label = sample
    raster = obs.raster
    grid = raster.shape[0]
    is_cell = isinstance(label, (tuple, list, np.ndarray))

    new_raster = raster
    new_label = label
    if cfg.geometric:
        placed = False
        for _ in range(max(1, cfg.max_retries)):
            mat, t = sample_affine(cfg, rng, grid)
            if not is_cell:
                placed = True
                break
            q = apply_affine_to_cell(label, mat, t, grid)
            q_cell = (int(round(q[0])), int(round(q[1])))
            if 0 <= q_cell[0] < grid and 0 <= q_cell[1] < grid:
                new_label = q_cell
                placed = True
                break
        if not placed:
            return None
        fill = rng.uniform(*cfg.fill)
        mode = cfg.fill_modes[rng.integers(len(cfg.fill_modes))]
        new_raster = warp_raster(raster, mat, t, fill, mode).astype(np.float32)
    if cfg.photometric:
        new_raster = _photometric(new_raster, cfg, rng)
    return Observation(new_raster, obs.proprio.copy()), new_label
