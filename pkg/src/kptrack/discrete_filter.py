"""Bayes filtering over the camera's pixel grid.

The hypothesis space is the set of pixel cells of the current camera. The
belief is a probability grid over those cells. Each step reprojects the grid
into the new camera using last frame's depth, diffuses it with an isotropic
Gaussian random walk, and multiplies in the softmax activation of the
current distance map.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import gaussian_filter

from . import geometry
from .descriptor import activation_map, expectation_2d
from .geometry import CameraModel
from .kernels import splat_bilinear

SUM_TOL = 1e-9


@dataclass(frozen=True)
class DiscreteFilterConfig:
    """Knobs of the pixel-grid filter.

    sigma_r is the random-walk standard deviation in pixels, alpha the
    softmax temperature, epsilon_floor a small probability added to every
    cell after each measurement so no hypothesis is ever ruled out exactly.
    """

    sigma_r: float = 1.0
    alpha: float = 4.0
    epsilon_floor: float = 1e-12

    def __post_init__(self):
        if self.sigma_r < 0:
            raise ValueError("sigma_r must be >= 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.epsilon_floor < 0:
            raise ValueError("epsilon_floor must be >= 0")


@dataclass(frozen=True)
class PixelBelief:
    """Probability grid over pixel cells, tied to the camera it lives in."""

    grid: np.ndarray
    camera: CameraModel

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        object.__setattr__(self, "grid", g)
        if g.ndim != 2:
            raise ValueError("belief grid must be 2-dimensional")
        if (g.shape[0], g.shape[1]) != (self.camera.height, self.camera.width):
            raise ValueError("belief grid does not match camera dimensions")
        if (g < 0).any():
            raise ValueError("belief grid must be nonnegative")
        if abs(g.sum() - 1.0) > SUM_TOL:
            raise ValueError("belief grid must sum to 1")


@dataclass(frozen=True)
class KeypointEstimate:
    """Point estimate read off a belief.

    uv_norm is the 2D expectation in [0,1]^2, uv the same in pixels.
    depth and world are None when no valid depth fell under the belief's
    support; has_depth tells the two cases apart without None checks.
    """

    uv_norm: np.ndarray
    uv: np.ndarray
    depth: float | None
    world: np.ndarray | None
    has_depth: bool


def init_uniform(h, w, camera):
    """Uniform belief over an h-by-w pixel grid."""
    if h < 1 or w < 1:
        raise ValueError("grid dimensions must be >= 1")
    return PixelBelief(np.full((h, w), 1.0 / (h * w)), camera)


def predict(belief, new_camera, depth_prev, cfg):
    """Motion step: carry the belief into new_camera's pixel grid.

    Each cell's mass travels along that cell's measured depth from the
    previous frame and is splatted bilinearly into the new grid. Cells
    without a valid depth reading keep their mass in place. Mass landing
    outside the image is spread uniformly so the filter can re-acquire a
    target that left the view. The result is blurred with an isotropic
    Gaussian of std cfg.sigma_r pixels and renormalized.
    """
    h, w = belief.grid.shape
    depth_prev = np.asarray(depth_prev, dtype=float)
    if depth_prev.shape != (h, w):
        raise ValueError("depth map does not match belief dimensions")
    if new_camera.height != h or new_camera.width != w:
        raise ValueError("new camera does not match belief dimensions")

    cols, rows = np.meshgrid(np.arange(w), np.arange(h))
    uv = np.stack([cols.ravel() + 0.5, rows.ravel() + 0.5], axis=1)
    d = depth_prev.ravel()
    mass = belief.grid.ravel()
    valid = np.isfinite(d) & (d > 0)

    out = np.zeros((h, w))
    off = 0.0
    if valid.any():
        uv_new, d_new = geometry.reproject_pixels(
            belief.camera, new_camera, uv[valid], d[valid])
        moved = mass[valid].copy()
        # points behind the new camera produce mirrored pixel coordinates;
        # their mass must not land in-grid
        behind = d_new <= 0
        off += moved[behind].sum()
        moved[behind] = 0.0
        grid, spill = splat_bilinear(moved, uv_new[:, 0] - 0.5,
                                     uv_new[:, 1] - 0.5, h, w)
        out += grid
        off += spill
    if (~valid).any():
        held = np.zeros(h * w)
        held[~valid] = mass[~valid]
        out += held.reshape(h, w)

    out += off / (h * w)
    if cfg.sigma_r > 0:
        out = gaussian_filter(out, sigma=cfg.sigma_r, mode="constant",
                              truncate=4.0)
    return PixelBelief(_normalized(out), new_camera)


def update(belief, dm, cfg):
    """Measurement step: multiply in the softmax of the distance map."""
    dm = np.asarray(dm, dtype=float)
    if dm.shape != belief.grid.shape:
        raise ValueError("distance map does not match belief dimensions")
    act = activation_map(dm, cfg.alpha)
    return replace(belief, grid=_normalized(belief.grid * act
                                            + cfg.epsilon_floor))


def estimate(belief, depth, camera):
    """Read a point estimate off the belief.

    2D comes from the probability-weighted mean over cells; the depth is
    the belief-weighted mean of valid depth readings, and the 3D point is
    the 2D expectation backprojected at that depth.
    """
    depth = np.asarray(depth, dtype=float)
    if depth.shape != belief.grid.shape:
        raise ValueError("depth map does not match belief dimensions")
    h, w = belief.grid.shape
    uv_norm = expectation_2d(belief.grid)
    uv = uv_norm * np.array([w, h], dtype=float)

    valid = np.isfinite(depth) & (depth > 0)
    mass = belief.grid[valid].sum()
    if mass <= 0:
        return KeypointEstimate(uv_norm, uv, None, None, False)
    z = float((belief.grid[valid] * depth[valid]).sum() / mass)
    world = geometry.backproject_pixels(camera, uv[None, :],
                                        np.array([z]))[0]
    return KeypointEstimate(uv_norm, uv, z, world, True)


def _normalized(grid):
    s = grid.sum()
    if s <= 0:
        return np.full_like(grid, 1.0 / grid.size)
    return grid / s
