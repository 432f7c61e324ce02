"""Pinhole camera model and rigid transforms.

Conventions used throughout the package:

* World and camera frames are right-handed; the camera looks along its +z
  axis, so camera-frame z is the depth returned by projection.
* A Pose stores the camera-to-world transform: world = R @ cam + t.
* Pixel coordinates are continuous, u along image columns and v along rows.
  Pixel (i, j) covers the half-open square [i, i+1) x [j, j+1), so the center
  of grid cell (column i, row j) is at (i + 0.5, j + 0.5). Arrays are indexed
  [row, column], i.e. [v, u] after flooring.
* The view frustum is half-open: a point is inside iff its depth is strictly
  positive and 0 <= u < width and 0 <= v < height.

No lens distortion is modeled.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

# Orthonormality tolerance for rotation matrices.
ROTATION_TOL = 1e-9


class PixelCoord(NamedTuple):
    """Continuous pixel position (u = column axis, v = row axis)."""

    u: float
    v: float

    def normalized(self, width, height):
        """Return the (u/width, v/height) form in [0, 1]^2 for in-view points."""
        return (self.u / width, self.v / height)


@dataclass(frozen=True)
class Pose:
    """Rigid transform, stored as rotation matrix plus translation vector.

    Composition follows matrix semantics: a.compose(b) applies b first and
    a second, so inverses satisfy (a.compose(b)).inverse() ==
    b.inverse().compose(a.inverse()).
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not np.isfinite(r).all() or not np.isfinite(t).all():
            raise ValueError("pose entries must be finite")
        if np.abs(r @ r.T - np.eye(3)).max() > ROTATION_TOL:
            raise ValueError("rotation is not orthonormal")
        if np.linalg.det(r) < 0.0:
            raise ValueError("rotation must be proper (determinant +1)")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity():
        return Pose(np.eye(3), np.zeros(3))

    def compose(self, other):
        """Pose equivalent to applying `other` first, then `self`."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self):
        return Pose(self.rotation.T, -self.rotation.T @ self.translation)

    def transform(self, points):
        """Map points (3,) or (N, 3) from the local frame to the parent frame."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def inverse_transform(self, points):
        """Map points from the parent frame back into the local frame."""
        pts = np.asarray(points, dtype=np.float64)
        return (pts - self.translation) @ self.rotation

    def matrix(self):
        """4x4 homogeneous form."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m


@dataclass(frozen=True)
class CameraModel:
    """Intrinsics plus camera-to-world pose."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    pose: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def with_pose(self, pose):
        return CameraModel(self.fx, self.fy, self.cx, self.cy,
                           self.width, self.height, pose)


# ---------------------------------------------------------------------------
# Projection operations. Scalar forms wrap the vectorized ones.
# ---------------------------------------------------------------------------

def project_points(camera, points):
    """Project world points (N, 3) to pixels.

    Returns (uv, depth): uv is (N, 2) continuous pixel coordinates, depth is
    (N,) camera-frame z. Depth may be <= 0 for points beside or behind the
    camera; their pixel coordinates are returned as computed (possibly
    non-finite) and are only meaningful after an in_frustum test.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    cam_pts = camera.pose.inverse_transform(pts)
    z = cam_pts[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = camera.fx * cam_pts[:, 0] / z + camera.cx
        v = camera.fy * cam_pts[:, 1] / z + camera.cy
    return np.stack([u, v], axis=1), z


def project(camera, point):
    """Project one world point; returns (PixelCoord, depth)."""
    uv, z = project_points(camera, np.asarray(point, dtype=np.float64))
    return PixelCoord(float(uv[0, 0]), float(uv[0, 1])), float(z[0])


def backproject_pixels(camera, uv, depth):
    """Lift pixels (N, 2) at camera-frame depths (N,) to world points (N, 3).

    Every depth must be strictly positive.
    """
    uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
    d = np.atleast_1d(np.asarray(depth, dtype=np.float64))
    if d.size and not (d > 0).all():
        raise ValueError("backprojection requires strictly positive depth")
    x = (uv[:, 0] - camera.cx) / camera.fx * d
    y = (uv[:, 1] - camera.cy) / camera.fy * d
    cam_pts = np.stack([x, y, d], axis=1)
    return camera.pose.transform(cam_pts)


def backproject(camera, pixel, depth):
    """Lift one pixel at a camera-frame depth to a world point (3,)."""
    return backproject_pixels(camera, np.asarray(pixel, dtype=np.float64),
                              float(depth))[0]


def in_frustum_points(camera, points):
    """Vectorized frustum test; see module docstring for the boundary rule."""
    uv, z = project_points(camera, points)
    with np.errstate(invalid="ignore"):
        return ((z > 0.0)
                & (uv[:, 0] >= 0.0) & (uv[:, 0] < camera.width)
                & (uv[:, 1] >= 0.0) & (uv[:, 1] < camera.height))


def in_frustum(camera, point):
    return bool(in_frustum_points(camera, np.asarray(point, dtype=np.float64))[0])


def reproject_pixels(src, dst, uv, depth):
    """Carry pixels seen by `src` at known depths into `dst`'s pixel space.

    Equivalent to projecting backproject(src, uv, depth) with dst. Returns
    (uv_dst, depth_dst); depth_dst may be <= 0 if the point falls behind dst.
    """
    world = backproject_pixels(src, uv, depth)
    return project_points(dst, world)


def reproject_pixel(src, dst, pixel, depth):
    """Scalar reprojection; returns the destination PixelCoord."""
    uv, _ = reproject_pixels(src, dst, np.asarray(pixel, dtype=np.float64),
                             float(depth))
    return PixelCoord(float(uv[0, 0]), float(uv[0, 1]))
