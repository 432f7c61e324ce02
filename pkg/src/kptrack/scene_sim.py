"""Analytic stand-in for a dense-descriptor encoder and a recorded scene.

Objects are spheres, boxes, and flat disks with closed-form ray
intersections, each carrying an analytic descriptor field. Rendering a
frame produces exactly what the trackers consume downstream: a depth map
with Gaussian noise and dropouts, one descriptor-distance map per tracked
reference, and ground-truth keypoint positions with visibility flags.

Descriptor layout (12 channels, all cos/sin pairs so norms are constant):

* 0-1   foreground beacon; the background carries the opposite sign, which
        puts every object pixel at roughly unit normalized distance from
        background pixels.
* 2-3   object identity at a per-object angle, separating objects from
        each other.
* 4-9   surface-coordinate embeddings (three pairs). Boxes and spheres
        encode local x, y, z; disks encode radius twice at incommensurate
        frequencies plus a k-fold angular pair, so a disk with pure ring
        channels is exactly k-symmetric.
* 10-11 context pair: the world-frame bearing of the surface point around
        the object's axis, measured against the direction to a named
        context object and rendered as zero whenever that object is out
        of view. This mimics an encoder that resolves symmetry from image
        context and loses that power when the context is not visible.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .descriptor import distance_map
from .geometry import CameraModel, Pose
from .particle_filter import Measurement

DESCRIPTOR_DIM = 12
AMP_BEACON = 1.5
AMP_ID = 1.5
AMP_POS = 0.5
AMP_ANG = 0.5

RAY_EPS = 1e-9
# GT visibility: rendered depth at the keypoint's pixel must agree this well
VISIBILITY_DEPTH_TOL = 5e-3


def background_descriptor():
    b = np.zeros(DESCRIPTOR_DIM)
    b[0] = -AMP_BEACON
    return b


# ── Shapes ──────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Sphere:
    radius: float

    def intersect(self, origins, dirs):
        """Nearest positive ray parameter per ray, NaN on miss.

        Rays are origin + s * dir in the shape's local frame; dirs need not
        be normalized, so s stays in the caller's parameterization.
        """
        a = np.einsum("ij,ij->i", dirs, dirs)
        b = 2.0 * np.einsum("ij,ij->i", origins, dirs)
        c = np.einsum("ij,ij->i", origins, origins) - self.radius ** 2
        disc = b * b - 4.0 * a * c
        s = np.full(dirs.shape[0], np.nan)
        hit = disc >= 0.0
        if hit.any():
            root = np.sqrt(disc[hit])
            near = (-b[hit] - root) / (2.0 * a[hit])
            far = (-b[hit] + root) / (2.0 * a[hit])
            s[hit] = np.where(near > RAY_EPS, near,
                              np.where(far > RAY_EPS, far, np.nan))
        return s


@dataclass(frozen=True)
class Box:
    half_extents: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "half_extents",
                           np.asarray(self.half_extents, dtype=float))

    def intersect(self, origins, dirs):
        he = self.half_extents
        # tiny floor keeps axis-parallel rays on the correct slab side
        d = np.where(np.abs(dirs) < 1e-300, 1e-300, dirs)
        t1 = (-he - origins) / d
        t2 = (he - origins) / d
        tmin = np.minimum(t1, t2).max(axis=1)
        tmax = np.maximum(t1, t2).min(axis=1)
        s = np.where(tmin > RAY_EPS, tmin, tmax)
        return np.where((tmax >= tmin) & (s > RAY_EPS), s, np.nan)


@dataclass(frozen=True)
class Disk:
    """Flat disk in the local z=0 plane, centered on the origin."""

    radius: float

    def intersect(self, origins, dirs):
        dz = np.where(np.abs(dirs[:, 2]) < 1e-300, 1e-300, dirs[:, 2])
        s = -origins[:, 2] / dz
        p = origins[:, :2] + s[:, None] * dirs[:, :2]
        inside = (p * p).sum(axis=1) <= self.radius ** 2
        return np.where((s > RAY_EPS) & inside, s, np.nan)


# ── Descriptor fields ───────────────────────────────────────────────────


def _pair(angle, amplitude):
    return amplitude * np.cos(angle), amplitude * np.sin(angle)


@dataclass(frozen=True)
class SolidField:
    """Injective embedding of local x, y, z for boxes and spheres."""

    identity_angle: float
    freqs: tuple = (25.0, 40.0, 31.0)
    amp_pos: float = AMP_POS

    def channels(self, local_pts):
        n = local_pts.shape[0]
        out = np.zeros((n, DESCRIPTOR_DIM))
        out[:, 0] = AMP_BEACON
        out[:, 2], out[:, 3] = _pair(self.identity_angle, AMP_ID)
        for k in range(3):
            out[:, 4 + 2 * k], out[:, 5 + 2 * k] = _pair(
                self.freqs[k] * local_pts[:, k], self.amp_pos)
        return out


@dataclass(frozen=True)
class RingField:
    """Radius plus k-fold angle on a disk; symmetry=inf drops the angle
    entirely and leaves a perfectly rotation-invariant ring field."""

    identity_angle: float
    symmetry: float
    radial_freqs: tuple = (29.0, 47.0)
    amp_pos: float = AMP_POS
    amp_ang: float = AMP_ANG

    def __post_init__(self):
        if not (self.symmetry == math.inf
                or (self.symmetry == int(self.symmetry) and self.symmetry >= 1)):
            raise ValueError("symmetry must be a positive integer or inf")

    def channels(self, local_pts):
        n = local_pts.shape[0]
        r = np.hypot(local_pts[:, 0], local_pts[:, 1])
        out = np.zeros((n, DESCRIPTOR_DIM))
        out[:, 0] = AMP_BEACON
        out[:, 2], out[:, 3] = _pair(self.identity_angle, AMP_ID)
        out[:, 4], out[:, 5] = _pair(self.radial_freqs[0] * r, self.amp_pos)
        out[:, 6], out[:, 7] = _pair(self.radial_freqs[1] * r, self.amp_pos)
        if self.symmetry != math.inf:
            theta = np.arctan2(local_pts[:, 1], local_pts[:, 0])
            out[:, 8], out[:, 9] = _pair(self.symmetry * theta, self.amp_ang)
        return out


@dataclass(frozen=True)
class ContextGate:
    """Context-dependent channel pair attached to an object.

    While the named context object's center is in the camera frustum, the
    gated pair encodes each surface point's world-frame bearing around the
    object axis relative to the direction toward the context object. The
    bearing is a function of world position only, so rotating the object
    about its own axis does not change the rendered values; symmetry is
    broken by the scene arrangement, not by the object's surface."""

    context_id: str
    amplitude: float = 0.6


# ── Scene assembly ──────────────────────────────────────────────────────


@dataclass(frozen=True)
class SceneObject:
    id: str
    shape: object
    poses: list
    field: object
    gate: ContextGate | None = None
    symmetry: float | None = None

    def __post_init__(self):
        if self.symmetry is not None:
            if not isinstance(self.field, RingField) \
                    or self.field.symmetry != self.symmetry:
                raise ValueError(
                    "declared symmetry requires a matching ring field")
            if not isinstance(self.shape, (Disk, Sphere)):
                raise ValueError(
                    "declared symmetry requires an axisymmetric shape")


@dataclass(frozen=True)
class KeypointRef:
    """A tracked reference: its home object, local position, and the
    descriptor vector captured at reference time."""

    object_id: str
    local_point: np.ndarray
    descriptor: np.ndarray


@dataclass(frozen=True)
class SyntheticScene:
    objects: list
    cameras: list
    gripper: np.ndarray
    depth_noise_sigma: float = 0.0
    depth_dropout_prob: float = 0.0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        t = len(self.cameras)
        g = np.asarray(self.gripper, dtype=float)
        object.__setattr__(self, "gripper", g)
        if t < 1:
            raise ValueError("trajectory must have at least one frame")
        if g.shape != (t, 3):
            raise ValueError("gripper trajectory must be (T, 3)")
        for obj in self.objects:
            if len(obj.poses) != t:
                raise ValueError(
                    f"object {obj.id!r} trajectory length mismatch")
        if not 0.0 <= self.depth_dropout_prob <= 1.0:
            raise ValueError("depth_dropout_prob must be in [0, 1]")
        if self.depth_noise_sigma < 0.0:
            raise ValueError("depth_noise_sigma must be >= 0")

    @property
    def n_frames(self):
        return len(self.cameras)

    def object_by_id(self, object_id):
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def gripper_delta(self, t):
        """World-frame end-effector translation from frame t-1 to t."""
        if t == 0:
            return np.zeros(3)
        return self.gripper[t] - self.gripper[t - 1]


def _gate_pair(scene, obj, world_pts, t):
    """Context-bearing channel pair for hit points of a gated object.

    Returns (N, 2); zeros when the context is out of view or degenerate.
    """
    out = np.zeros((world_pts.shape[0], 2))
    if obj.gate is None:
        return out
    context = scene.object_by_id(obj.gate.context_id)
    camera = scene.cameras[t]
    center_ctx = context.poses[t].translation
    if not geometry.in_frustum(camera, center_ctx):
        return out

    pose = obj.poses[t]
    axis = pose.rotation[:, 2]
    ref = center_ctx - pose.translation
    ref_perp = ref - (ref @ axis) * axis
    norm_ref = np.linalg.norm(ref_perp)
    if norm_ref < 1e-12:
        return out
    ref_perp = ref_perp / norm_ref

    v = world_pts - pose.translation
    v_perp = v - np.outer(v @ axis, axis)
    cos_psi = v_perp @ ref_perp
    sin_psi = v_perp @ np.cross(axis, ref_perp)
    norm_v = np.hypot(cos_psi, sin_psi)
    ok = norm_v > 1e-12
    out[ok, 0] = obj.gate.amplitude * cos_psi[ok] / norm_v[ok]
    out[ok, 1] = obj.gate.amplitude * sin_psi[ok] / norm_v[ok]
    out[~ok, 0] = obj.gate.amplitude
    return out


def reference_descriptor(scene, object_id, local_point, t=0):
    """Descriptor a tracker would capture for a surface point at frame t."""
    obj = scene.object_by_id(object_id)
    local_point = np.asarray(local_point, dtype=float)
    desc = obj.field.channels(local_point[None, :])[0]
    world = obj.poses[t].transform(local_point)
    desc[10:12] = _gate_pair(scene, obj, world[None, :], t)[0]
    return desc


def make_reference(scene, object_id, local_point, t=0):
    return KeypointRef(object_id, np.asarray(local_point, dtype=float),
                       reference_descriptor(scene, object_id, local_point, t))


# ── Rendering ───────────────────────────────────────────────────────────


@dataclass(frozen=True)
class FrameRender:
    """Everything one frame yields: sensor views, per-reference distance
    maps, and the ground truth the metrics compare against."""

    camera: CameraModel
    depth: np.ndarray
    depth_clean: np.ndarray
    descriptors: np.ndarray
    object_index: np.ndarray
    dms: np.ndarray
    gt_positions: np.ndarray
    gt_visible: np.ndarray

    @property
    def all_depth_invalid(self):
        return not np.isfinite(self.depth).any()

    def measurement(self, k):
        """Measurement consumed by the filters for reference k."""
        return Measurement(self.camera, self.dms[k], self.depth)


def render_frame(scene, t, refs, seed=0):
    """Render frame t: exact ray intersections, then sensor corruption.

    Depth is the nearest surface along each pixel's center ray, with
    additive Gaussian noise and random dropout (NaN); pixels that hit
    nothing are invalid. Each reference gets the normalized descriptor
    distance between its stored vector and the rendered surface
    descriptor; occluded surfaces never contribute, the occluder's
    descriptors show instead. Pure function of (scene, t, refs, seed).
    """
    if not 0 <= t < scene.n_frames:
        raise ValueError(f"frame index {t} outside [0, {scene.n_frames})")
    camera = scene.cameras[t]
    h, w = camera.height, camera.width
    n = h * w

    cols, rows = np.meshgrid(np.arange(w), np.arange(h))
    d_cam = np.stack([(cols.ravel() + 0.5 - camera.cx) / camera.fx,
                      (rows.ravel() + 0.5 - camera.cy) / camera.fy,
                      np.ones(n)], axis=1)
    dirs = d_cam @ camera.pose.rotation.T
    origin = camera.pose.translation

    # rigid transforms keep the ray parameter equal to camera-frame depth
    depth_flat = np.full(n, np.inf)
    owner = np.full(n, -1, dtype=int)
    hits = []
    for k, obj in enumerate(scene.objects):
        pose = obj.poses[t]
        o_l = pose.inverse_transform(origin)
        d_l = dirs @ pose.rotation
        s = obj.shape.intersect(np.broadcast_to(o_l, (n, 3)), d_l)
        hits.append((s, d_l, o_l))
        closer = np.isfinite(s) & (s < depth_flat)
        depth_flat[closer] = s[closer]
        owner[closer] = k

    descriptors = np.tile(background_descriptor(), (n, 1))
    for k, obj in enumerate(scene.objects):
        sel = owner == k
        if not sel.any():
            continue
        s, d_l, o_l = hits[k]
        local = o_l + s[sel, None] * d_l[sel]
        descriptors[sel] = obj.field.channels(local)
        if obj.gate is not None:
            world = origin + s[sel, None] * dirs[sel]
            descriptors[sel, 10:12] = _gate_pair(scene, obj, world, t)

    depth_clean = np.where(owner >= 0, depth_flat, np.nan).reshape(h, w)

    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t,)))
    depth = depth_clean + rng.normal(0.0, scene.depth_noise_sigma, (h, w)) \
        if scene.depth_noise_sigma > 0 else depth_clean.copy()
    if scene.depth_dropout_prob > 0:
        depth[rng.random((h, w)) < scene.depth_dropout_prob] = np.nan

    desc_img = descriptors.reshape(h, w, DESCRIPTOR_DIM)
    dms = np.stack([distance_map(desc_img, ref.descriptor) for ref in refs]) \
        if refs else np.zeros((0, h, w))

    gt_positions = np.zeros((len(refs), 3))
    gt_visible = np.zeros(len(refs), dtype=bool)
    owner_grid = owner.reshape(h, w)
    index_of = {obj.id: k for k, obj in enumerate(scene.objects)}
    for i, ref in enumerate(refs):
        obj = scene.object_by_id(ref.object_id)
        kp = obj.poses[t].transform(ref.local_point)
        gt_positions[i] = kp
        uv, z = geometry.project_points(camera, kp)
        u, v = uv[0]
        if z[0] > 0 and 0 <= u < w and 0 <= v < h:
            r, c = int(v), int(u)
            gt_visible[i] = (
                owner_grid[r, c] == index_of[ref.object_id]
                and np.isfinite(depth_clean[r, c])
                and abs(depth_clean[r, c] - z[0]) <= VISIBILITY_DEPTH_TOL)

    return FrameRender(camera, depth, depth_clean, desc_img,
                       owner_grid, dms, gt_positions, gt_visible)
