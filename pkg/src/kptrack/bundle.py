"""Trajectory bundles: the on-disk interchange format for tracking runs.

A bundle is a directory:

    manifest.json
    <camera>/depth_<t>.bin          one depth map per frame
    <camera>/dm_<ref>_<t>.bin       one distance map per (reference, frame)

with <t> zero-padded to 5 digits and <ref> to 2. The manifest carries
frame count, per-camera intrinsics and per-frame poses, the keypoint
references (home object, local point, captured descriptor), per-step
gripper deltas, and optional ground truth. Binary arrays are row-major
little-endian float32 behind a 16-byte header; invalid depth is NaN.

The same structure works for recorded real data (descriptor distance
maps dumped from a trained encoder) and for the synthetic renderer via
`render_bundle`.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import CameraModel, Pose
from .scene_sim import KeypointRef, render_frame

MAGIC = b"BSKA"
FORMAT_VERSION = 1
DTYPE_F32 = 1
_HEADER = struct.Struct("<4sHHII")


class BundleError(Exception):
    """Base for bundle format problems."""


class MissingFileError(BundleError):
    pass


class ShapeMismatchError(BundleError):
    pass


class BadMagicError(BundleError):
    pass


class VersionMismatchError(BundleError):
    pass


def _write_array(path, arr):
    arr = np.ascontiguousarray(arr, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError("bundle arrays are 2D maps")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, DTYPE_F32, h, w))
        f.write(arr.tobytes())


def _read_array(path, expect_shape):
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"bundle array missing: {path}")
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ShapeMismatchError(f"truncated header: {path}")
    magic, version, dtype, h, w = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r} in {path}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"format version {version} (supported: {FORMAT_VERSION}) in {path}")
    if dtype != DTYPE_F32:
        raise ShapeMismatchError(f"unknown dtype tag {dtype} in {path}")
    if (h, w) != expect_shape:
        raise ShapeMismatchError(
            f"declared {expect_shape}, header says {(h, w)}: {path}")
    payload = raw[_HEADER.size:]
    if len(payload) != h * w * 4:
        raise ShapeMismatchError(
            f"payload holds {len(payload)} bytes, need {h * w * 4}: {path}")
    return np.frombuffer(payload, dtype="<f4").reshape(h, w)


@dataclass
class CameraTrack:
    """One camera's intrinsics, per-frame poses, and its maps."""

    name: str
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    poses: list
    depth: np.ndarray
    dms: np.ndarray

    def camera_at(self, t):
        return CameraModel(fx=self.fx, fy=self.fy, cx=self.cx, cy=self.cy,
                           width=self.width, height=self.height,
                           pose=self.poses[t])


@dataclass
class TrajectoryBundle:
    cameras: list
    references: list
    gripper_deltas: np.ndarray
    gt_positions: np.ndarray = None
    gt_visible: np.ndarray = None
    extras: dict = None

    @property
    def n_frames(self):
        return len(self.gripper_deltas)

    @property
    def n_refs(self):
        return len(self.references)

    def __eq__(self, other):
        if not isinstance(other, TrajectoryBundle):
            return NotImplemented
        return _bundle_state(self) == _bundle_state(other)


def _bundle_state(b):
    cams = []
    for c in b.cameras:
        cams.append((c.name, c.fx, c.fy, c.cx, c.cy, c.width, c.height,
                     tuple(p.rotation.tobytes() + p.translation.tobytes()
                           for p in c.poses),
                     c.depth.tobytes(), c.dms.tobytes()))
    refs = tuple((r.object_id, r.local_point.tobytes(), r.descriptor.tobytes())
                 for r in b.references)
    gt = (None if b.gt_positions is None
          else (b.gt_positions.tobytes(), b.gt_visible.tobytes()))
    extras = json.dumps(b.extras, sort_keys=True, default=str)
    return (tuple(cams), refs, b.gripper_deltas.tobytes(), gt, extras)


def write_bundle(bundle, path):
    """Write a bundle directory; returns the path."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    t_total = bundle.n_frames
    manifest = {
        "format_version": FORMAT_VERSION,
        "frames": t_total,
        "cameras": [{
            "name": c.name,
            "fx": c.fx, "fy": c.fy, "cx": c.cx, "cy": c.cy,
            "width": c.width, "height": c.height,
            "poses": [list(p.rotation.reshape(-1)) + list(p.translation)
                      for p in c.poses],
        } for c in bundle.cameras],
        "references": [{
            "object_id": r.object_id,
            "local_point": list(r.local_point),
            "descriptor": list(r.descriptor),
        } for r in bundle.references],
        "gripper_deltas": [list(g) for g in bundle.gripper_deltas],
        "ground_truth": None if bundle.gt_positions is None else {
            "positions": bundle.gt_positions.tolist(),
            "visible": bundle.gt_visible.astype(int).tolist(),
        },
        "extras": bundle.extras if bundle.extras else None,
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for c in bundle.cameras:
        cam_dir = root / c.name
        cam_dir.mkdir(exist_ok=True)
        for t in range(t_total):
            _write_array(cam_dir / f"depth_{t:05d}.bin", c.depth[t])
            for k in range(bundle.n_refs):
                _write_array(cam_dir / f"dm_{k:02d}_{t:05d}.bin", c.dms[k, t])
    return root


def read_bundle(path):
    root = Path(path)
    mpath = root / "manifest.json"
    if not mpath.is_file():
        raise MissingFileError(f"no manifest at {mpath}")
    manifest = json.loads(mpath.read_text())
    t_total = manifest["frames"]
    refs = [KeypointRef(r["object_id"],
                        np.array(r["local_point"], dtype=np.float64),
                        np.array(r["descriptor"], dtype=np.float64))
            for r in manifest["references"]]
    n_refs = len(refs)
    cameras = []
    for cm in manifest["cameras"]:
        cam_dir = root / cm["name"]
        if not cam_dir.is_dir():
            raise MissingFileError(f"camera directory missing: {cam_dir}")
        shape = (cm["height"], cm["width"])
        poses = [Pose(np.array(flat[:9], dtype=np.float64).reshape(3, 3),
                      np.array(flat[9:], dtype=np.float64))
                 for flat in cm["poses"]]
        if len(poses) != t_total:
            raise ShapeMismatchError(
                f"camera {cm['name']} has {len(poses)} poses for "
                f"{t_total} frames")
        depth = np.empty((t_total,) + shape, dtype="<f4")
        dms = np.empty((n_refs, t_total) + shape, dtype="<f4")
        for t in range(t_total):
            depth[t] = _read_array(cam_dir / f"depth_{t:05d}.bin", shape)
            for k in range(n_refs):
                dms[k, t] = _read_array(
                    cam_dir / f"dm_{k:02d}_{t:05d}.bin", shape)
        cameras.append(CameraTrack(
            name=cm["name"], fx=cm["fx"], fy=cm["fy"], cx=cm["cx"],
            cy=cm["cy"], width=cm["width"], height=cm["height"],
            poses=poses, depth=depth, dms=dms))
    gt = manifest.get("ground_truth")
    gt_positions = gt_visible = None
    if gt is not None:
        try:
            gt_positions = np.array(gt["positions"], dtype=np.float64)
            gt_visible = np.array(gt["visible"], dtype=bool)
        except ValueError as e:
            raise ShapeMismatchError(f"ragged ground truth: {e}") from e
        if gt_positions.shape != (t_total, n_refs, 3):
            raise ShapeMismatchError(
                f"ground truth positions shaped {gt_positions.shape}, "
                f"expected {(t_total, n_refs, 3)}")
    return TrajectoryBundle(
        cameras=cameras, references=refs,
        gripper_deltas=np.array(manifest["gripper_deltas"],
                                dtype=np.float64),
        gt_positions=gt_positions, gt_visible=gt_visible,
        extras=manifest.get("extras"))


def render_bundle(scene, refs, seed=0, camera_name="cam00"):
    """Render a scripted scene into an in-memory bundle."""
    t_total = scene.n_frames
    cam0 = scene.cameras[0]
    if any((c.fx, c.fy, c.cx, c.cy, c.width, c.height)
           != (cam0.fx, cam0.fy, cam0.cx, cam0.cy, cam0.width, cam0.height)
           for c in scene.cameras):
        raise ValueError("bundle cameras must share intrinsics across frames")
    h = scene.cameras[0].height
    w = scene.cameras[0].width
    depth = np.empty((t_total, h, w), dtype="<f4")
    dms = np.empty((len(refs), t_total, h, w), dtype="<f4")
    gt_positions = np.empty((t_total, len(refs), 3))
    gt_visible = np.empty((t_total, len(refs)), dtype=bool)
    for t in range(t_total):
        fr = render_frame(scene, t, refs, seed=seed)
        depth[t] = fr.depth
        dms[:, t] = fr.dms
        gt_positions[t] = fr.gt_positions
        gt_visible[t] = fr.gt_visible
    track = CameraTrack(
        name=camera_name, fx=cam0.fx, fy=cam0.fy, cx=cam0.cx, cy=cam0.cy,
        width=w, height=h, poses=[c.pose for c in scene.cameras],
        depth=depth, dms=dms)
    deltas = np.stack([scene.gripper_delta(t) for t in range(t_total)])
    return TrajectoryBundle(
        cameras=[track], references=list(refs), gripper_deltas=deltas,
        gt_positions=gt_positions, gt_visible=gt_visible,
        extras=dict(scene.extras) if scene.extras else None)
