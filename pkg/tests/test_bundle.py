"""Bundle format: bit-exact round trips and distinct failure kinds."""

import json
import struct

import numpy as np
import pytest

from kptrack import bundle as bio
from kptrack import scene_sim
from kptrack.geometry import CameraModel, Pose
from kptrack.scene_sim import (Box, SceneObject, SolidField, Sphere,
                               SyntheticScene, make_reference)

TOPDOWN = np.diag([1.0, -1.0, -1.0])


def _tiny_scene(t_total=3, noise=0.002, dropout=0.05):
    pose = Pose(TOPDOWN, np.array([0.0, 0.0, 0.6]))
    cam = CameraModel(fx=50.0, fy=50.0, cx=16.0, cy=12.0, width=32, height=24,
                      pose=pose)
    table = SceneObject(
        "table", Box(np.array([0.4, 0.4, 0.01])),
        [Pose(np.eye(3), np.array([0.0, 0.0, -0.01]))] * t_total,
        SolidField(0.0))
    ball = SceneObject(
        "ball", Sphere(0.05),
        [Pose(np.eye(3), np.array([0.0, 0.0, 0.05]))] * t_total,
        SolidField(3.0))
    scene = SyntheticScene([table, ball], [cam] * t_total,
                           np.zeros((t_total, 3)), depth_noise_sigma=noise,
                           depth_dropout_prob=dropout,
                           extras={"alpha": 12.0, "window": (1, 2)})
    refs = [make_reference(scene, "ball", np.array([0.0, 0.0, 0.05])),
            make_reference(scene, "ball", np.array([0.03, 0.0, 0.04]))]
    return scene, refs


@pytest.fixture(scope="module")
def rendered():
    scene, refs = _tiny_scene()
    return scene, refs, bio.render_bundle(scene, refs, seed=4)


def test_round_trip_bit_exact(rendered, tmp_path):
    _, _, b = rendered
    root = bio.write_bundle(b, tmp_path / "b")
    again = bio.read_bundle(root)
    assert again == b
    # and writing the reread bundle reproduces the bytes on disk
    root2 = bio.write_bundle(again, tmp_path / "b2")
    assert (root2 / "manifest.json").read_bytes() == \
        (root / "manifest.json").read_bytes()
    name = "cam00/depth_00001.bin"
    assert (root2 / name).read_bytes() == (root / name).read_bytes()


def test_nan_depth_survives(rendered, tmp_path):
    _, _, b = rendered
    assert np.isnan(b.cameras[0].depth).any()  # dropout produced some
    again = bio.read_bundle(bio.write_bundle(b, tmp_path / "b"))
    np.testing.assert_array_equal(
        np.isnan(again.cameras[0].depth), np.isnan(b.cameras[0].depth))


def test_extras_survive(rendered, tmp_path):
    _, _, b = rendered
    again = bio.read_bundle(bio.write_bundle(b, tmp_path / "b"))
    assert again.extras["alpha"] == 12.0
    assert tuple(again.extras["window"]) == (1, 2)


def test_render_matches_render_frame(rendered):
    scene, refs, b = rendered
    fr = scene_sim.render_frame(scene, 1, refs, seed=4)
    np.testing.assert_array_equal(b.cameras[0].depth[1],
                                  fr.depth.astype("<f4"))
    np.testing.assert_array_equal(b.cameras[0].dms[0, 1],
                                  fr.dms[0].astype("<f4"))
    np.testing.assert_array_equal(b.gt_positions[1], fr.gt_positions)
    np.testing.assert_array_equal(b.gt_visible[1], fr.gt_visible)


def test_mixed_intrinsics_rejected():
    scene, refs = _tiny_scene()
    cams = list(scene.cameras)
    cams[1] = CameraModel(fx=60.0, fy=50.0, cx=16.0, cy=12.0, width=32,
                          height=24, pose=cams[1].pose)
    bad = SyntheticScene(scene.objects, cams, np.zeros((len(cams), 3)),
                         depth_noise_sigma=0.0, depth_dropout_prob=0.0)
    with pytest.raises(ValueError):
        bio.render_bundle(bad, refs)


# ── failure kinds ───────────────────────────────────────────────────────


@pytest.fixture()
def on_disk(rendered, tmp_path):
    _, _, b = rendered
    return bio.write_bundle(b, tmp_path / "bundle")


def test_missing_manifest(tmp_path):
    with pytest.raises(bio.MissingFileError):
        bio.read_bundle(tmp_path / "nowhere")


def test_missing_camera_dir(on_disk):
    manifest = json.loads((on_disk / "manifest.json").read_text())
    manifest["cameras"][0]["name"] = "cam99"
    (on_disk / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(bio.MissingFileError):
        bio.read_bundle(on_disk)


def test_missing_array_file(on_disk):
    victim = on_disk / "cam00" / "depth_00002.bin"
    victim.unlink()
    with pytest.raises(bio.MissingFileError) as exc:
        bio.read_bundle(on_disk)
    assert "depth_00002" in str(exc.value)


def test_truncated_array_names_file(on_disk):
    victim = on_disk / "cam00" / "dm_01_00001.bin"
    victim.write_bytes(victim.read_bytes()[:-5])
    with pytest.raises(bio.ShapeMismatchError) as exc:
        bio.read_bundle(on_disk)
    assert "dm_01_00001" in str(exc.value)


def test_bad_magic(on_disk):
    victim = on_disk / "cam00" / "depth_00000.bin"
    raw = bytearray(victim.read_bytes())
    raw[:4] = b"NOPE"
    victim.write_bytes(bytes(raw))
    with pytest.raises(bio.BadMagicError):
        bio.read_bundle(on_disk)


def test_version_mismatch(on_disk):
    victim = on_disk / "cam00" / "depth_00000.bin"
    raw = bytearray(victim.read_bytes())
    struct.pack_into("<H", raw, 4, bio.FORMAT_VERSION + 1)
    victim.write_bytes(bytes(raw))
    with pytest.raises(bio.VersionMismatchError):
        bio.read_bundle(on_disk)


def test_header_shape_disagreement(on_disk):
    victim = on_disk / "cam00" / "depth_00000.bin"
    raw = bytearray(victim.read_bytes())
    struct.pack_into("<I", raw, 8, 999)
    victim.write_bytes(bytes(raw))
    with pytest.raises(bio.ShapeMismatchError):
        bio.read_bundle(on_disk)


def test_pose_count_mismatch(on_disk):
    manifest = json.loads((on_disk / "manifest.json").read_text())
    manifest["cameras"][0]["poses"].append(
        manifest["cameras"][0]["poses"][-1])
    (on_disk / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(bio.ShapeMismatchError):
        bio.read_bundle(on_disk)


def test_gt_shape_mismatch(on_disk):
    manifest = json.loads((on_disk / "manifest.json").read_text())
    manifest["ground_truth"]["positions"][0].append([0.0, 0.0, 0.0])
    (on_disk / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(bio.ShapeMismatchError):
        bio.read_bundle(on_disk)


def test_error_kinds_are_distinct():
    kinds = [bio.MissingFileError, bio.ShapeMismatchError,
             bio.BadMagicError, bio.VersionMismatchError]
    for a in kinds:
        assert issubclass(a, bio.BundleError)
        for b in kinds:
            if a is not b:
                assert not issubclass(a, b)
