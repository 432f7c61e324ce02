"""Scripted synthetic scenes exercising the trackers' failure modes.

Three scenes are provided:

* symmetric_lid: a two-fold symmetric disk watched by a descending
  overhead camera. A small context tab near the disk lets the descriptor
  field disambiguate the symmetry until the camera zooms in far enough
  that the tab leaves the view; from then on the distance maps are
  multimodal and only filtering keeps the estimate on the right mode.
* rubbish_bin: a static bin and a gripper-carried piece of rubbish. The
  rubbish enters the view, holds, is carried a long way while nothing
  observes it, and reappears elsewhere; meanwhile the camera pans away
  from the bin and back. Tracking the rubbish end to end needs both
  particle injection (first acquisition) and gripper-coupled motion
  (the unobserved carry); remembering the bin needs the filter to hold
  its belief while unobserved.
* occluder_pass: a wall sweeping between the camera and a static ball,
  0.3 m in front of it, driving the occlusion branch of the measurement
  model to near certainty mid-pass.

Each scene's `extras` carries the scenario-derived knobs and timeline
markers the evaluation relies on (softmax temperature, event frames,
recommended filter overrides), so callers never re-derive them.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import geometry, scene_sim
from .geometry import CameraModel, Pose
from .scene_sim import (Box, ContextGate, Disk, KeypointRef, RingField,
                        SceneObject, SolidField, Sphere, SyntheticScene,
                        make_reference)

# Overhead view: camera x stays world x, the camera looks along world -z.
TOPDOWN = np.diag([1.0, -1.0, -1.0])

# Softmax temperature recommended for the scripted scenes. The image has
# thousands of background pixels at normalized distance ~1 against a
# handful of matching pixels near 0; at alpha=4 the summed background
# mass e^-4 per pixel would dominate the posterior, at 12 it is
# negligible while distinct objects (distance >= ~0.7) stay suppressed.
SCENE_ALPHA = 12.0


@dataclass(frozen=True)
class Scenario:
    """A scene plus the references tracked on it."""

    name: str
    scene: SyntheticScene
    refs: list


def _overhead(x, y, z, f, w, h):
    pose = Pose(TOPDOWN, np.array([x, y, z]))
    return CameraModel(fx=f, fy=f, cx=w / 2, cy=h / 2, width=w, height=h,
                       pose=pose)


def _static(pose, t):
    return [pose] * t


def _hold_move_hold(waypoints, t_total):
    """Piecewise-linear 1D schedule from (frame, value) waypoints."""
    frames = np.arange(t_total, dtype=float)
    ts = [p[0] for p in waypoints]
    vs = [p[1] for p in waypoints]
    return np.interp(frames, ts, vs)


def _ring_points(rho, count, z, phase=0.0):
    angles = phase + 2.0 * np.pi * np.arange(count) / count
    return [np.array([rho * np.cos(a), rho * np.sin(a), z]) for a in angles]


def symmetric_lid(t_total=160):
    """Two-fold symmetric lid under a descending wrist camera."""
    w = h = 80
    f = 130.0

    table = SceneObject(
        "table", Box(np.array([0.5, 0.5, 0.002])),
        _static(Pose(np.eye(3), np.array([0.0, 0.0, -0.004])), t_total),
        SolidField(0.0))
    # two-fold symmetry keeps the dark-gate residual (one amplitude)
    # well separated from the impostor gate distance (two amplitudes), so
    # the filter's on-mode likelihood clears tau while the impostor mode
    # stays suppressed for the unfiltered baseline
    lid = SceneObject(
        "lid", Disk(0.09),
        _static(Pose(np.eye(3), np.array([0.0, 0.0, 0.018])), t_total),
        RingField(2.1, 2.0, amp_ang=1.0), gate=ContextGate("tab", 0.52),
        symmetry=2.0)
    tab = SceneObject(
        "tab", Sphere(0.02),
        _static(Pose(np.eye(3), np.array([0.18, 0.0, 0.02])), t_total),
        SolidField(4.2))

    heights = _hold_move_hold([(0, 0.75), (120, 0.36), (t_total - 1, 0.36)],
                              t_total)
    cameras = [_overhead(0.0, 0.0, z, f, w, h) for z in heights]

    scene_noext = SyntheticScene(
        [lid, table, tab], cameras, np.zeros((t_total, 3)),
        depth_noise_sigma=0.003, depth_dropout_prob=0.01)

    tab_center = np.array([0.18, 0.0, 0.02])
    loss_t = next(t for t in range(t_total)
                  if not geometry.in_frustum(cameras[t], tab_center))

    refs = [make_reference(scene_noext, "lid", p)
            for p in _ring_points(0.012, 8, 0.0)] \
        + [make_reference(scene_noext, "lid", p)
           for p in _ring_points(0.054, 8, 0.0, phase=0.1)]

    extras = {
        "alpha": SCENE_ALPHA,
        "context_loss_t": loss_t,
        "pre_window": (10, loss_t - 5),
        "post_window": (loss_t + 2, t_total),
        "center_ref_indices": list(range(8)),
        "offcenter_ref_indices": list(range(8, 16)),
        # injection would steadily leak mass to the symmetric impostor
        # modes (they score exactly as well once the context is gone), so
        # the particle filter runs without it here
        "particle_overrides": {"p_inject": 0.0, "p_w": 0.0, "sigma_r": 0.003},
    }
    scene = SyntheticScene(
        [lid, table, tab], cameras, np.zeros((t_total, 3)),
        depth_noise_sigma=0.003, depth_dropout_prob=0.01, extras=extras)
    return Scenario("symmetric_lid", scene, refs)


def rubbish_bin(t_total=180):
    """Static bin, gripper-carried rubbish, panning overhead camera."""
    w = h = 80
    f = 110.0
    cam_z = 0.75
    rubbish_z = 0.15

    # Phases: the camera watches the bin while the rubbish is carried in,
    # held, and carried out of view to the right; only once the gripper
    # has stopped does the camera pan away from the bin (so no net
    # gripper motion happens while the bin is unobserved; the coupled
    # motion prior would otherwise drag the blind bin belief along), and
    # it pans back at the end.
    pan_away, pan_there = 88, 94
    pan_back, pan_home = 140, 146
    cam_x = _hold_move_hold(
        [(0, 0.0), (pan_away, 0.0), (pan_there, 0.62), (pan_back, 0.62),
         (pan_home, 0.0), (t_total - 1, 0.0)], t_total)
    cameras = [_overhead(x, 0.0, cam_z, f, w, h) for x in cam_x]

    # gripper: bring the rubbish in, hold, carry it right out of view,
    # then wiggle with zero net motion while the camera is away from the
    # static bin
    grip_x = _hold_move_hold(
        [(0, 0.62), (6, 0.62), (32, 0.14), (54, 0.14), (80, 0.50),
         (t_total - 1, 0.50)], t_total)
    osc = np.zeros(t_total)
    for t in range(94, 110):
        osc[t] = 0.008 if t % 2 == 0 else 0.0
    gripper = np.column_stack([grip_x + osc, np.zeros(t_total),
                               np.full(t_total, rubbish_z)])

    table = SceneObject(
        "table", Box(np.array([0.8, 0.8, 0.01])),
        _static(Pose(np.eye(3), np.array([0.0, 0.0, -0.01])), t_total),
        SolidField(0.0))
    bin_obj = SceneObject(
        "bin", Box(np.array([0.09, 0.09, 0.05])),
        _static(Pose(np.eye(3), np.array([0.0, 0.0, 0.05])), t_total),
        SolidField(2.1))
    rubbish = SceneObject(
        "rubbish", Box(np.array([0.035, 0.025, 0.02])),
        [Pose(np.eye(3), g) for g in gripper], SolidField(4.2))

    scene_noext = SyntheticScene(
        [table, bin_obj, rubbish], cameras, gripper,
        depth_noise_sigma=0.003, depth_dropout_prob=0.01)

    bin_top = [np.array([sx, sy, 0.05])
               for sx in (-0.07, 0.0, 0.07) for sy in (-0.07, 0.0, 0.07)
               if not (sx == 0.0 and sy == 0.0)]
    rub_top = [np.array([sx, sy, 0.02])
               for sx in (-0.025, 0.0, 0.025) for sy in (-0.015, 0.0, 0.015)
               if not (sx == 0.0 and sy == 0.0)]
    refs = [make_reference(scene_noext, "bin", p) for p in bin_top] \
        + [make_reference(scene_noext, "rubbish", p) for p in rub_top]

    def all_in_view(t, obj, locals_):
        pose = scene_noext.objects[obj].poses[t]
        return all(geometry.in_frustum(cameras[t], pose.transform(p))
                   for p in locals_)

    entry_t = next(t for t in range(1, t_total) if all_in_view(t, 2, rub_top))
    reentry_t = next(t for t in range(pan_back, t_total)
                     if all_in_view(t, 1, bin_top))

    extras = {
        "alpha": SCENE_ALPHA,
        "entry_t": entry_t,
        "eval_start": entry_t + 10,
        # steady blind segment: pan transients excluded, because mid-pan
        # frames briefly see table patches near the bin
        "bin_out_window": (pan_there, pan_back),
        "reentry_t": reentry_t,
        "bin_ref_indices": list(range(8)),
        "rubbish_ref_indices": list(range(8, 16)),
        # the unobserved carry spans ~0.2 m; the estimate lags the true
        # motion by (1 - p_w) of it, so coupling must be near certain
        "particle_overrides": {"p_w": 0.95, "p_inject": 0.01},
    }
    scene = SyntheticScene(
        [table, bin_obj, rubbish], cameras, gripper,
        depth_noise_sigma=0.003, depth_dropout_prob=0.01, extras=extras)
    return Scenario("rubbish_bin", scene, refs)


def occluder_pass(t_total=80):
    """A wall sweeping 0.3 m in front of a watched ball."""
    w = h = 64
    f = 160.0

    cameras = [_overhead(0.0, 0.0, 0.55, f, w, h)] * t_total

    wall_x = _hold_move_hold([(0, -0.45), (20, -0.45), (60, 0.45),
                              (t_total - 1, 0.45)], t_total)
    table = SceneObject(
        "table", Box(np.array([0.6, 0.6, 0.01])),
        _static(Pose(np.eye(3), np.array([0.0, 0.0, -0.01])), t_total),
        SolidField(0.0))
    ball = SceneObject(
        "ball", Sphere(0.03),
        _static(Pose(np.eye(3), np.array([0.0, 0.0, 0.03])), t_total),
        SolidField(2.1))
    # ball top sits at depth 0.49; the wall's top face at depth 0.19
    wall = SceneObject(
        "wall", Box(np.array([0.25, 0.06, 0.0075])),
        [Pose(np.eye(3), np.array([x, 0.0, 0.3525])) for x in wall_x],
        SolidField(4.2))

    top = 0.03 * np.array([0.0, 0.0, 1.0])
    offsets = [np.array([0.015, 0.0, 0.0]), np.array([-0.015, 0.0, 0.0]),
               np.array([0.0, 0.015, 0.0]), np.array([0.0, -0.015, 0.0])]

    scene_noext = SyntheticScene(
        [table, ball, wall], cameras, np.zeros((t_total, 3)),
        depth_noise_sigma=0.003, depth_dropout_prob=0.01)
    refs = [make_reference(scene_noext, "ball",
                           _on_sphere(top + o, 0.03)) for o in offsets]

    extras = {
        "alpha": SCENE_ALPHA,
        "wall_clearance": 0.30,
        "pass_window": (20, 60),
    }
    scene = SyntheticScene(
        [table, ball, wall], cameras, np.zeros((t_total, 3)),
        depth_noise_sigma=0.003, depth_dropout_prob=0.01, extras=extras)
    return Scenario("occluder_pass", scene, refs)


def _on_sphere(direction, radius):
    d = np.asarray(direction, dtype=float)
    return radius * d / np.linalg.norm(d)


def scripted_scenarios():
    """All named scenes, freshly built."""
    scens = [symmetric_lid(), rubbish_bin(), occluder_pass()]
    return {s.name: s for s in scens}
