"""Run orchestration: replay a trajectory bundle through a tracker.

One tracker instance per keypoint reference, frames replayed in order,
per-frame estimates and metrics collected into TrackRecords and
optionally streamed to CSV. Keypoints are independent: each gets its own
RNG stream spawned from the run seed, so per-keypoint results do not
depend on how many other keypoints run alongside.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import discrete_filter, particle_filter
from .descriptor import activation_map
from .discrete_filter import DiscreteFilterConfig
from .metrics import TrackRecord, gt_error, mean_mode_distance
from .particle_filter import GripperMotion, Measurement, ParticleFilterConfig

FILTER_KINDS = ("none", "discrete", "particle")

CSV_COLUMNS = ["keypoint", "t", "estimate_x", "estimate_y", "estimate_z",
               "gt_x", "gt_y", "gt_z", "gt_error", "mean_mode_px", "n_eff",
               "visible"]


@dataclass(frozen=True)
class RunConfig:
    """Everything a tracking run depends on besides the bundle."""

    filter_kind: str = "none"
    seed: int = 0
    alpha: float = 12.0
    discrete: DiscreteFilterConfig = field(default_factory=DiscreteFilterConfig)
    particle: ParticleFilterConfig = field(
        default_factory=ParticleFilterConfig)
    output: str = None

    def __post_init__(self):
        if self.filter_kind not in FILTER_KINDS:
            raise ValueError(
                f"filter kind {self.filter_kind!r}, expected one of "
                f"{FILTER_KINDS}")


def config_for_bundle(bundle, filter_kind, seed=0, output=None, alpha=None,
                      discrete_overrides=None, particle_overrides=None):
    """Build a RunConfig honoring the bundle's recommended settings.

    Precedence: module defaults, then bundle extras (scene-derived alpha
    and per-filter recommendations), then the explicit override dicts.
    """
    extras = bundle.extras or {}
    if alpha is None:
        alpha = extras.get("alpha", 12.0)
    discrete_kw = {"alpha": alpha}
    discrete_kw.update(extras.get("discrete_overrides", {}))
    discrete_kw.update(discrete_overrides or {})
    particle_kw = {"alpha": alpha}
    particle_kw.update(extras.get("particle_overrides", {}))
    particle_kw.update(particle_overrides or {})
    return RunConfig(
        filter_kind=filter_kind, seed=seed, alpha=alpha,
        discrete=DiscreteFilterConfig(**discrete_kw),
        particle=ParticleFilterConfig(**particle_kw), output=output)


def _ref_name(k, ref):
    return f"kp{k:02d}_{ref.object_id}"


def _track_none(bundle, k, config):
    cam = bundle.cameras[0]
    t_total = bundle.n_frames
    est = np.full((t_total, 3), np.nan)
    est_px = np.full((t_total, 2), np.nan)
    mm = np.full(t_total, np.nan)
    for t in range(t_total):
        camera = cam.camera_at(t)
        am = activation_map(cam.dms[k, t], config.alpha)
        e = discrete_filter.estimate(
            discrete_filter.PixelBelief(am, camera), cam.depth[t], camera)
        if e.has_depth:
            est[t] = e.world
        est_px[t] = e.uv
        mm[t] = mean_mode_distance(am)
    return est, est_px, mm, np.full(t_total, np.nan)


def _track_discrete(bundle, k, config):
    cam = bundle.cameras[0]
    t_total = bundle.n_frames
    est = np.full((t_total, 3), np.nan)
    est_px = np.full((t_total, 2), np.nan)
    mm = np.full(t_total, np.nan)
    belief = discrete_filter.init_uniform(cam.height, cam.width,
                                          cam.camera_at(0))
    for t in range(t_total):
        camera = cam.camera_at(t)
        if t > 0:
            belief = discrete_filter.predict(belief, camera,
                                             cam.depth[t - 1].astype(float),
                                             config.discrete)
        belief = discrete_filter.update(belief, cam.dms[k, t],
                                        config.discrete)
        e = discrete_filter.estimate(belief, cam.depth[t], camera)
        if e.has_depth:
            est[t] = e.world
        est_px[t] = e.uv
        mm[t] = mean_mode_distance(belief.grid)
    return est, est_px, mm, np.full(t_total, np.nan)


def _track_particle(bundle, k, config):
    t_total = bundle.n_frames
    est = np.full((t_total, 3), np.nan)
    neff = np.full(t_total, np.nan)
    kp_seed = np.random.SeedSequence(config.seed, spawn_key=(k,))
    cfg = config.particle

    def frame_measurements(t):
        return [Measurement(c.camera_at(t), c.dms[k, t], c.depth[t])
                for c in bundle.cameras]

    ps = particle_filter.init_from_measurement(
        frame_measurements(0)[0], cfg, kp_seed)
    est[0] = particle_filter.estimate(ps)
    for t in range(1, t_total):
        g = GripperMotion(bundle.gripper_deltas[t])
        ps, e = particle_filter.step(ps, g, frame_measurements(t), cfg)
        est[t] = e
        neff[t] = ps.last_n_eff
    return est, np.full((t_total, 2), np.nan), np.full(t_total, np.nan), neff


_TRACKERS = {"none": _track_none, "discrete": _track_discrete,
             "particle": _track_particle}


def track_keypoint(bundle, k, config):
    """Track reference k through the whole bundle; returns a TrackRecord."""
    est, est_px, mm, neff = _TRACKERS[config.filter_kind](bundle, k, config)
    t_total = bundle.n_frames
    if bundle.gt_positions is not None:
        gt = bundle.gt_positions[:, k]
        vis = bundle.gt_visible[:, k]
    else:
        gt = np.full((t_total, 3), np.nan)
        vis = np.zeros(t_total, dtype=bool)
    return TrackRecord(
        keypoint=_ref_name(k, bundle.references[k]),
        estimate_world=est, gt_world=gt, visible=vis,
        estimate_px=est_px, n_eff=neff, mean_mode_px=mm)


def _cell(value):
    return repr(float(value)) if np.isfinite(value) else ""


def record_rows(record):
    err = gt_error(record)
    rows = []
    for t in range(record.t):
        rows.append([
            record.keypoint, str(t),
            _cell(record.estimate_world[t, 0]),
            _cell(record.estimate_world[t, 1]),
            _cell(record.estimate_world[t, 2]),
            _cell(record.gt_world[t, 0]),
            _cell(record.gt_world[t, 1]),
            _cell(record.gt_world[t, 2]),
            _cell(err[t]),
            _cell(record.mean_mode_px[t]),
            _cell(record.n_eff[t]),
            "1" if record.visible[t] else "0",
        ])
    return rows


def run_tracking(bundle, config):
    """Track every reference in the bundle; returns the TrackRecords.

    With config.output set, rows stream to CSV as each keypoint
    finishes, so a crash mid-run leaves the completed keypoints on disk.
    """
    records = []
    writer = out = None
    if config.output:
        out = open(config.output, "w", newline="")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        out.flush()
    try:
        for k in range(bundle.n_refs):
            record = track_keypoint(bundle, k, config)
            records.append(record)
            if writer is not None:
                writer.writerows(record_rows(record))
                out.flush()
    finally:
        if out is not None:
            out.close()
    return records


def read_records_csv(path):
    """Load TrackRecords back from a run_tracking CSV."""
    by_kp = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV columns: {reader.fieldnames}")
        for row in reader:
            by_kp.setdefault(row["keypoint"], []).append(row)

    def num(s):
        return float(s) if s else np.nan

    records = []
    for kp, rows in by_kp.items():
        rows.sort(key=lambda r: int(r["t"]))
        records.append(TrackRecord(
            keypoint=kp,
            estimate_world=[[num(r["estimate_x"]), num(r["estimate_y"]),
                             num(r["estimate_z"])] for r in rows],
            gt_world=[[num(r["gt_x"]), num(r["gt_y"]), num(r["gt_z"])]
                      for r in rows],
            visible=np.array([r["visible"] == "1" for r in rows]),
            n_eff=[num(r["n_eff"]) for r in rows],
            mean_mode_px=[num(r["mean_mode_px"]) for r in rows]))
    return records
