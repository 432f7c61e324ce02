"""Evaluation metrics for tracked keypoint trajectories.

Accuracy is the Euclidean distance between estimated and ground-truth 3D
positions per timestep. Multimodality of a pixel posterior is indicated
by the distance between its expectation and its mode: near zero for a
unimodal peak, large when probability mass splits across hypotheses.
Aggregation runs across records (keypoints, trajectories) per timestep,
never across time.
"""

from dataclasses import dataclass

import numpy as np

from .descriptor import expectation_2d, mode_2d


@dataclass
class TrackRecord:
    """One keypoint's trajectory worth of tracker output.

    Arrays are per timestep. `estimate_world` and `gt_world` are (T, 3)
    and may contain NaN rows where undefined (no valid depth, or ground
    truth unavailable). `n_eff` is NaN except for particle runs;
    `mean_mode_px` is NaN except for pixel-posterior runs.
    """

    keypoint: str
    estimate_world: np.ndarray
    gt_world: np.ndarray
    visible: np.ndarray
    estimate_px: np.ndarray = None
    n_eff: np.ndarray = None
    mean_mode_px: np.ndarray = None

    def __post_init__(self):
        self.estimate_world = np.asarray(self.estimate_world, dtype=np.float64)
        self.gt_world = np.asarray(self.gt_world, dtype=np.float64)
        self.visible = np.asarray(self.visible, dtype=bool)
        t = len(self.visible)
        if self.estimate_world.shape != (t, 3) or self.gt_world.shape != (t, 3):
            raise ValueError("per-timestep arrays disagree on length")
        if self.estimate_px is None:
            self.estimate_px = np.full((t, 2), np.nan)
        if self.n_eff is None:
            self.n_eff = np.full(t, np.nan)
        if self.mean_mode_px is None:
            self.mean_mode_px = np.full(t, np.nan)
        for name in ("estimate_px", "n_eff", "mean_mode_px"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape[0] != t:
                raise ValueError(f"{name} disagrees on length")
            setattr(self, name, arr)

    @property
    def t(self):
        return len(self.visible)


def gt_error(record):
    """Per-timestep Euclidean error in meters; NaN where undefined."""
    return np.linalg.norm(record.estimate_world - record.gt_world, axis=1)


def mean_mode_distance(am):
    """Pixel distance between an activation map's expectation and mode."""
    am = np.asarray(am, dtype=np.float64)
    h, w = am.shape
    ex = expectation_2d(am) * np.array([w, h])
    mode = mode_2d(am)
    return float(np.hypot(ex[0] - mode.u, ex[1] - mode.v))


def aggregate(records, stat="gt_error"):
    """Per-timestep mean and population std of a statistic across records.

    `stat` names either "gt_error" or a per-timestep array field of
    TrackRecord. Timesteps where a record's value is undefined (NaN) are
    excluded from that timestep's aggregate; `count` reports how many
    records contributed. All records must share T.
    """
    if not records:
        raise ValueError("no records to aggregate")
    t = records[0].t
    if any(r.t != t for r in records):
        raise ValueError("records disagree on trajectory length")
    if stat == "gt_error":
        values = np.stack([gt_error(r) for r in records])
    else:
        values = np.stack([getattr(r, stat) for r in records])
    defined = np.isfinite(values)
    count = defined.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        safe = np.where(defined, values, 0.0)
        mean = safe.sum(axis=0) / count
        var = (np.where(defined, (values - mean) ** 2, 0.0)).sum(axis=0) / count
    mean = np.where(count > 0, mean, np.nan)
    std = np.where(count > 0, np.sqrt(var), np.nan)
    return AggregateResult(mean=mean, std=std, count=count)


@dataclass(frozen=True)
class AggregateResult:
    mean: np.ndarray
    std: np.ndarray
    count: np.ndarray

    def rows(self):
        """Per-timestep (t, mean, std, count) tuples, table-ready."""
        return [(t, self.mean[t], self.std[t], int(self.count[t]))
                for t in range(len(self.mean))]
