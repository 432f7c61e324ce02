"""World-frame particle filter for a single tracked keypoint.

Hypotheses are 3D points in the world frame, so several cameras can score
the same particle set and the filter keeps a meaningful belief while the
target is outside every view. Motion is a Gaussian random walk optionally
coupled to the gripper; the measurement combines descriptor distance,
depth agreement, and an explicit occlusion branch.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from . import geometry
from .descriptor import activation_map
from .geometry import CameraModel
from .kernels import gather_bilinear, stratified_pick

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ParticleFilterConfig:
    """Knobs of the 3D filter.

    Distances are in meters. tau is the uninformative likelihood assigned
    when a particle cannot be scored (out of view or occluded); it must be
    strictly inside (0,1) so that being unobservable is neither free nor
    fatal. epsilon is the slack subtracted from the particle's depth before
    declaring it occluded.
    """

    n_particles: int = 500
    sigma_r: float = 0.005
    p_w: float = 0.1
    alpha: float = 4.0
    sigma_d: float = 0.01
    epsilon: float = 0.05
    tau: float = 0.1
    neff_frac: float = 0.5
    p_inject: float = 0.02

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.sigma_r < 0:
            raise ValueError("sigma_r must be >= 0")
        if not 0.0 <= self.p_w <= 1.0:
            raise ValueError("p_w must be in [0, 1]")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.sigma_d <= 0:
            raise ValueError("sigma_d must be > 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must be in (0, 1)")
        if not 0.0 < self.neff_frac <= 1.0:
            raise ValueError("neff_frac must be in (0, 1]")
        if not 0.0 <= self.p_inject < 1.0:
            raise ValueError("p_inject must be in [0, 1)")


class Particle(NamedTuple):
    position: np.ndarray
    weight: float


@dataclass(frozen=True)
class GripperMotion:
    """World-frame end-effector translation over one step."""

    delta: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=float)
        if d.shape != (3,) or not np.isfinite(d).all():
            raise ValueError("gripper delta must be a finite 3-vector")
        object.__setattr__(self, "delta", d)

    @staticmethod
    def none():
        return GripperMotion(np.zeros(3))


@dataclass(frozen=True)
class Measurement:
    """One camera's view of one frame: distance map plus depth map."""

    camera: CameraModel
    dm: np.ndarray
    depth: np.ndarray

    def __post_init__(self):
        dm = np.ascontiguousarray(self.dm, dtype=float)
        depth = np.ascontiguousarray(self.depth, dtype=float)
        shape = (self.camera.height, self.camera.width)
        if dm.shape != shape or depth.shape != shape:
            raise ValueError("dm and depth must match the camera dimensions")
        object.__setattr__(self, "dm", dm)
        object.__setattr__(self, "depth", depth)


@dataclass
class ParticleSet:
    """N weighted world-space hypotheses plus the RNG that drives them.

    Single-owner state: operations advance the RNG in a fixed order, so a
    set must not be shared between concurrently stepped filters. degenerate
    records whether the most recent update had to fall back to uniform
    weights; last_n_eff is the effective-particle count of the most recent
    step, taken after all updates and injections but before resampling.
    """

    positions: np.ndarray
    weights: np.ndarray
    rng: np.random.Generator
    degenerate: bool = False
    last_n_eff: float | None = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise ValueError("positions must have shape (N, 3)")
        if self.weights.shape != (self.positions.shape[0],):
            raise ValueError("weights must have shape (N,)")
        if self.n < 1:
            raise ValueError("particle set must not be empty")
        if (self.weights < 0).any():
            raise ValueError("weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("weights must sum to 1")

    @property
    def n(self):
        return self.positions.shape[0]

    def particle(self, i):
        return Particle(self.positions[i].copy(), float(self.weights[i]))

    @staticmethod
    def from_positions(positions, seed):
        """Uniform-weight set over given positions, with a fresh RNG."""
        positions = np.asarray(positions, dtype=float)
        n = positions.shape[0]
        return ParticleSet(positions.copy(), np.full(n, 1.0 / n),
                           np.random.default_rng(seed))


def init_from_measurement(m, cfg, seed):
    """Draw the initial cloud from the first observation.

    Particles are sampled i.i.d. from the softmax activation of the
    distance map, restricted to cells with a valid depth reading, and
    placed at the backprojection of the sampled cell center.
    """
    rng = np.random.default_rng(seed)
    act = activation_map(m.dm, cfg.alpha)
    valid = np.isfinite(m.depth) & (m.depth > 0)
    if not valid.any():
        raise ValueError("cannot initialize: no cell has a valid depth")
    flat = np.flatnonzero(valid.ravel())
    p = act.ravel()[flat]
    draws = rng.choice(flat.size, size=cfg.n_particles, p=p / p.sum())
    positions = _backproject_cells(m, flat[draws])
    n = cfg.n_particles
    return ParticleSet(positions, np.full(n, 1.0 / n), rng)


def predict(ps, g, cfg):
    """Motion step: isotropic Gaussian walk plus Bernoulli gripper coupling.

    RNG order is fixed (normals first, then the coupling coin flips) so
    that identical seeds give bit-identical trajectories.
    """
    noise = ps.rng.normal(0.0, cfg.sigma_r, size=(ps.n, 3))
    coupled = ps.rng.random(ps.n) < cfg.p_w
    positions = ps.positions + noise
    positions[coupled] += g.delta
    return ParticleSet(positions, ps.weights.copy(), ps.rng,
                       degenerate=ps.degenerate, last_n_eff=ps.last_n_eff)


def measurement_likelihoods(positions, m, cfg):
    """Vectorized measurement model over an (N, 3) position array.

    Out-of-view particles score the flat constant tau. In view, the score
    mixes the occluded branch (tau) with the visible branch, which is the
    peak-normalized depth Gaussian times exp(-alpha * distance-map value).
    The occlusion probability is one minus the Gaussian CDF of the depth
    residual shifted by the margin epsilon; a particle is only considered
    occluded when the sensor reads closer than the particle by more than
    that margin. The distance map is read bilinearly at the particle's
    continuous pixel; the depth map at the containing cell, since depth
    interpolation across object boundaries would invent phantom surfaces.
    Cells with invalid depth are treated as fully occluded.
    """
    positions = np.asarray(positions, dtype=float)
    uv, x_depth = geometry.project_points(m.camera, positions)
    h, w = m.depth.shape
    with np.errstate(invalid="ignore"):
        in_view = ((x_depth > 0)
                   & (uv[:, 0] >= 0) & (uv[:, 0] < w)
                   & (uv[:, 1] >= 0) & (uv[:, 1] < h))

    out = np.full(positions.shape[0], cfg.tau)
    if not in_view.any():
        return out

    u, v = uv[in_view, 0], uv[in_view, 1]
    xd = x_depth[in_view]
    zd = m.depth[np.floor(v).astype(int), np.floor(u).astype(int)]
    depth_ok = np.isfinite(zd) & (zd > 0)

    p_o = np.ones(u.size)
    p_vis = np.zeros(u.size)
    if depth_ok.any():
        resid = zd[depth_ok] - (xd[depth_ok] - cfg.epsilon)
        p_o[depth_ok] = 1.0 - ndtr(resid / cfg.sigma_d)
        p_d = np.exp(-((zd[depth_ok] - xd[depth_ok]) ** 2)
                     / (2.0 * cfg.sigma_d ** 2))
        p_c = np.exp(-cfg.alpha * gather_bilinear(m.dm, u[depth_ok] - 0.5,
                                                  v[depth_ok] - 0.5))
        p_vis[depth_ok] = p_d * p_c
    out[in_view] = p_o * cfg.tau + (1.0 - p_o) * p_vis
    return out


def measurement_likelihood(p, m, cfg):
    """Scalar measurement model for one particle (weight is not used)."""
    position = np.asarray(getattr(p, "position", p), dtype=float)
    return float(measurement_likelihoods(position[None, :], m, cfg)[0])


def update(ps, m, cfg):
    """Correction step: reweight by the measurement likelihoods.

    If every likelihood underflows to zero the weights reset to uniform
    and the degeneracy flag is raised instead of erroring out.
    """
    w = ps.weights * measurement_likelihoods(ps.positions, m, cfg)
    s = w.sum()
    if not np.isfinite(s) or s <= 0.0:
        w = np.full(ps.n, 1.0 / ps.n)
        degenerate = True
    else:
        w = w / s
        degenerate = False
    return ParticleSet(ps.positions.copy(), w, ps.rng,
                       degenerate=degenerate, last_n_eff=ps.last_n_eff)


def n_eff(ps):
    """Effective particle count, the inverse sum of squared weights."""
    return float(1.0 / np.square(ps.weights).sum())


def resample_stratified(ps):
    """Resample with one uniform draw per stratum [i/N, (i+1)/N).

    Guarantees each particle's copy count is within 2 of N times its
    weight; output weights are uniform.
    """
    n = ps.n
    u = (np.arange(n) + ps.rng.random(n)) / n
    idx = stratified_pick(np.cumsum(ps.weights), u)
    return ParticleSet(ps.positions[idx].copy(), np.full(n, 1.0 / n),
                       ps.rng, degenerate=ps.degenerate,
                       last_n_eff=ps.last_n_eff)


def inject_random(ps, m, cfg):
    """Replace each particle with probability p_inject by a fresh draw
    from the current activation map at measured depth.

    Replaced particles take the pre-injection mean weight, which for a
    normalized set is exactly 1/N: new hypotheses start average, neither
    dominant nor doomed. Skipped without consuming randomness when
    p_inject is 0 or the observation has no valid depth.
    """
    if cfg.p_inject == 0.0:
        return ps
    valid = np.isfinite(m.depth) & (m.depth > 0)
    if not valid.any():
        return ps
    mask = ps.rng.random(ps.n) < cfg.p_inject
    k = int(mask.sum())
    if k == 0:
        return ParticleSet(ps.positions.copy(), ps.weights.copy(), ps.rng,
                           degenerate=ps.degenerate,
                           last_n_eff=ps.last_n_eff)
    act = activation_map(m.dm, cfg.alpha)
    flat = np.flatnonzero(valid.ravel())
    p = act.ravel()[flat]
    draws = ps.rng.choice(flat.size, size=k, p=p / p.sum())
    positions = ps.positions.copy()
    positions[mask] = _backproject_cells(m, flat[draws])
    w = ps.weights.copy()
    w[mask] = ps.weights.mean()
    return ParticleSet(positions, w / w.sum(), ps.rng,
                       degenerate=ps.degenerate, last_n_eff=ps.last_n_eff)


def estimate(ps):
    """Posterior mean: the weighted average of all hypotheses."""
    return ps.weights @ ps.positions


def step(ps, g, measurements, cfg):
    """One full filter cycle over any number of synchronized cameras.

    Predict once, correct with every measurement, inject per measurement,
    then resample if the effective particle count has dropped below
    neff_frac of N. Returns the new set and the posterior-mean estimate;
    the recorded n_eff is the pre-resampling value.
    """
    ps = predict(ps, g, cfg)
    for m in measurements:
        ps = update(ps, m, cfg)
    for m in measurements:
        ps = inject_random(ps, m, cfg)
    ne = n_eff(ps)
    if ne < cfg.neff_frac * ps.n:
        ps = resample_stratified(ps)
    ps.last_n_eff = ne
    return ps, estimate(ps)


def _backproject_cells(m, flat_cells):
    """World points at the centers of flat-indexed cells, at measured depth."""
    h, w = m.depth.shape
    rows, cols = np.divmod(flat_cells, w)
    uv = np.stack([cols + 0.5, rows + 0.5], axis=1).astype(float)
    return geometry.backproject_pixels(m.camera, uv, m.depth[rows, cols])
