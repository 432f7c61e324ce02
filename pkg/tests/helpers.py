"""Shared randomized-construction helpers for the test suite."""

import numpy as np

from kptrack.geometry import CameraModel, Pose


def random_rotation(rng):
    """Uniform-ish random rotation via QR of a Gaussian matrix, det fixed to +1."""
    m = rng.normal(size=(3, 3))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_pose(rng, t_scale=1.0):
    return Pose(random_rotation(rng), rng.uniform(-t_scale, t_scale, size=3))


def random_camera(rng, width=64, height=48):
    return CameraModel(
        fx=rng.uniform(40.0, 200.0),
        fy=rng.uniform(40.0, 200.0),
        cx=rng.uniform(0.2, 0.8) * width,
        cy=rng.uniform(0.2, 0.8) * height,
        width=width,
        height=height,
        pose=random_pose(rng),
    )


def points_in_front(rng, camera, n, z_lo=0.1, z_hi=8.0):
    """World points that project with strictly positive depth for `camera`."""
    z = rng.uniform(z_lo, z_hi, size=n)
    x = rng.uniform(-0.6, 0.6, size=n) * z
    y = rng.uniform(-0.6, 0.6, size=n) * z
    cam_pts = np.stack([x, y, z], axis=1)
    return camera.pose.transform(cam_pts)


# ── Contrastive-batch construction and finite-difference oracle ─────────────

def random_contrastive_batch(rng, height=5, width=6, depth=2, m=3, n_max=3):
    """Random batch whose hinge terms sit safely away from their margins,
    so central finite differences stay valid."""
    from kptrack.descriptor import ContrastiveBatch

    scale = 0.6
    margin_fg = 0.36 * depth
    margin_bg = 0.80 * depth
    for _ in range(200):
        e_a = rng.normal(0.0, scale, size=(height, width, depth))
        e_b = rng.normal(0.0, scale, size=(height, width, depth))
        matches_a = np.stack([rng.integers(0, height, m),
                              rng.integers(0, width, m)], axis=1)
        matches_b = np.stack([rng.integers(0, height, m),
                              rng.integers(0, width, m)], axis=1)
        non_matches = []
        tags = []
        for _i in range(m):
            n_i = int(rng.integers(0, n_max + 1))
            non_matches.append(np.stack([rng.integers(0, height, n_i),
                                         rng.integers(0, width, n_i)], axis=1))
            tags.append(rng.random(n_i) < 0.5)
        batch = ContrastiveBatch(e_a, e_b, matches_a, matches_b,
                                 non_matches, tags, margin_fg, margin_bg)
        ok = True
        for i in range(m):
            nm = batch.non_matches[i]
            if nm.shape[0] == 0:
                continue
            anchor = e_a[matches_a[i, 0], matches_a[i, 1]]
            sq = ((anchor - e_b[nm[:, 0], nm[:, 1]]) ** 2).sum(axis=1)
            margins = np.where(batch.non_match_is_bg[i], margin_bg, margin_fg)
            if (np.abs(sq - margins) < 1e-3 * (1.0 + sq)).any():
                ok = False
                break
        if ok:
            return batch
    raise RuntimeError("could not build a kink-free batch")


def touched_pixels(batch):
    """Pixels of e_a / e_b referenced by the batch, as two sets of (r, c)."""
    in_a = {tuple(p) for p in batch.matches_a}
    in_b = {tuple(p) for p in batch.matches_b}
    for nm in batch.non_matches:
        in_b.update(tuple(p) for p in nm)
    return in_a, in_b


def fd_contrastive_gradients(batch, h=1e-5):
    """Central-difference gradients of the contrastive loss for every touched
    descriptor entry. Returns arrays shaped like e_a / e_b."""
    from kptrack.descriptor import contrastive_loss

    fd_a = np.zeros_like(batch.e_a)
    fd_b = np.zeros_like(batch.e_b)
    in_a, in_b = touched_pixels(batch)
    for target, fd, pixels in ((batch.e_a, fd_a, in_a), (batch.e_b, fd_b, in_b)):
        for (r, c) in pixels:
            for d in range(target.shape[2]):
                orig = target[r, c, d]
                target[r, c, d] = orig + h
                hi = contrastive_loss(batch)[0]
                target[r, c, d] = orig - h
                lo = contrastive_loss(batch)[0]
                target[r, c, d] = orig
                fd[r, c, d] = (hi - lo) / (2.0 * h)
    return fd_a, fd_b


def gradient_rel_error(analytic, fd):
    """Worst-case entrywise relative error with an absolute floor of 1."""
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(fd)))
    return float((np.abs(analytic - fd) / denom).max())
