"""Density-based splitting of point clouds and mask projection.

Supports turning a depth-sensed point cloud into per-object pixel masks:
cluster the points by density, then project each cluster back into a
camera, keeping only pixels where the projected depth agrees with the
rendered depth so that occluded parts drop out of the mask.
"""

import numpy as np
from scipy.spatial import cKDTree

from . import geometry

NOISE = -1


def dbscan(points, eps, min_pts):
    """Standard density-based clustering.

    Core points have at least min_pts neighbors (self included) within
    eps; clusters are the density-connected components of core points,
    with border points joining the first cluster that reaches them.
    Returns one label per point, NOISE (-1) for unclustered points.
    Deterministic for a fixed point order.
    """
    points = np.asarray(points, dtype=float)
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    n = points.shape[0]
    labels = np.full(n, NOISE, dtype=int)
    if n == 0:
        return labels

    tree = cKDTree(points)
    neighborhoods = tree.query_ball_point(points, r=eps)
    core = np.array([len(nb) >= min_pts for nb in neighborhoods])

    cluster = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        labels[i] = cluster
        queue = list(neighborhoods[i])
        while queue:
            j = queue.pop()
            if labels[j] != NOISE:
                continue
            labels[j] = cluster
            if core[j]:
                queue.extend(neighborhoods[j])
        cluster += 1
    return labels


def project_masks(points, labels, camera, depth, sigma_d):
    """Binary pixel mask per cluster, respecting occlusions.

    A pixel belongs to a cluster iff one of its points projects into that
    pixel with a depth within 3 sigma_d of the rendered depth there, so
    points hidden behind a nearer surface do not mark pixels.
    Returns {label: bool array} for every non-noise label, including
    clusters that end up with an empty mask.
    """
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels, dtype=int)
    depth = np.asarray(depth, dtype=float)
    h, w = depth.shape

    masks = {int(c): np.zeros((h, w), dtype=bool)
             for c in np.unique(labels) if c != NOISE}
    if not masks:
        return masks

    keep = labels != NOISE
    uv, z = geometry.project_points(camera, points[keep])
    with np.errstate(invalid="ignore"):
        in_view = ((z > 0) & (uv[:, 0] >= 0) & (uv[:, 0] < w)
                   & (uv[:, 1] >= 0) & (uv[:, 1] < h))
    cols = np.floor(uv[in_view, 0]).astype(int)
    rows = np.floor(uv[in_view, 1]).astype(int)
    rendered = depth[rows, cols]
    with np.errstate(invalid="ignore"):
        agree = np.abs(z[in_view] - rendered) <= 3.0 * sigma_d

    for label, r, c in zip(labels[keep][in_view][agree], rows[agree],
                           cols[agree]):
        masks[int(label)][r, c] = True
    return masks
