"""Pure numpy implementations of the hot kernels.

These are the reference semantics; the compiled module in _native.pyx must
match them (integer results exactly, float results up to accumulation order).
All pixel positions here are in cell-index space: position 0.0 is the center
of cell 0, so a pixel coordinate u maps to x = u - 0.5.
"""

import numpy as np

BACKEND = "numpy"


def splat_bilinear(values, x, y, h, w):
    """Scatter-add each value bilinearly into the 4 cells around (x, y).

    Args:
        values: (M,) masses to deposit.
        x, y: (M,) cell-index-space positions (column, row).
        h, w: grid shape.

    Returns:
        (grid, off_mass): the (h, w) accumulation grid and the total mass
        that fell outside it (non-finite positions count as fully outside).
    """
    values = np.asarray(values, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    grid = np.zeros((h, w), dtype=np.float64)

    ok = np.isfinite(x) & np.isfinite(y) & (np.abs(x) < 2**31) & (np.abs(y) < 2**31)
    off = float(values[~ok].sum())
    if ok.any():
        xv, yv, vv = x[ok], y[ok], values[ok]
        ix = np.floor(xv).astype(np.int64)
        iy = np.floor(yv).astype(np.int64)
        fx = xv - ix
        fy = yv - iy
        for dx, dy, wgt in (
            (0, 0, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ):
            cx = ix + dx
            cy = iy + dy
            inside = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
            np.add.at(grid, (cy[inside], cx[inside]), vv[inside] * wgt[inside])
            off += float((vv[~inside] * wgt[~inside]).sum())
    return grid, off


def gather_bilinear(grid, x, y):
    """Sample a 2D grid bilinearly at cell-index-space positions, edge-clamped.

    Args:
        grid: (h, w) array.
        x, y: (M,) positions (column, row).

    Returns:
        (M,) interpolated values.
    """
    grid = np.asarray(grid, dtype=np.float64)
    h, w = grid.shape
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, w - 1.0)
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, h - 1.0)
    ix = np.minimum(np.floor(x).astype(np.int64), max(w - 2, 0))
    iy = np.minimum(np.floor(y).astype(np.int64), max(h - 2, 0))
    fx = x - ix
    fy = y - iy
    ix1 = np.minimum(ix + 1, w - 1)
    iy1 = np.minimum(iy + 1, h - 1)
    v00 = grid[iy, ix]
    v10 = grid[iy, ix1]
    v01 = grid[iy1, ix]
    v11 = grid[iy1, ix1]
    return (v00 * (1 - fx) * (1 - fy) + v10 * fx * (1 - fy)
            + v01 * (1 - fx) * fy + v11 * fx * fy)


def stratified_pick(cum, u):
    """For each query u, return the first index i with cum[i] > u.

    cum is a nondecreasing cumulative-weight vector whose last entry is ~1.
    Queries beyond cum[-1] (roundoff) clamp to the last index.
    """
    cum = np.asarray(cum, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, cum.shape[0] - 1).astype(np.int64)
