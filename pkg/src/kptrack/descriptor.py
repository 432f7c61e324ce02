"""Distance maps, activation maps, 2D keypoint readout, and the pixelwise
contrastive loss with its analytic gradient.

A descriptor image is an (H, W, D) float array. Distance maps and activation
maps are plain (H, W) float arrays; an activation map is nonnegative and sums
to 1. Pixel readout follows the package convention: array index [r, c] is the
cell whose center sits at pixel (u, v) = (c + 0.5, r + 0.5).
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import PixelCoord

# Softmax temperature used when none is configured explicitly.
DEFAULT_ALPHA = 4.0


def distance_map(img, ref, normalize=True):
    """Per-pixel Euclidean distance between a descriptor image and a reference.

    Args:
        img: (H, W, D) descriptor image.
        ref: (D,) reference descriptor vector.
        normalize: divide by sqrt(D) so distances are comparable across
            descriptor dimensions.

    Returns:
        (H, W) array of nonnegative distances.

    Raises:
        ValueError: if the descriptor dimensions disagree.
    """
    img = np.asarray(img, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64).reshape(-1)
    if img.ndim != 3 or img.shape[2] != ref.shape[0]:
        raise ValueError(
            f"descriptor dimension mismatch: image {img.shape} vs reference "
            f"{ref.shape}")
    dm = np.linalg.norm(img - ref, axis=2)
    if normalize:
        dm = dm / np.sqrt(ref.shape[0])
    return dm


def activation_map(dm, alpha=DEFAULT_ALPHA):
    """Temperature softmax of the negated distance map.

    Computed in log space with max subtraction, so large alpha and large
    distances cannot overflow.

    Args:
        dm: (H, W) distance map.
        alpha: temperature, must be > 0.

    Returns:
        (H, W) probabilities summing to 1.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    logits = -float(alpha) * np.asarray(dm, dtype=np.float64)
    logits = logits - logits.max()
    am = np.exp(logits)
    return am / am.sum()


def expectation_2d(am):
    """Probability-weighted mean position of an activation map.

    Returns:
        (2,) array (x, y) in normalized image coordinates, x = u/W and
        y = v/H, using cell centers at +0.5.
    """
    am = np.asarray(am, dtype=np.float64)
    h, w = am.shape
    col_mass = am.sum(axis=0)
    row_mass = am.sum(axis=1)
    x = float(col_mass @ (np.arange(w) + 0.5)) / w
    y = float(row_mass @ (np.arange(h) + 0.5)) / h
    return np.array([x, y])


def mode_2d(am):
    """Cell center of the maximal entry; ties break to the smallest
    row-major index."""
    am = np.asarray(am, dtype=np.float64)
    r, c = np.unravel_index(int(np.argmax(am)), am.shape)
    return PixelCoord(c + 0.5, r + 0.5)


# ---------------------------------------------------------------------------
# Contrastive loss over a pair of descriptor images.
# ---------------------------------------------------------------------------

@dataclass
class ContrastiveBatch:
    """One image pair with sampled matches and per-match non-matches.

    Pixel indices are integer (row, col) pairs into the descriptor images.
    For match i, `non_matches[i]` holds pixels of `e_b` that must stay at
    least a squared-distance margin away from `e_a[matches_a[i]]`; the margin
    is `margin_bg` where `non_match_is_bg[i]` is True and `margin_fg`
    elsewhere. Margins apply to squared distances.
    """

    e_a: np.ndarray
    e_b: np.ndarray
    matches_a: np.ndarray
    matches_b: np.ndarray
    non_matches: list = field(default_factory=list)
    non_match_is_bg: list = field(default_factory=list)
    margin_fg: float = 0.5
    margin_bg: float = 1.0

    def __post_init__(self):
        self.e_a = np.asarray(self.e_a, dtype=np.float64)
        self.e_b = np.asarray(self.e_b, dtype=np.float64)
        self.matches_a = np.asarray(self.matches_a, dtype=np.int64).reshape(-1, 2)
        self.matches_b = np.asarray(self.matches_b, dtype=np.int64).reshape(-1, 2)
        if self.matches_a.shape[0] == 0:
            raise ValueError("a contrastive batch needs at least one match")
        if self.matches_a.shape != self.matches_b.shape:
            raise ValueError("matches_a and matches_b must pair up")
        if not (0.0 <= self.margin_fg <= self.margin_bg):
            raise ValueError("margins must satisfy 0 <= margin_fg <= margin_bg")
        m = self.matches_a.shape[0]
        if len(self.non_matches) not in (0, m):
            raise ValueError("non_matches must be empty or per-match")
        self.non_matches = [np.asarray(nm, dtype=np.int64).reshape(-1, 2)
                            for nm in self.non_matches]
        self.non_match_is_bg = [np.asarray(t, dtype=bool).reshape(-1)
                                for t in self.non_match_is_bg]


def contrastive_loss(batch):
    """Loss and analytic gradient for one ContrastiveBatch.

    The loss is the mean squared match distance plus, per match, the mean
    hinge max(0, margin - squared_distance) over that match's non-matches
    (mean taken over the match's own non-match count). The subgradient at a
    hinge boundary is taken as 0.

    Returns:
        (loss, grad_a, grad_b): float and two arrays shaped like the inputs,
        zero wherever a descriptor is not referenced.
    """
    m = batch.matches_a.shape[0]
    grad_a = np.zeros_like(batch.e_a)
    grad_b = np.zeros_like(batch.e_b)
    loss = 0.0

    ra, ca = batch.matches_a[:, 0], batch.matches_a[:, 1]
    rb, cb = batch.matches_b[:, 0], batch.matches_b[:, 1]
    diff = batch.e_a[ra, ca] - batch.e_b[rb, cb]
    loss += float((diff * diff).sum()) / m
    np.add.at(grad_a, (ra, ca), 2.0 * diff / m)
    np.add.at(grad_b, (rb, cb), -2.0 * diff / m)

    for i, nm in enumerate(batch.non_matches):
        n_i = nm.shape[0]
        if n_i == 0:
            continue
        tags = batch.non_match_is_bg[i]
        margins = np.where(tags, batch.margin_bg, batch.margin_fg)
        anchor = batch.e_a[ra[i], ca[i]]
        gdiff = anchor - batch.e_b[nm[:, 0], nm[:, 1]]
        sq = (gdiff * gdiff).sum(axis=1)
        active = sq < margins
        loss += float((margins[active] - sq[active]).sum()) / n_i
        coeff = -2.0 / n_i
        grad_a[ra[i], ca[i]] += coeff * gdiff[active].sum(axis=0)
        np.add.at(grad_b, (nm[active, 0], nm[active, 1]), -coeff * gdiff[active])
    return loss, grad_a, grad_b


def scaled_nonmatch_count(base_count, mask_pixels, total_pixels):
    """Scale a non-match budget by the mask's share of the image.

    Rounds half to even (Python round). Any nonempty mask keeps at least one
    non-match.
    """
    if total_pixels <= 0:
        raise ValueError("total_pixels must be positive")
    if not 0 <= mask_pixels <= total_pixels:
        raise ValueError("mask_pixels must lie in [0, total_pixels]")
    if mask_pixels == 0:
        return 0
    return max(1, round(base_count * mask_pixels / total_pixels))
