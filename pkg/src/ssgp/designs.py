"""Space-filling designs: random and maximin Latin hypercubes, domain scaling.

A Latin hypercube design puts exactly one point in each of the n equal strata
of [0, 1] per dimension.  The maximin variant improves the minimum pairwise
distance of a random start by within-column swaps, which preserve the
stratification by construction.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist


@dataclass(frozen=True)
class Design:
    """A set of points in the unit hypercube plus how it was made."""

    points: np.ndarray
    kind: str = "external"
    seed: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be 2-D, got shape {pts.shape}")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_lhd(n: int, d: int, seed) -> Design:
    """Random Latin hypercube: coordinate k of point i is (perm_k(i) - u)/n.

    perm_k is a uniform random permutation of 1..n and u ~ U(0,1), so each
    column lands exactly once in each stratum [(i-1)/n, i/n).
    """
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    rng = _as_rng(seed)
    pts = np.empty((n, d))
    for k in range(d):
        perm = rng.permutation(n) + 1
        pts[:, k] = (perm - rng.uniform(size=n)) / n
    return Design(pts, kind="random-lhd", seed=seed if isinstance(seed, int) else None)


def _min_dist_and_crit(pts):
    # Criterion pair: (min pairwise distance, sum of inverse squared
    # distances).  The second breaks ties among equal-min configurations.
    d2 = pdist(pts, "sqeuclidean")
    return float(np.sqrt(d2.min())), float(np.sum(1.0 / d2))


def maximin_lhd(n: int, d: int, seed, sweeps: int | None = None) -> Design:
    """Maximin Latin hypercube via within-column pair-swap hill climbing.

    Starts from random_lhd and tries `sweeps` (default 100*n) candidate
    swaps, each exchanging two entries of one column.  A swap is kept when
    it raises the minimum pairwise distance, or leaves it unchanged while
    lowering the inverse-squared-distance sum.  Swaps always involve one of
    the two currently closest points, the pair that limits the criterion.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got n={n}")
    rng = _as_rng(seed)
    design = random_lhd(n, d, rng)
    pts = design.points.copy()
    if sweeps is None:
        sweeps = 100 * n

    best_min, best_crit = _min_dist_and_crit(pts)
    for _ in range(sweeps):
        dists = pdist(pts, "sqeuclidean")
        i, j = np.triu_indices(n, k=1)
        closest = int(np.argmin(dists))
        a = int(i[closest]) if rng.uniform() < 0.5 else int(j[closest])
        b = int(rng.integers(n - 1))
        if b >= a:
            b += 1
        k = int(rng.integers(d))
        pts[[a, b], k] = pts[[b, a], k]
        new_min, new_crit = _min_dist_and_crit(pts)
        if new_min > best_min or (new_min == best_min and new_crit < best_crit):
            best_min, best_crit = new_min, new_crit
        else:
            pts[[a, b], k] = pts[[b, a], k]
    return Design(pts, kind="maximin-lhd", seed=seed if isinstance(seed, int) else None)


def scale_points(points, ranges, direction: str = "from_unit") -> np.ndarray:
    """Affine map between the unit hypercube and the original domain.

    direction "from_unit" maps [0,1]^d onto the ranges; "to_unit" inverts it.
    Ranges are (min, max) pairs with max > min.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rng_arr = np.asarray(ranges, dtype=float)
    if rng_arr.ndim != 2 or rng_arr.shape[1] != 2:
        raise ValueError(f"ranges must be a (d, 2) array, got shape {rng_arr.shape}")
    if pts.shape[1] != rng_arr.shape[0]:
        raise ValueError(
            f"dimension mismatch: points have {pts.shape[1]} columns, ranges {rng_arr.shape[0]}"
        )
    lo, hi = rng_arr[:, 0], rng_arr[:, 1]
    width = hi - lo
    if np.any(width <= 0):
        bad = int(np.argmax(width <= 0)) + 1
        raise ValueError(f"zero-width range in dimension {bad}")
    if direction == "from_unit":
        return lo + pts * width
    if direction == "to_unit":
        return (pts - lo) / width
    raise ValueError(f"direction must be 'from_unit' or 'to_unit', got {direction!r}")
