"""Ordinary kriging: profile likelihood, maximum-likelihood fit, prediction.

The model is y(x) = mu + Z(x) with Z a zero-mean stationary Gaussian process
whose correlation is the Gaussian kernel of linalg.gaussian_corr.  Given the
correlation parameters theta, the mean and variance have closed-form
maximizers (profile MLEs); theta itself is found by derivative-free search
on the log scale.
"""

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize

from . import linalg
from .designs import random_lhd, scale_points
from .errors import IllConditionedError, OptimizerFailedError

# Box bounds for the likelihood search, on the log-theta scale.
LOG_THETA_LO = np.log(1e-4)
LOG_THETA_HI = np.log(1e4)

# Floor applied to the profiled variance before taking its log; keeps the
# objective finite when the response is (numerically) constant.
SIGMA2_FLOOR = 1e-300


@dataclass(frozen=True)
class Dataset:
    """Training data scaled to the unit hypercube.

    Attributes
    ----------
    points : ndarray, shape (n, d)
        Design points after scaling to [0, 1]^d.
    responses : ndarray, shape (n,)
        Observed outputs, in original units.
    ranges : ndarray, shape (d, 2)
        Per-dimension (min, max) of the original domain, so original-scale
        coordinates can be recovered or accepted at prediction time.
    """

    points: np.ndarray
    responses: np.ndarray
    ranges: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        y = np.asarray(self.responses, dtype=float).ravel()
        rng_arr = np.asarray(self.ranges, dtype=float)
        if pts.shape[0] != y.shape[0]:
            raise ValueError(
                f"{pts.shape[0]} design points but {y.shape[0]} responses"
            )
        if rng_arr.shape != (pts.shape[1], 2):
            raise ValueError(
                f"ranges must have shape ({pts.shape[1]}, 2), got {rng_arr.shape}"
            )
        if not (np.isfinite(pts).all() and np.isfinite(y).all() and np.isfinite(rng_arr).all()):
            raise ValueError("non-finite value in dataset")
        if np.any(rng_arr[:, 1] <= rng_arr[:, 0]):
            bad = int(np.argmax(rng_arr[:, 1] <= rng_arr[:, 0])) + 1
            raise ValueError(f"range max must exceed min in dimension {bad}")
        # An interpolating GP cannot represent two different outputs at one
        # point, so reject that outright.
        uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
        if len(uniq) < len(pts):
            for g in range(len(uniq)):
                ys = y[inverse == g]
                if len(ys) > 1 and np.ptp(ys) > 0:
                    raise ValueError(
                        "duplicate design points with differing responses"
                    )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "ranges", rng_arr)

    @classmethod
    def from_arrays(cls, points, responses, ranges=None) -> "Dataset":
        """Build a Dataset from original-scale points.

        When `ranges` is omitted the points are taken to live on the unit
        hypercube already and the ranges default to (0, 1) per dimension.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if ranges is None:
            ranges = np.tile([0.0, 1.0], (pts.shape[1], 1))
            scaled = pts
        else:
            ranges = np.asarray(ranges, dtype=float)
            scaled = scale_points(pts, ranges, "to_unit")
        return cls(scaled, responses, ranges)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.points.tobytes())
        h.update(self.responses.tobytes())
        h.update(self.ranges.tobytes())
        return h.hexdigest()

    def original_points(self) -> np.ndarray:
        return scale_points(self.points, self.ranges, "from_unit")

    def drop_run(self, i: int) -> "Dataset":
        """Dataset with run i removed (for leave-one-out loops). Ranges kept."""
        keep = np.arange(self.n) != i
        return Dataset(self.points[keep], self.responses[keep], self.ranges)


@dataclass(frozen=True)
class GpParams:
    """Kriging parameters; theta is derived from phi as theta_k = phi_k^2."""

    mu: float
    sigma2: float
    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float).ravel()
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not np.isfinite(phi).all():
            raise ValueError("non-finite phi")
        object.__setattr__(self, "phi", phi)

    @property
    def theta(self) -> np.ndarray:
        return self.phi**2


@dataclass(frozen=True)
class Prediction:
    mean: float
    mse: float
    clamped: bool = False


@dataclass(frozen=True)
class FitOptions:
    n_starts: int = 10
    max_iter: int = 500
    fatol: float = 1e-8
    nugget: float = linalg.DEFAULT_NUGGET
    seed: int = 0


def profile_mu(chol, y) -> float:
    """GLS mean (1' R^-1 1)^-1 (1' R^-1 y) for R = chol chol'."""
    y = np.asarray(y, dtype=float)
    ones = np.ones_like(y)
    rinv_y = linalg.solve_with_chol(chol, y)
    rinv_1 = linalg.solve_with_chol(chol, ones)
    return float(ones @ rinv_y) / float(ones @ rinv_1)


def profile_sigma2(chol, y, mu: float) -> float:
    """(1/n) (y - 1 mu)' R^-1 (y - 1 mu); non-negative by construction."""
    y = np.asarray(y, dtype=float)
    resid = y - mu
    # Triangular solve of L v = resid gives the quadratic form as |v|^2.
    v = solve_triangular(np.asarray(chol), resid, lower=True)
    return float(v @ v) / len(y)


def neg_log_profile_likelihood(theta, data: Dataset, nugget=linalg.DEFAULT_NUGGET, sqdiffs=None) -> float:
    """(1/2)[n log sigma2_hat(theta) + log det R(theta)], up to a constant.

    Raises IllConditionedError when R(theta) cannot be factored even at the
    maximum nugget.
    """
    theta = np.asarray(theta, dtype=float)
    chol, _ = linalg.corr_cholesky(data.points, theta, nugget, sqdiffs=sqdiffs)
    mu = profile_mu(chol, data.responses)
    s2 = max(profile_sigma2(chol, data.responses, mu), SIGMA2_FLOOR)
    return 0.5 * (data.n * np.log(s2) + linalg.log_det_from_chol(chol))


def mle_fit(data: Dataset, opts: FitOptions | None = None) -> GpParams:
    """Maximum-likelihood kriging fit by multi-start Nelder-Mead on log theta.

    Starts come from a random Latin hypercube over the log-theta box; the
    best final objective wins.  phi is the positive square root of the
    fitted theta.
    """
    if opts is None:
        opts = FitOptions()
    if data.n < 2:
        raise ValueError(f"need at least 2 runs to fit, got {data.n}")
    d = data.dim
    sqd = linalg.pairwise_sqdiffs(data.points)

    def objective(logtheta):
        try:
            return neg_log_profile_likelihood(
                np.exp(logtheta), data, nugget=opts.nugget, sqdiffs=sqd
            )
        except IllConditionedError:
            return np.inf

    rng = np.random.default_rng(opts.seed)
    starts = LOG_THETA_LO + random_lhd(opts.n_starts, d, rng).points * (
        LOG_THETA_HI - LOG_THETA_LO
    )
    bounds = [(LOG_THETA_LO, LOG_THETA_HI)] * d
    best_val, best_x = np.inf, None
    for x0 in starts:
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"fatol": opts.fatol, "maxiter": opts.max_iter, "xatol": 1e-6},
        )
        if np.isfinite(res.fun) and res.fun < best_val:
            best_val, best_x = res.fun, res.x
    if best_x is None:
        raise OptimizerFailedError("all likelihood-optimization starts failed")

    theta_hat = np.exp(best_x)
    chol, _ = linalg.corr_cholesky(data.points, theta_hat, opts.nugget, sqdiffs=sqd)
    mu_hat = profile_mu(chol, data.responses)
    s2_hat = max(profile_sigma2(chol, data.responses, mu_hat), SIGMA2_FLOOR)
    return GpParams(mu=mu_hat, sigma2=s2_hat, phi=np.sqrt(theta_hat))


def _cross_corr(train_pts, test_pts, theta) -> np.ndarray:
    diff = train_pts[:, None, :] - test_pts[None, :, :]
    return np.exp(-np.tensordot(diff * diff, theta, axes=([2], [0])))


def predict_batch(params: GpParams, data: Dataset, xstars, nugget=linalg.DEFAULT_NUGGET):
    """Kriging predictions at original-scale test points.

    Returns a list of Prediction.  The mean is mu + r' R^-1 (y - 1 mu); the
    mean squared error includes the mean-estimation correction term
    (1 - 1' R^-1 r)^2 / (1' R^-1 1).  Negative MSEs from round-off are
    clamped to zero and flagged.
    """
    xs = np.atleast_2d(np.asarray(xstars, dtype=float))
    if xs.shape[1] != data.dim:
        raise ValueError(
            f"test points have {xs.shape[1]} columns, expected {data.dim}"
        )
    xs_unit = scale_points(xs, data.ranges, "to_unit")
    theta = params.theta
    chol, _ = linalg.corr_cholesky(data.points, theta, nugget)
    y = data.responses
    ones = np.ones(data.n)
    rinv_resid = linalg.solve_with_chol(chol, y - params.mu)
    rinv_1 = linalg.solve_with_chol(chol, ones)
    one_rinv_one = float(ones @ rinv_1)

    r = _cross_corr(data.points, xs_unit, theta)
    rinv_r = linalg.solve_with_chol(chol, r)
    means = params.mu + r.T @ rinv_resid
    corr_term = (1.0 - ones @ rinv_r) ** 2 / one_rinv_one
    mses = params.sigma2 * (1.0 - np.einsum("ij,ij->j", r, rinv_r) + corr_term)
    out = []
    for m, s in zip(means, mses):
        clamped = s < 0
        out.append(Prediction(float(m), max(float(s), 0.0), bool(clamped)))
    return out


def predict(params: GpParams, data: Dataset, xstar, nugget=linalg.DEFAULT_NUGGET) -> Prediction:
    """Single-point convenience wrapper around predict_batch."""
    return predict_batch(params, data, np.atleast_2d(xstar), nugget=nugget)[0]
