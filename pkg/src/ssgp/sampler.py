"""Metropolis-within-Gibbs sampler for kriging with variable selection.

Correlation parameters enter through theta_k = phi_k^2 with phi unconstrained.
Each phi_k gets a two-component normal-mixture prior: a narrow N(0, tau_k^2)
"spike" when the latent indicator gamma_k is 0 and a wide N(0, (c_k tau_k)^2)
"slab" when gamma_k is 1, so the posterior over gamma ranks variables by how
much the data push phi_k away from zero.  mu carries a flat prior and sigma2
the scale-invariant 1/sigma2 prior, so both have closed-form conditionals;
phi is updated by a single-block random-walk Metropolis step and gamma by
componentwise Bernoulli draws.
"""

import hashlib
import warnings
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import linalg
from .errors import IllConditionedError, OptimizerFailedError, SamplerError
from .gp import Dataset, FitOptions, GpParams, mle_fit

# Jitter used for every correlation factorization inside the sampler.  It must
# be fixed (a state-dependent escalation would change the MH target mid-chain)
# and it is deliberately coarser than the linalg default: deterministic
# responses drive the exact-interpolation likelihood onto a numerically
# singular ridge where phi summaries and selection frequencies are artifacts
# of floating-point conditioning.  Flooring the correlation spectrum at 1e-5
# keeps the target well defined; prediction paths keep the sharp default.
SAMPLER_NUGGET = 1e-5


@dataclass(frozen=True)
class Hyperparams:
    """Prior and run settings for one chain.

    tau, c, p and prop_sd are per-dimension vectors; scalars broadcast.
    tau_k is the spike scale, c_k the slab multiplier (c_k >> 1 expected),
    p_k the prior inclusion probability P(gamma_k = 1), and prop_sd the
    per-coordinate standard deviation of the random-walk proposal.
    """

    tau: np.ndarray
    c: np.ndarray = field(default_factory=lambda: np.array(25.0))
    p: np.ndarray = field(default_factory=lambda: np.array(0.5))
    prop_sd: np.ndarray = field(default_factory=lambda: np.array(0.03))
    iters: int = 6000
    burnin: int = 2000
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        vecs = {}
        d = 1
        for name in ("tau", "c", "p", "prop_sd"):
            v = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if v.ndim != 1:
                raise ValueError(f"{name} must be a scalar or 1-D vector")
            vecs[name] = v
            d = max(d, v.size)
        for name, v in vecs.items():
            if v.size == 1:
                v = np.full(d, v[0])
            elif v.size != d:
                raise ValueError(f"{name} has length {v.size}, expected {d}")
            object.__setattr__(self, name, v)
        if np.any(self.tau <= 0):
            raise ValueError("tau entries must be positive")
        if np.any(self.prop_sd <= 0):
            raise ValueError("prop_sd entries must be positive")
        if np.any(self.c <= 1):
            raise ValueError("c entries must exceed 1")
        if np.any(self.c <= 2):
            warnings.warn("slab multiplier c <= 2 barely separates the mixture components", RuntimeWarning, stacklevel=3)
        if np.any(self.p <= 0) or np.any(self.p > 1):
            raise ValueError("p entries must lie in (0, 1]")
        if self.iters < 1:
            raise ValueError("iters must be positive")
        if not 0 <= self.burnin < self.iters:
            raise ValueError(f"burnin must lie in [0, iters), got {self.burnin} with iters {self.iters}")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")

    @property
    def dim(self) -> int:
        return len(self.tau)

    @classmethod
    def for_dim(cls, d: int, tau=0.3, c=25.0, p=0.5, prop_sd=0.03, iters=6000, burnin=2000, thin=1, seed=0) -> "Hyperparams":
        """Hyperparams with scalars broadcast to dimension d."""
        expand = lambda v: np.full(d, v, dtype=float) if np.ndim(v) == 0 else np.asarray(v, dtype=float)
        return cls(expand(tau), expand(c), expand(p), expand(prop_sd), iters, burnin, thin, seed)


def default_hyperparams(data: Dataset, seed: int = 0) -> Hyperparams:
    """Data-driven defaults: tau_k = 1/(3 dx_k) with dx_k the observed range
    of scaled coordinate k (about 1/3, the conventional 0.3, when the data
    span the unit cube), c = 25, p = 1/2, prop_sd = 0.03, 6000 scans with
    2000 burn-in.
    """
    deltas = np.ptp(data.points, axis=0)
    if np.any(deltas <= 0):
        bad = int(np.argmax(deltas <= 0)) + 1
        raise ValueError(f"dimension {bad} has zero observed range")
    return Hyperparams.for_dim(data.dim, tau=1.0 / (3.0 * deltas), seed=seed)


@dataclass
class SamplerState:
    """Mutable state of one chain: current draws plus the owned generator."""

    mu: float
    sigma2: float
    phi: np.ndarray
    gamma: np.ndarray
    rng: np.random.Generator


@dataclass(frozen=True)
class Chain:
    """Stored post-burn-in draws, columnar, plus acceptance bookkeeping."""

    mu: np.ndarray
    sigma2: np.ndarray
    phi: np.ndarray
    gamma: np.ndarray
    scans: np.ndarray
    accept_rate: float
    meta: dict

    @property
    def size(self) -> int:
        return len(self.mu)

    @property
    def dim(self) -> int:
        return self.phi.shape[1]


def _normal_logpdf(x, var):
    return -0.5 * (np.log(2.0 * np.pi * var) + x * x / var)


def _quad_form(chol, resid) -> float:
    # resid' R^-1 resid via one triangular solve; non-negative by construction.
    v = solve_triangular(np.asarray(chol), resid, lower=True)
    return float(v @ v)


def _kernel_value(chol, phi, mu, sigma2, gamma, data, hyper) -> float:
    logdet = linalg.log_det_from_chol(chol)
    quad = _quad_form(chol, data.responses - mu)
    prior_var = (hyper.tau * np.power(hyper.c, gamma)) ** 2
    prior = float(np.sum(_normal_logpdf(phi, prior_var)))
    return -0.5 * logdet - quad / (2.0 * sigma2) + prior


def phi_log_kernel(phi, mu, sigma2, gamma, data: Dataset, hyper: Hyperparams, sqdiffs=None) -> float:
    """Log full-conditional kernel of phi, up to an additive constant.

    log g(phi) = -1/2 log det R(phi) - (y-mu)'R^-1(y-mu)/(2 sigma2)
                 - 1/2 sum_k phi_k^2 / (tau_k c_k^{gamma_k})^2  (+ const).
    Even in phi: flipping all signs leaves the value unchanged.
    """
    phi = np.asarray(phi, dtype=float)
    chol, _ = linalg.corr_cholesky(data.points, phi * phi, nugget=SAMPLER_NUGGET, sqdiffs=sqdiffs)
    return _kernel_value(chol, phi, mu, sigma2, gamma, data, hyper)


def update_mu(state: SamplerState, data: Dataset, chol=None) -> float:
    """Draw mu from N(GLS mean, sigma2 / (1' R^-1 1))."""
    if chol is None:
        chol, _ = linalg.corr_cholesky(data.points, state.phi**2, nugget=SAMPLER_NUGGET)
    y = data.responses
    ones = np.ones_like(y)
    rinv_y = linalg.solve_with_chol(chol, y)
    rinv_1 = linalg.solve_with_chol(chol, ones)
    denom = float(ones @ rinv_1)
    mean = float(ones @ rinv_y) / denom
    return float(state.rng.normal(mean, np.sqrt(state.sigma2 / denom)))


def update_sigma2(state: SamplerState, data: Dataset, chol=None) -> float:
    """Draw sigma2 from InverseGamma(n/2, (y-mu)'R^-1(y-mu)/2).

    Sampled as the reciprocal of a Gamma(n/2, rate=quad/2) draw.
    """
    if chol is None:
        chol, _ = linalg.corr_cholesky(data.points, state.phi**2, nugget=SAMPLER_NUGGET)
    quad = _quad_form(chol, data.responses - state.mu)
    if quad <= 0:
        raise ValueError("non-positive quadratic form in sigma2 update (degenerate residual)")
    return float(1.0 / state.rng.gamma(data.n / 2.0, 2.0 / quad))


PhiUpdate = namedtuple("PhiUpdate", ["phi", "accepted", "chol", "proposal_failed"])


def _rw_propose(rng, phi, prop_sd):
    # Proposal first, acceptance uniform second: the stream stays aligned
    # whether or not the kernel evaluation below fails.
    prop = phi + rng.normal(size=phi.shape) * prop_sd
    log_u = float(np.log(rng.uniform()))
    return prop, log_u


def update_phi(state: SamplerState, data: Dataset, hyper: Hyperparams, chol=None, sqdiffs=None, log_kernel=None) -> PhiUpdate:
    """One block random-walk Metropolis step on phi.

    Proposes phi~ ~ N(phi, diag(prop_sd^2)) and accepts with probability
    min(1, g(phi~)/g(phi)).  A proposal whose correlation matrix cannot be
    factored is rejected and flagged instead of aborting the chain.
    `log_kernel` substitutes a synthetic target for g (testing hook).
    """
    rng = state.rng
    phi = state.phi
    if log_kernel is not None:
        logp_cur = log_kernel(phi)
        prop, log_u = _rw_propose(rng, phi, hyper.prop_sd)
        accepted = bool(log_u < log_kernel(prop) - logp_cur)
        return PhiUpdate(prop if accepted else phi, accepted, chol, False)

    if chol is None:
        chol, _ = linalg.corr_cholesky(data.points, phi**2, nugget=SAMPLER_NUGGET, sqdiffs=sqdiffs)
    logp_cur = _kernel_value(chol, phi, state.mu, state.sigma2, state.gamma, data, hyper)
    prop, log_u = _rw_propose(rng, phi, hyper.prop_sd)
    try:
        prop_chol, _ = linalg.corr_cholesky(data.points, prop**2, nugget=SAMPLER_NUGGET, sqdiffs=sqdiffs)
    except IllConditionedError:
        return PhiUpdate(phi, False, chol, True)
    logp_prop = _kernel_value(prop_chol, prop, state.mu, state.sigma2, state.gamma, data, hyper)
    if log_u < logp_prop - logp_cur:
        return PhiUpdate(prop, True, prop_chol, False)
    return PhiUpdate(phi, False, chol, False)


def inclusion_probabilities(phi, hyper: Hyperparams) -> np.ndarray:
    """P(gamma_k = 1 | phi_k) = a / (a + b) with a the slab density times p_k
    and b the spike density times 1 - p_k, evaluated through log densities.
    """
    phi = np.asarray(phi, dtype=float)
    log_a = _normal_logpdf(phi, (hyper.c * hyper.tau) ** 2) + np.log(hyper.p)
    with np.errstate(divide="ignore"):
        log_b = _normal_logpdf(phi, hyper.tau**2) + np.log1p(-hyper.p)
    return np.exp(log_a - np.logaddexp(log_a, log_b))


def update_gamma(state: SamplerState, hyper: Hyperparams) -> np.ndarray:
    """Componentwise Bernoulli draws of gamma given phi."""
    probs = inclusion_probabilities(state.phi, hyper)
    return (state.rng.uniform(size=len(probs)) < probs).astype(np.int64)


def _float_list(v):
    return [float(x) for x in np.asarray(v).ravel()]


def derive_seed(master: int, *path) -> int:
    """Child seed for a labelled sub-stream of a master seed.

    The path labels are hashed into a spawn key, so distinct labels give
    independent streams and the same labels always reproduce the same child.
    """
    digest = hashlib.sha256("/".join(str(p) for p in path).encode("utf-8")).digest()
    key = tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))
    ss = np.random.SeedSequence(master, spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0])


def run_chain(data: Dataset, hyper: Hyperparams | None = None, init: GpParams | None = None) -> Chain:
    """Run the full Metropolis-within-Gibbs sampler.

    Initializes at the kriging MLEs (phi_k = +sqrt(theta_hat_k), gamma all
    ones) unless `init` is supplied, then iterates mu -> sigma2 -> phi ->
    gamma for `iters` scans, storing draws after `burnin`.  Deterministic
    given (data, hyper): the chain owns a generator seeded by hyper.seed.
    """
    if hyper is None:
        hyper = default_hyperparams(data)
    d = data.dim
    if hyper.dim != d:
        raise ValueError(f"hyperparameters are for dimension {hyper.dim}, data has {d}")
    sqd = linalg.pairwise_sqdiffs(data.points)

    try:
        if init is not None:
            params = init
        else:
            # Fit the init at the sampler's own jitter so the chain starts
            # near the mode of the distribution it actually targets.
            opts = FitOptions(nugget=SAMPLER_NUGGET, seed=derive_seed(hyper.seed, "mle-init"))
            params = mle_fit(data, opts)
    except (OptimizerFailedError, IllConditionedError) as exc:
        raise SamplerError(0, f"initialization failed: {exc}") from exc
    # The profile likelihood can be flat in a decorrelation direction (small
    # designs), letting the MLE wander arbitrarily far up theta_k with no
    # density left under the prior; a random walk cannot recover from there
    # in any realistic number of scans.  Start within one slab sd instead.
    phi0 = np.minimum(np.abs(params.phi), hyper.c * hyper.tau)
    state = SamplerState(
        mu=params.mu,
        sigma2=params.sigma2,
        phi=phi0,
        gamma=np.ones(d, dtype=np.int64),
        rng=np.random.default_rng(hyper.seed),
    )
    try:
        chol, _ = linalg.corr_cholesky(data.points, state.phi**2, nugget=SAMPLER_NUGGET, sqdiffs=sqd)
    except IllConditionedError as exc:
        raise SamplerError(0, f"initial correlation matrix: {exc}") from exc

    n_keep = len(range(hyper.burnin + 1, hyper.iters + 1, hyper.thin))
    mu_draws = np.empty(n_keep)
    sigma2_draws = np.empty(n_keep)
    phi_draws = np.empty((n_keep, d))
    gamma_draws = np.empty((n_keep, d), dtype=np.int64)
    scans = np.empty(n_keep, dtype=np.int64)

    accepted = 0
    failures = 0
    kept = 0
    for scan in range(1, hyper.iters + 1):
        try:
            state.mu = update_mu(state, data, chol=chol)
            state.sigma2 = update_sigma2(state, data, chol=chol)
            step = update_phi(state, data, hyper, chol=chol, sqdiffs=sqd)
            state.phi = step.phi
            chol = step.chol
            accepted += step.accepted
            failures += step.proposal_failed
            state.gamma = update_gamma(state, hyper)
        except (IllConditionedError, ValueError) as exc:
            raise SamplerError(scan, str(exc)) from exc
        if scan > hyper.burnin and (scan - hyper.burnin - 1) % hyper.thin == 0:
            mu_draws[kept] = state.mu
            sigma2_draws[kept] = state.sigma2
            phi_draws[kept] = state.phi
            gamma_draws[kept] = state.gamma
            scans[kept] = scan
            kept += 1

    rate = accepted / hyper.iters
    if not 0.1 <= rate <= 0.6:
        warnings.warn(
            f"MH acceptance rate {rate:.3f} outside [0.1, 0.6]; consider retuning prop_sd",
            RuntimeWarning,
            stacklevel=2,
        )
    meta = {
        "hyperparams": {
            "tau": _float_list(hyper.tau),
            "c": _float_list(hyper.c),
            "p": _float_list(hyper.p),
            "prop_sd": _float_list(hyper.prop_sd),
            "iters": hyper.iters,
            "burnin": hyper.burnin,
            "thin": hyper.thin,
        },
        "seed": hyper.seed,
        "sampler_nugget": SAMPLER_NUGGET,
        "dataset_fingerprint": data.fingerprint(),
        "init": {"mu": params.mu, "sigma2": params.sigma2, "phi": _float_list(phi0)},
        "mh_proposal_failures": failures,
    }
    return Chain(mu_draws, sigma2_draws, phi_draws, gamma_draws, scans, rate, meta)


def posterior_params(chain: Chain) -> GpParams:
    """Posterior means of mu, sigma2 and phi as a plug-in parameter set."""
    if chain.size == 0:
        raise ValueError("empty chain")
    return GpParams(
        mu=float(chain.mu.mean()),
        sigma2=float(chain.sigma2.mean()),
        phi=chain.phi.mean(axis=0),
    )
