"""Benchmark functions, the piston slap dataset, metrics, and the
replication driver that ties designs, chains and selection together.

The synthetic functions are deterministic simulators with a known active
set, so selection quality can be scored exactly.  The piston slap data is a
fixed 12-run experiment; there prediction quality is assessed by
leave-one-out cross-validation (or an external test file when supplied).
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .designs import maximin_lhd, random_lhd, scale_points
from .errors import BenchmarkError, IllConditionedError, OptimizerFailedError, SamplerError
from .gp import Dataset, FitOptions, mle_fit, predict_batch
from .report import select_variables
from .sampler import Hyperparams, derive_seed, posterior_params, run_chain

UNIT = (0.0, 1.0)

BOREHOLE_RANGES = (
    (0.05, 0.15),      # r_w, borehole radius
    (100.0, 50000.0),  # r, radius of influence
    (63070.0, 115600.0),  # T_u, upper-aquifer transmissivity
    (990.0, 1100.0),   # H_u, upper-aquifer head
    (63.1, 116.0),     # T_l, lower-aquifer transmissivity
    (700.0, 820.0),    # H_l, lower-aquifer head
    (1120.0, 1680.0),  # L, borehole length
    (1500.0, 15000.0),  # K_w, borehole hydraulic conductivity
)


def _toy(x):
    # x3 enters with coefficient zero on purpose: it is the inert variable.
    return (x[0] ** 3 + 1.0) * np.cos(np.pi * x[1]) + 0.0 * x[2]


def _linear(x):
    return 2.0 * x[0] + 2.0 * x[1] + 2.0 * x[2] + 2.0 * x[3]


def _sinusoidal(x):
    return np.sin(x[0]) + np.sin(5.0 * x[1])


def _borehole(x):
    r_w, r, t_u, h_u, t_l, h_l, length, k_w = x
    log_ratio = np.log(r / r_w)
    denom = log_ratio * (
        1.0 + 2.0 * length * t_u / (log_ratio * r_w**2 * k_w) + t_u / t_l
    )
    return 2.0 * np.pi * t_u * (h_u - h_l) / denom


@dataclass(frozen=True)
class TestFunction:
    """A deterministic simulator with a known set of active inputs."""

    name: str
    dim: int
    active_set: frozenset
    ranges: tuple
    func: callable
    var_names: tuple

    def domain(self) -> np.ndarray:
        return np.asarray(self.ranges, dtype=float)


def _make(name, dim, active, ranges, func, var_names=None):
    if var_names is None:
        var_names = tuple(f"x{k + 1}" for k in range(dim))
    return TestFunction(name, dim, frozenset(active), tuple(ranges), func, var_names)


FUNCTIONS = {
    "toy": _make("toy", 3, {1, 2}, (UNIT,) * 3, _toy),
    "linear": _make("linear", 10, {1, 2, 3, 4}, (UNIT,) * 10, _linear),
    "sinusoidal": _make("sinusoidal", 10, {1, 2}, (UNIT,) * 10, _sinusoidal),
    "borehole": _make(
        "borehole", 8, {1, 8}, BOREHOLE_RANGES, _borehole,
        ("r_w", "r", "T_u", "H_u", "T_l", "H_l", "L", "K_w"),
    ),
}


def get_function(name: str) -> TestFunction:
    try:
        return FUNCTIONS[name]
    except KeyError:
        valid = ", ".join(sorted(FUNCTIONS))
        raise ValueError(f"unknown test function {name!r}; valid names: {valid}") from None


def eval_function(f: TestFunction, x) -> float:
    """Evaluate one point, given in original (unscaled) coordinates."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (f.dim,):
        raise ValueError(f"{f.name} expects {f.dim} coordinates, got {x.shape}")
    if f.name == "borehole":
        dom = f.domain()
        if np.any(x < dom[:, 0]) or np.any(x > dom[:, 1]):
            bad = int(np.argmax((x < dom[:, 0]) | (x > dom[:, 1]))) + 1
            raise ValueError(f"borehole input {f.var_names[bad - 1]} out of range")
    return float(f.func(x))


def eval_batch(f: TestFunction, xs) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    return np.array([eval_function(f, row) for row in xs])


# Piston slap noise: 12 runs, 6 inputs (clearance, peak-pressure location,
# skirt length, skirt profile, skirt ovality, pin offset), response in dB.
PISTON_RUNS = np.array(
    [
        [71.0, 16.8, 21.0, 2.0, 1.0, 0.98, 56.75],
        [15.0, 15.6, 21.8, 1.0, 2.0, 1.30, 57.65],
        [29.0, 14.4, 25.0, 2.0, 1.0, 1.14, 53.97],
        [85.0, 14.4, 21.8, 2.0, 3.0, 0.66, 58.77],
        [29.0, 12.0, 21.0, 3.0, 2.0, 0.82, 56.34],
        [57.0, 12.0, 23.4, 1.0, 3.0, 0.98, 56.85],
        [85.0, 13.2, 24.2, 3.0, 2.0, 1.30, 56.68],
        [71.0, 18.0, 25.0, 1.0, 2.0, 0.82, 58.45],
        [43.0, 18.0, 22.6, 3.0, 3.0, 1.14, 55.50],
        [15.0, 16.8, 24.2, 2.0, 3.0, 0.50, 52.77],
        [43.0, 13.2, 22.6, 1.0, 1.0, 0.50, 57.36],
        [57.0, 15.6, 23.4, 3.0, 1.0, 0.66, 59.64],
    ]
)


def piston_dataset() -> Dataset:
    """The embedded 12-run piston slap noise experiment.

    Ranges are the per-column observed min/max, so the scaled design spans
    the unit cube exactly.
    """
    x = PISTON_RUNS[:, :6]
    y = PISTON_RUNS[:, 6]
    ranges = np.column_stack([x.min(axis=0), x.max(axis=0)])
    return Dataset.from_arrays(x, y, ranges)


def rmspe(truth, pred) -> float:
    """Root mean squared prediction error."""
    truth = np.asarray(truth, dtype=float).ravel()
    pred = np.asarray(pred, dtype=float).ravel()
    if len(truth) != len(pred) or len(truth) < 1:
        raise ValueError(f"length mismatch: {len(truth)} vs {len(pred)}")
    return float(np.sqrt(np.mean((truth - pred) ** 2)))


def mar(truth, pred) -> float:
    """Median of absolute residuals (even length: mean of the middle two)."""
    truth = np.asarray(truth, dtype=float).ravel()
    pred = np.asarray(pred, dtype=float).ravel()
    if len(truth) != len(pred) or len(truth) < 1:
        raise ValueError(f"length mismatch: {len(truth)} vs {len(pred)}")
    return float(np.median(np.abs(truth - pred)))


@dataclass(frozen=True)
class ScreeningScore:
    aci: int
    ami: int
    aci_rate: float
    ami_rate: float


def screening_score(selected, f: TestFunction) -> ScreeningScore:
    """Counts of correctly identified and misspecified variables.

    aci counts selected variables that are truly active, ami counts selected
    variables that are inert; rates divide by the respective set sizes.
    """
    selected = frozenset(int(k) for k in selected)
    if not selected <= frozenset(range(1, f.dim + 1)):
        raise ValueError(f"selected indices must lie in 1..{f.dim}")
    aci = len(selected & f.active_set)
    ami = len(selected - f.active_set)
    n_inactive = f.dim - len(f.active_set)
    return ScreeningScore(
        aci,
        ami,
        aci / len(f.active_set),
        ami / n_inactive if n_inactive else 0.0,
    )


@dataclass(frozen=True)
class BenchmarkSpec:
    """One benchmark protocol: function, design, chain settings, replication.

    Hyperparameter fields left at None fall back to the data-driven defaults.
    function "piston" switches to the fixed dataset with leave-one-out
    prediction scoring; design and n are ignored there.
    """

    function: str
    design: str = "maximin-lhd"
    n: int = 30
    reps: int = 5
    iters: int = 6000
    burnin: int = 2000
    thin: int = 1
    tau: float | None = None
    c: float | None = None
    p: float | None = None
    prop_sd: float | None = None
    n_test: int = 100
    seed: int = 0
    rule: str = "modal"
    test_file: str | None = None
    notes: str = ""


def _hyper_for(spec: BenchmarkSpec, data: Dataset, seed: int) -> Hyperparams:
    deltas = np.ptp(data.points, axis=0)
    tau = spec.tau if spec.tau is not None else 1.0 / (3.0 * deltas)
    return Hyperparams.for_dim(
        data.dim,
        tau=tau,
        c=spec.c if spec.c is not None else 25.0,
        p=spec.p if spec.p is not None else 0.5,
        prop_sd=spec.prop_sd if spec.prop_sd is not None else 0.03,
        iters=spec.iters,
        burnin=spec.burnin,
        thin=spec.thin,
        seed=seed,
    )


def _fit_and_sample(data: Dataset, hyper: Hyperparams, rep_seed: int):
    # The plain-MLE comparator keeps the sharp prediction nugget; the chain
    # fits its own init so it starts at the mode of the jittered target.
    params_mle = mle_fit(data, FitOptions(seed=derive_seed(rep_seed, "mle")))
    chain = run_chain(data, hyper)
    return params_mle, chain


def _synthetic_replicate(spec: BenchmarkSpec, f: TestFunction, rep: int) -> dict:
    rep_seed = derive_seed(spec.seed, "rep", rep)
    if spec.design == "maximin-lhd":
        design = maximin_lhd(spec.n, f.dim, derive_seed(rep_seed, "design"))
    elif spec.design == "random-lhd":
        design = random_lhd(spec.n, f.dim, derive_seed(rep_seed, "design"))
    else:
        raise ValueError(f"unknown design kind {spec.design!r}")
    dom = f.domain()
    x_orig = scale_points(design.points, dom, "from_unit")
    y = eval_batch(f, x_orig)
    data = Dataset(design.points, y, dom)

    hyper = _hyper_for(spec, data, rep_seed)
    params_mle, chain = _fit_and_sample(data, hyper, rep_seed)
    sel = select_variables(chain, spec.rule)
    score = screening_score(sel.selected, f)

    rng = np.random.default_rng(derive_seed(rep_seed, "test"))
    x_test = scale_points(rng.uniform(size=(spec.n_test, f.dim)), dom, "from_unit")
    truth = eval_batch(f, x_test)
    params_post = posterior_params(chain)
    pred_ssgp = np.array([p.mean for p in predict_batch(params_post, data, x_test)])
    pred_mle = np.array([p.mean for p in predict_batch(params_mle, data, x_test)])

    return {
        "rep": rep,
        "seed": rep_seed,
        "selected": sorted(sel.selected),
        "modal_gamma": list(sel.modal_gamma),
        "modal_freq": sel.modal_freq,
        "marginal_inclusion": [float(v) for v in sel.marginal],
        "aci": score.aci,
        "ami": score.ami,
        "aci_rate": score.aci_rate,
        "ami_rate": score.ami_rate,
        "rmspe_ssgp": rmspe(truth, pred_ssgp),
        "rmspe_mle": rmspe(truth, pred_mle),
        "mar_ssgp": mar(truth, pred_ssgp),
        "mar_mle": mar(truth, pred_mle),
        "accept_rate": chain.accept_rate,
    }


def _loo_predictions(params, data: Dataset) -> np.ndarray:
    # Hyperparameters stay fixed at the full-data values; only the
    # conditioning set changes per fold.
    x_orig = data.original_points()
    preds = np.empty(data.n)
    for i in range(data.n):
        sub = data.drop_run(i)
        preds[i] = predict_batch(params, sub, x_orig[i : i + 1])[0].mean
    return preds


def _piston_replicate(spec: BenchmarkSpec, rep: int) -> dict:
    rep_seed = derive_seed(spec.seed, "rep", rep)
    data = piston_dataset()
    hyper = _hyper_for(spec, data, rep_seed)
    params_mle, chain = _fit_and_sample(data, hyper, rep_seed)
    sel = select_variables(chain, spec.rule)

    params_post = posterior_params(chain)
    loo_ssgp = _loo_predictions(params_post, data)
    loo_mle = _loo_predictions(params_mle, data)
    y = data.responses

    row = {
        "rep": rep,
        "seed": rep_seed,
        "selected": sorted(sel.selected),
        "modal_gamma": list(sel.modal_gamma),
        "modal_freq": sel.modal_freq,
        "marginal_inclusion": [float(v) for v in sel.marginal],
        "rmspe_ssgp": rmspe(y, loo_ssgp),
        "rmspe_mle": rmspe(y, loo_mle),
        "mar_ssgp": mar(y, loo_ssgp),
        "mar_mle": mar(y, loo_mle),
        "accept_rate": chain.accept_rate,
    }
    if spec.test_file is not None:
        from .io import read_data_csv

        x_test, y_test = read_data_csv(spec.test_file)
        pred = np.array([p.mean for p in predict_batch(params_post, data, x_test)])
        pred_m = np.array([p.mean for p in predict_batch(params_mle, data, x_test)])
        row["rmspe_ssgp_external"] = rmspe(y_test, pred)
        row["rmspe_mle_external"] = rmspe(y_test, pred_m)
        row["mar_ssgp_external"] = mar(y_test, pred)
        row["mar_mle_external"] = mar(y_test, pred_m)
    return row


def _one_replicate(spec: BenchmarkSpec, rep: int) -> dict:
    if spec.function == "piston":
        return _piston_replicate(spec, rep)
    return _synthetic_replicate(spec, get_function(spec.function), rep)


def _aggregate(rows: list) -> dict:
    agg = {"n_ok": len(rows)}
    if not rows:
        return agg
    for key in ("aci", "ami", "aci_rate", "ami_rate", "rmspe_ssgp", "rmspe_mle",
                "mar_ssgp", "mar_mle", "modal_freq", "accept_rate"):
        vals = [r[key] for r in rows if key in r]
        if vals:
            agg[f"mean_{key}"] = float(np.mean(vals))
    vals = [r["rmspe_ssgp"] < r["rmspe_mle"] for r in rows]
    agg["ssgp_beats_mle"] = int(np.sum(vals))
    if rows and "marginal_inclusion" in rows[0]:
        marg = np.array([r["marginal_inclusion"] for r in rows])
        agg["mean_marginal_inclusion"] = [float(v) for v in marg.mean(axis=0)]
    return agg


def run_benchmark(spec: BenchmarkSpec, workers: int = 1) -> dict:
    """Run all replicates of a benchmark and aggregate.

    Each replicate draws a fresh design and chain from seeds derived off
    spec.seed, so the whole report is reproducible.  Failed replicates are
    recorded and excluded; more than 10% failures raises BenchmarkError
    carrying the partial report.
    """
    if spec.function != "piston":
        get_function(spec.function)
        if spec.design not in ("maximin-lhd", "random-lhd"):
            raise ValueError(f"unknown design kind {spec.design!r}")
    if spec.reps < 1:
        raise ValueError("reps must be >= 1")
    rows, failures = [], []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_one_replicate, spec, rep) for rep in range(spec.reps)]
            for rep, fut in enumerate(futures):
                try:
                    rows.append(fut.result())
                except (SamplerError, IllConditionedError, OptimizerFailedError, ValueError) as exc:
                    failures.append({"rep": rep, "error": str(exc)})
    else:
        for rep in range(spec.reps):
            try:
                rows.append(_one_replicate(spec, rep))
            except (SamplerError, IllConditionedError, OptimizerFailedError, ValueError) as exc:
                failures.append({"rep": rep, "error": str(exc)})
    rows.sort(key=lambda r: r["rep"])

    report = {
        "schema_version": 1,
        "spec": {k: getattr(spec, k) for k in spec.__dataclass_fields__},
        "replicates": rows,
        "failures": failures,
        "aggregate": _aggregate(rows),
    }
    if len(failures) > 0.1 * spec.reps:
        raise BenchmarkError(
            f"{len(failures)} of {spec.reps} replicates failed (quota 10%)", report=report
        )
    return report
