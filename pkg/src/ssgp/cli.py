"""Command-line interface.

Subcommands: fit (maximum-likelihood kriging), select (posterior sampling
and variable selection), predict (kriging predictions from a saved model or
chain), benchmark (replicated experiments from a spec file) and design
(Latin hypercube generation).

Exit codes: 0 success, 2 invalid input or flags, 3 fit failure, 4 sampler
failure, 5 benchmark failure quota exceeded.
"""

import argparse
import sys
import time
from dataclasses import fields as dataclass_fields

import numpy as np

from . import io
from .designs import maximin_lhd, random_lhd
from .errors import (
    BenchmarkError,
    IllConditionedError,
    OptimizerFailedError,
    SamplerError,
)
from .gp import Dataset, FitOptions, mle_fit, predict_batch
from .report import decide_selection, export_trace, marginal_inclusion, tabulate_gamma
from .sampler import Hyperparams, posterior_params, run_chain
from .testbed import BenchmarkSpec, rmspe, mar, run_benchmark

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FIT = 3
EXIT_SAMPLER = 4
EXIT_BENCHMARK = 5


def _fail(code, message):
    print(f"error: {message}", file=sys.stderr)
    return code


def _add_data_flags(sub):
    sub.add_argument("--data", help="combined CSV (x1,...,xd,y)")
    sub.add_argument("--design", help="design CSV (x1,...,xd)")
    sub.add_argument("--response", help="response CSV (single column y)")
    sub.add_argument(
        "--ranges",
        help="per-dimension domain as lo:hi,lo:hi,... (default: unit cube)",
    )
    sub.add_argument(
        "--observed-ranges",
        action="store_true",
        help="take the domain from the per-column min/max of the data",
    )


def _parse_ranges(text, d):
    parts = text.split(",")
    if len(parts) != d:
        raise ValueError(f"--ranges has {len(parts)} entries, data has {d} columns")
    out = []
    for k, part in enumerate(parts, start=1):
        try:
            lo, hi = part.split(":")
            out.append((float(lo), float(hi)))
        except ValueError:
            raise ValueError(f"--ranges entry {k} must look like lo:hi, got {part!r}") from None
    return np.asarray(out)


def _load_dataset(args) -> Dataset:
    if args.data and (args.design or args.response):
        raise ValueError("pass either --data or --design/--response, not both")
    if args.data:
        x, y = io.read_data_csv(args.data)
    elif args.design and args.response:
        x = io.read_design_csv(args.design)
        y = io.read_response_csv(args.response)
        if len(y) != len(x):
            raise ValueError(
                f"{len(x)} design rows but {len(y)} responses"
            )
    else:
        raise ValueError("pass --data, or --design together with --response")

    if args.ranges and args.observed_ranges:
        raise ValueError("pass either --ranges or --observed-ranges, not both")
    if args.ranges:
        ranges = _parse_ranges(args.ranges, x.shape[1])
    elif args.observed_ranges:
        ranges = np.column_stack([x.min(axis=0), x.max(axis=0)])
        if np.any(ranges[:, 1] <= ranges[:, 0]):
            bad = int(np.argmax(ranges[:, 1] <= ranges[:, 0])) + 1
            raise ValueError(f"column x{bad} is constant; cannot infer its range")
    else:
        if np.any(x < 0) or np.any(x > 1):
            raise ValueError(
                "data outside [0,1]; pass --ranges lo:hi,... or --observed-ranges"
            )
        ranges = None
    return Dataset.from_arrays(x, y, ranges)


def _cmd_fit(args) -> int:
    try:
        data = _load_dataset(args)
    except (OSError, ValueError) as exc:
        return _fail(EXIT_INPUT, exc)
    try:
        params = mle_fit(data, FitOptions(seed=args.seed))
    except (OptimizerFailedError, IllConditionedError, ValueError) as exc:
        return _fail(EXIT_FIT, exc)
    io.save_model(args.out, params, data, extra={"seed": args.seed})
    print(f"fitted {data.n} runs in {data.dim} dimensions")
    print(f"mu {params.mu:.6g}  sigma2 {params.sigma2:.6g}")
    print("theta " + " ".join(f"{t:.6g}" for t in params.theta))
    if params.sigma2 < 1e-12:
        print("warning: sigma2 is numerically zero (constant response?)", file=sys.stderr)
    print(f"wrote {args.out}")
    return EXIT_OK


def _hyper_from_args(args, data: Dataset) -> Hyperparams:
    deltas = np.ptp(data.points, axis=0)
    if np.any(deltas <= 0):
        bad = int(np.argmax(deltas <= 0)) + 1
        raise ValueError(f"dimension {bad} has zero observed range")
    tau = args.tau if args.tau is not None else 1.0 / (3.0 * deltas)
    return Hyperparams.for_dim(
        data.dim,
        tau=tau,
        c=args.c,
        p=args.p,
        prop_sd=args.prop_sd,
        iters=args.iters,
        burnin=args.burnin,
        thin=args.thin,
        seed=args.seed,
    )


def _print_selection(table, report, var_names):
    print("gamma".ljust(4 + 3 * len(report.modal_gamma)) + "freq")
    for vec, freq in table.rows[:5]:
        label = "(" + ",".join(str(g) for g in vec) + ")"
        print(label.ljust(4 + 3 * len(vec)) + f"{freq:.4f}")
    names = [var_names[k - 1] for k in sorted(report.selected)]
    print(f"selected ({report.rule} rule): " + (", ".join(names) if names else "none"))
    print(
        "marginal inclusion: "
        + "  ".join(f"{n} {v:.3f}" for n, v in zip(var_names, report.marginal))
    )
    if report.tie:
        print("note: modal frequency tie broken lexicographically")


def _cmd_select(args) -> int:
    try:
        data = _load_dataset(args)
        hyper = _hyper_from_args(args, data)
    except (OSError, ValueError) as exc:
        return _fail(EXIT_INPUT, exc)
    try:
        chain = run_chain(data, hyper)
    except SamplerError as exc:
        return _fail(EXIT_SAMPLER, exc)
    table = tabulate_gamma(chain)
    marginals = marginal_inclusion(chain)
    report = decide_selection(table, marginals, args.rule)
    io.save_chain(args.chain, chain, data)
    io.save_selection(
        args.report,
        report,
        table,
        extra={"accept_rate": chain.accept_rate, "seed": args.seed},
    )
    export_trace(chain, args.trace)
    var_names = [f"x{k + 1}" for k in range(data.dim)]
    _print_selection(table, report, var_names)
    print(f"acceptance rate {chain.accept_rate:.3f}")
    print(f"wrote {args.chain}, {args.report}, {args.trace}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    if bool(args.model) == bool(args.chain):
        return _fail(EXIT_INPUT, "pass exactly one of --model or --chain")
    try:
        if args.model:
            params, data = io.load_model(args.model)
        else:
            chain, data = io.load_chain(args.chain)
            params = posterior_params(chain)
        header = io.peek_header(args.test)
        if header and header[-1] == "y":
            x_test, truth = io.read_data_csv(args.test)
        else:
            x_test, truth = io.read_design_csv(args.test), None
        if x_test.shape[1] != data.dim:
            raise ValueError(
                f"test points have {x_test.shape[1]} columns, model expects {data.dim}"
            )
    except (OSError, ValueError, KeyError) as exc:
        return _fail(EXIT_INPUT, exc)
    preds = predict_batch(params, data, x_test)
    means = [p.mean for p in preds]
    mses = [p.mse for p in preds]
    io.write_predictions_csv(args.out, means, mses)
    print(f"wrote {len(means)} predictions to {args.out}")
    if truth is not None:
        print(f"rmspe {rmspe(truth, means):.6g}")
        print(f"mar {mar(truth, means):.6g}")
    return EXIT_OK


def _spec_from_file(path) -> BenchmarkSpec:
    doc = io.load_json(path)
    known = {f.name for f in dataclass_fields(BenchmarkSpec)}
    unknown = sorted(set(doc) - known - {"schema_version"})
    if unknown:
        raise ValueError(f"unknown benchmark spec fields: {', '.join(unknown)}")
    doc = {k: v for k, v in doc.items() if k in known}
    if "function" not in doc:
        raise ValueError("benchmark spec needs a 'function' field")
    return BenchmarkSpec(**doc)


def _cmd_benchmark(args) -> int:
    try:
        spec = _spec_from_file(args.spec)
    except (OSError, ValueError, TypeError) as exc:
        return _fail(EXIT_INPUT, exc)
    started = time.perf_counter()
    try:
        report = run_benchmark(spec, workers=args.workers)
    except BenchmarkError as exc:
        if exc.report is not None:
            io.save_json(args.out, exc.report)
        return _fail(EXIT_BENCHMARK, exc)
    except ValueError as exc:
        return _fail(EXIT_INPUT, exc)
    io.save_json(args.out, report)
    _render_benchmark(report)
    print(f"elapsed {time.perf_counter() - started:.1f}s")
    print(f"wrote {args.out}")
    return EXIT_OK


def _render_benchmark(report) -> None:
    rows = report["replicates"]
    has_screen = bool(rows) and "aci" in rows[0]
    cols = ["rep", "selected", "modal_freq"]
    if has_screen:
        cols += ["aci", "ami"]
    cols += ["rmspe_ssgp", "rmspe_mle", "mar_ssgp", "mar_mle"]
    widths = {c: max(len(c), 10) for c in cols}
    widths["rep"] = 3
    widths["selected"] = 14
    print("  ".join(c.rjust(widths[c]) for c in cols))
    for r in rows:
        cells = []
        for c in cols:
            if c == "selected":
                v = ",".join(str(k) for k in r["selected"]) or "-"
                cells.append(v.rjust(widths[c]))
            elif c in ("rep", "aci", "ami"):
                cells.append(str(r[c]).rjust(widths[c]))
            else:
                cells.append(f"{r[c]:.4f}".rjust(widths[c]))
        print("  ".join(cells))
    agg = report["aggregate"]
    summary = []
    for key in ("mean_aci", "mean_ami", "mean_rmspe_ssgp", "mean_rmspe_mle",
                "mean_mar_ssgp", "mean_mar_mle"):
        if key in agg:
            summary.append(f"{key} {agg[key]:.4f}")
    summary.append(f"ssgp_beats_mle {agg.get('ssgp_beats_mle', 0)}/{agg.get('n_ok', 0)}")
    print("; ".join(summary))
    if report["failures"]:
        print(f"failed replicates: {len(report['failures'])}", file=sys.stderr)


def _cmd_design(args) -> int:
    try:
        if args.kind == "maximin-lhd":
            design = maximin_lhd(args.n, args.d, args.seed, args.sweeps)
        elif args.kind == "random-lhd":
            design = random_lhd(args.n, args.d, args.seed)
        else:
            raise ValueError(f"unknown design kind {args.kind!r}")
    except ValueError as exc:
        return _fail(EXIT_INPUT, exc)
    io.write_design_csv(args.out, design.points)
    print(f"wrote {args.n}x{args.d} {args.kind} design to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssgp",
        description="Gaussian-process surrogates with Bayesian variable selection",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_fit = subs.add_parser("fit", help="maximum-likelihood kriging fit")
    _add_data_flags(p_fit)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--out", default="model.json")
    p_fit.set_defaults(func=_cmd_fit)

    p_sel = subs.add_parser("select", help="posterior sampling and variable selection")
    _add_data_flags(p_sel)
    p_sel.add_argument("--iters", type=int, default=6000)
    p_sel.add_argument("--burnin", type=int, default=2000)
    p_sel.add_argument("--thin", type=int, default=1)
    p_sel.add_argument("--seed", type=int, default=0)
    p_sel.add_argument("--tau", type=float, default=None)
    p_sel.add_argument("--c", type=float, default=25.0)
    p_sel.add_argument("--p", type=float, default=0.5)
    p_sel.add_argument("--prop-sd", type=float, default=0.03, dest="prop_sd")
    p_sel.add_argument("--rule", choices=("modal", "median"), default="modal")
    p_sel.add_argument("--chain", default="chain.json")
    p_sel.add_argument("--report", default="report.json")
    p_sel.add_argument("--trace", default="trace.csv")
    p_sel.set_defaults(func=_cmd_select)

    p_pred = subs.add_parser("predict", help="predict at test points")
    p_pred.add_argument("--model", help="model.json from fit")
    p_pred.add_argument("--chain", help="chain.json from select")
    p_pred.add_argument("--test", required=True, help="test CSV (x1..xd[,y])")
    p_pred.add_argument("--out", default="predictions.csv")
    p_pred.set_defaults(func=_cmd_predict)

    p_bench = subs.add_parser("benchmark", help="run a replicated benchmark spec")
    p_bench.add_argument("--spec", required=True, help="benchmark spec JSON")
    p_bench.add_argument("--out", default="benchmark.json")
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.set_defaults(func=_cmd_benchmark)

    p_des = subs.add_parser("design", help="generate a Latin hypercube design")
    p_des.add_argument("--kind", default="maximin-lhd")
    p_des.add_argument("--n", type=int, required=True)
    p_des.add_argument("--d", type=int, required=True)
    p_des.add_argument("--seed", type=int, default=0)
    p_des.add_argument("--sweeps", type=int, default=None)
    p_des.add_argument("--out", default="design.csv")
    p_des.set_defaults(func=_cmd_design)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
