"""Command-line surface: data generation, fitting, density evaluation,
benchmarking, oracle comparison, and three-class genotyping.

The only module with I/O side effects.  Every artifact file starts with a
comment line recording the invocation and seed; identical invocations
produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .bench import (
    ExperimentGrid, SyntheticSpec, density_error, format_rows, gen_mixture,
    relative_error, run_grid, true_density,
)
from .core import FitState, NIGParams
from .data import Dataset, ingest
from .genotype import (
    anchored_niw_priors, quantile_anchors, quantile_normalize_two_channel,
    three_class_fit,
)
from .oracle import GibbsConfig, collapsed_gibbs, gibbs_predictive
from .ordering import EngineSpec, OrderingSearchConfig, search_orderings
from .vsugs import state_predictive_density

SCHEMA_TAG = "dpmseq-fit-v1"


def _fmt(x) -> str:
    return repr(float(x))


def _invocation_comment(args_ns) -> str:
    argv = " ".join(getattr(args_ns, "_argv", []) or [args_ns.command])
    return f"# dpmseq {argv} | seed={getattr(args_ns, 'seed', 'n/a')}\n"


def _write(path: Path, comment: str, body: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(comment)
        fh.write(body)


def _prior_from_args(args) -> NIGParams:
    return NIGParams(args.prior_rho, args.prior_nu, args.prior_a,
                     args.prior_b)


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("DPM_SEQ_THREADS")
    return int(env) if env else 1


def _load_input(args) -> Dataset:
    if args.input is None:
        raise ValueError("--input is required for this command")
    return ingest(args.input, header=args.header)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    ds = gen_mixture(SyntheticSpec(args.dmu, args.n, args.seed))
    lines = [f"{_fmt(y)}" for y in ds.univariate()]
    out = Path(args.output_dir) / "data.csv"
    _write(out, _invocation_comment(args), "\n".join(lines) + "\n")
    return 0


def _search(ys, args, engine: str):
    prior = _prior_from_args(args)
    spec = EngineSpec(engine, args.alpha, prior,
                      trunc=args.trunc if engine == "vsugs" else None)
    cfg = OrderingSearchConfig(num_orderings=args.orderings, seed=args.seed,
                               parallelism=_threads(args))
    return search_orderings(ys, spec, cfg)


def cmd_fit(args) -> int:
    if args.engine == "vsugs" and args.trunc is None:
        raise ValueError("--trunc is required with --engine vsugs")
    if args.engine == "gibbs":
        raise ValueError("use the compare command for gibbs fits")
    ds = _load_input(args)
    ys = ds.univariate()
    res = _search(ys, args, args.engine)
    state: FitState = res.best_fit.state
    dump = {
        "schema": SCHEMA_TAG,
        "engine": args.engine,
        "alpha": args.alpha,
        "trunc": state.trunc,
        "seed": args.seed,
        "orderings": args.orderings,
        "prior": {"rho": args.prior_rho, "nu": args.prior_nu,
                  "a": args.prior_a, "b": args.prior_b},
        "best_index": res.best_index,
        "permutation": res.best_permutation.tolist(),
        "scores": res.scores.tolist(),
        "n_observations": len(ys),
        "n_occupied": state.n_occupied,
        "soft_counts": state.soft_counts.tolist(),
        "clusters": {"rho": state.rho.tolist(), "nu": state.nu.tolist(),
                     "a": state.a.tolist(), "b": state.b.tolist()},
    }
    if args.engine == "vsugs":
        dump["lower_bound"] = state.lower_bound
        dump["allocations"] = res.best_fit.allocations.tolist()
    else:
        dump["log_pseudo_marginal"] = res.best_fit.log_pseudo_marginal
        dump["allocations"] = res.best_fit.allocations.tolist()
    out = Path(args.output_dir) / "fit.json"
    _write(out, _invocation_comment(args),
           json.dumps(dump, indent=1) + "\n")
    return 0


def load_fit_state(path) -> FitState:
    """Rebuild a FitState from a fit.json model dump."""
    with open(path) as fh:
        text = "".join(ln for ln in fh if not ln.startswith("#"))
    dump = json.loads(text)
    if dump.get("schema") != SCHEMA_TAG:
        raise ValueError(f"unsupported model schema {dump.get('schema')!r}")
    p = dump["prior"]
    prior = NIGParams(p["rho"], p["nu"], p["a"], p["b"])
    cl = dump["clusters"]
    return FitState(
        family="nig", prior=prior, alpha=dump["alpha"], trunc=dump["trunc"],
        rho=np.array(cl["rho"]), nu=np.array(cl["nu"]),
        a=np.array(cl["a"]), b=np.array(cl["b"]),
        soft_counts=np.array(dump["soft_counts"]),
        n_occupied=dump["n_occupied"],
        processed=float(dump["n_observations"]),
        lower_bound=dump.get("lower_bound", 0.0),
    )


def cmd_density(args) -> int:
    if args.model is None:
        raise ValueError("--model is required for density")
    state = load_fit_state(args.model)
    grid = np.linspace(args.grid_min, args.grid_max, args.grid_steps)
    dens = state_predictive_density(state, grid)
    lines = [f"{_fmt(y)},{_fmt(f)}" for y, f in zip(grid, dens)]
    out = Path(args.output_dir) / "density.csv"
    _write(out, _invocation_comment(args), "\n".join(lines) + "\n")
    return 0


def cmd_bench(args) -> int:
    grid = ExperimentGrid(
        dmu_values=tuple(args.dmu_list), alpha_values=tuple(args.alpha_list),
        replicates=args.replicates, T=args.trunc, orderings=args.orderings,
        n=args.n)
    rows = run_grid(grid, _prior_from_args(args), master_seed=args.seed,
                    include_gibbs=args.gibbs,
                    gibbs_cfg=GibbsConfig(args.burnin, args.iters,
                                          args.seed) if args.gibbs else None,
                    parallelism=_threads(args))
    out = Path(args.output_dir) / "bench.csv"
    _write(out, _invocation_comment(args), format_rows(rows))
    return 0


def cmd_compare(args) -> int:
    if args.input is not None:
        ys = _load_input(args).univariate()
    else:
        ys = gen_mixture(SyntheticSpec(args.dmu, args.n, args.seed)
                         ).univariate()
    prior = _prior_from_args(args)
    cfg = GibbsConfig(args.burnin, args.iters, args.seed)
    samples = collapsed_gibbs(ys, args.alpha, prior, cfg)
    fgibbs = gibbs_predictive(samples, ys, prior, args.alpha, ys)
    lines = ["engine,rel_err,e_true,wall_ms"]
    ftrue = true_density(args.dmu, ys) if args.input is None else None
    for engine in ("sugs", "vsugs"):
        t0 = time.perf_counter()
        res = _search(ys, args, engine)
        wall = 1e3 * (time.perf_counter() - t0)
        fhat = state_predictive_density(res.best_fit.state, ys)
        e_true = density_error(fhat, ftrue) if ftrue is not None else \
            float("nan")
        lines.append(f"{engine},{_fmt(relative_error(fhat, fgibbs))},"
                     f"{_fmt(e_true)},{_fmt(wall)}")
    out = Path(args.output_dir) / "compare.csv"
    _write(out, _invocation_comment(args), "\n".join(lines) + "\n")
    return 0


def cmd_genotype(args) -> int:
    ds = _load_input(args)
    values = ds.values
    if args.normalize:
        values = quantile_normalize_two_channel(values)
    if args.anchors:
        anchors = np.array([[float(x) for x in point.split(",")]
                            for point in args.anchors.split(";")])
    else:
        anchors = quantile_anchors(values)
    priors = anchored_niw_priors(anchors)
    fit = three_class_fit(values, priors, args.alpha, args.trunc,
                          engine=args.engine)
    lines = ["label,r0,r1,r2"]
    for lab, r in zip(fit.labels, fit.responsibilities):
        lines.append(f"{lab}," + ",".join(_fmt(x) for x in r))
    out = Path(args.output_dir) / "genotype.csv"
    _write(out, _invocation_comment(args), "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _float_list(text):
    return [float(x) for x in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpmseq",
        description="Sequential Dirichlet process mixture fitting toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, engine=True):
        p.add_argument("--input")
        p.add_argument("--output-dir", default=".")
        p.add_argument("--header", action="store_true")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--trunc", type=int)
        p.add_argument("--orderings", type=int, default=50)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--prior-rho", type=float, default=0.0)
        p.add_argument("--prior-nu", type=float, default=1.0)
        p.add_argument("--prior-a", type=float, default=1.0)
        p.add_argument("--prior-b", type=float, default=1.0)
        if engine:
            p.add_argument("--engine", choices=["sugs", "vsugs", "gibbs"],
                           default="vsugs")

    p = sub.add_parser("gen", help="generate benchmark mixture data")
    common(p, engine=False)
    p.add_argument("--dmu", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", help="ordering-searched sequential fit")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("density", help="evaluate a fitted model on a grid")
    common(p, engine=False)
    p.add_argument("--model", required=True)
    p.add_argument("--grid-min", type=float, default=-10.0)
    p.add_argument("--grid-max", type=float, default=10.0)
    p.add_argument("--grid-steps", type=int, default=201)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("bench", help="run the experiment grid")
    common(p, engine=False)
    p.add_argument("--dmu-list", type=_float_list, default=[0.2])
    p.add_argument("--alpha-list", type=_float_list, default=[0.1])
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--gibbs", action="store_true")
    p.add_argument("--burnin", type=int, default=300)
    p.add_argument("--iters", type=int, default=1000)
    p.set_defaults(func=cmd_bench, trunc=200)

    p = sub.add_parser("compare", help="engines vs collapsed Gibbs")
    common(p, engine=False)
    p.add_argument("--dmu", type=float, default=0.2)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--burnin", type=int, default=300)
    p.add_argument("--iters", type=int, default=1000)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("genotype", help="three-class classification")
    common(p)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--anchors", help='"x,y;x,y;x,y" class anchor points')
    p.set_defaults(func=cmd_genotype)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = list(argv) if argv is not None else sys.argv[1:]
    if getattr(args, "trunc", None) is None and \
            getattr(args, "engine", "") == "vsugs" and \
            args.command in ("fit", "genotype"):
        parser.error("--trunc is required with --engine vsugs")
    if args.command == "genotype" and args.trunc is None:
        args.trunc = 40
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
