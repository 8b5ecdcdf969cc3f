"""Command-line interface.

Subcommands:

  kernel-eval   evaluate the reproducing kernel at a point pair
  distance      (smooth) Wasserstein distance between two CSV measures
  mmd           order-2 smooth Sobolev discrepancy between two CSV measures
  bound         n^{-1/2} upper-bound table for a sampled spec (CSV to stdout)
  two-sample    bootstrap two-sample test, JSON result to stdout
  level-curve   rejection rate vs nominal level (CSV)
  mswe          scaled-error table for minimum smooth Wasserstein estimation
  experiment    run a JSON-configured experiment into an output directory
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import SmoothWpError
from .experiments import ExperimentConfig, _level_csv, _mswe_csv, _mswe_svg, level_curve, run
from .measures import DistributionSpec, EmpiricalMeasure, SeedSpec
from .mmd import d2_squared, gw_upper_bound, one_sample_identity
from .mswe import FitConfig, ParamFamily, error_experiment
from .ot import OTConfig, smooth_wasserstein, wasserstein_discrete
from .specialfn import KernelParams, kernel
from .twosample import TestConfig, test


def _floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",") if v != ""])


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v != ""]


def _load_spec(path: str) -> DistributionSpec:
    return DistributionSpec.from_dict(json.loads(Path(path).read_text()))


def _add_measure_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input-a", required=True, help="CSV with header x1,...,xd,w")
    p.add_argument("--input-b", required=True, help="CSV with header x1,...,xd,w")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoothwp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-eval", help="evaluate the reproducing kernel")
    p.add_argument("--x", required=True, help="comma-separated coordinates")
    p.add_argument("--y", required=True, help="comma-separated coordinates")
    p.add_argument("--sigma", type=float, required=True)

    p = sub.add_parser("distance", help="smooth W_p distance between CSV measures")
    _add_measure_args(p)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--method", default="auto",
                   choices=["auto", "quantile_1d", "exact_lp", "sinkhorn"])
    p.add_argument("--epsilon", type=float, default=None, help="sinkhorn regularization")
    p.add_argument("--k", type=int, default=16, help="noise replicas per point")
    p.add_argument("--plan", default=None, help="write the transport plan CSV here (sigma=0 only)")

    p = sub.add_parser("mmd", help="order-2 smooth Sobolev discrepancy")
    p.add_argument("--input-a", required=True)
    p.add_argument("--input-b", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--kind", default="v_statistic", choices=["v_statistic", "u_statistic"])

    p = sub.add_parser("bound", help="n^{-1/2} upper-bound table (CSV to stdout)")
    p.add_argument("--spec", required=True, help="distribution spec JSON file")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--n", required=True, help="comma-separated sample sizes")
    p.add_argument("--mc", type=int, default=1_000_000)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("two-sample", help="bootstrap two-sample test (JSON to stdout)")
    _add_measure_args(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--B", type=int, default=500)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--statistic-mode", default="smooth_ot", choices=["smooth_ot", "sobolev"])

    p = sub.add_parser("level-curve", help="rejection rate vs nominal level (CSV)")
    p.add_argument("--spec", required=True, help="distribution spec JSON for the null")
    p.add_argument("--spec-b", default=None, help="alternative spec (power curve)")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--B", type=int, default=500)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--alphas", default="0.05,0.1,0.2,0.3")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path (stdout when omitted)")

    p = sub.add_parser("mswe", help="scaled-error table for M-SWE")
    p.add_argument("--spec", default=None, help="data spec JSON (defaults to the family at true theta)")
    p.add_argument("--family", default="two_mode_means",
                   choices=["two_mode_means", "gaussian_mean_scale"])
    p.add_argument("--true-theta", default="-1,1")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--n-grid", default="64,256,1024")
    p.add_argument("--trials", type=int, default=40)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="mswe_out", help="output directory")

    p = sub.add_parser("experiment", help="run a JSON-configured experiment")
    psub = p.add_subparsers(dest="experiment_command", required=True)
    prun = psub.add_parser("run")
    prun.add_argument("--config", required=True, help="experiment config JSON")
    prun.add_argument("--out", required=True, help="output directory")

    return parser


def _cmd_kernel_eval(args) -> int:
    val = kernel(_floats(args.x), _floats(args.y), KernelParams(args.sigma))
    print(repr(val))
    return 0


def _cmd_distance(args) -> int:
    m1 = EmpiricalMeasure.from_csv(args.input_a)
    m2 = EmpiricalMeasure.from_csv(args.input_b)
    cfg = OTConfig(p=args.p, method=args.method, epsilon=args.epsilon)
    if args.plan is not None:
        if args.sigma != 0:
            print("--plan requires --sigma 0 (augmented plans are not reported)",
                  file=sys.stderr)
            return 2
        plan = wasserstein_discrete(m1, m2, cfg)
        np.savetxt(args.plan, plan.plan, delimiter=",")
        print(repr(plan.distance))
        return 0
    dist = smooth_wasserstein(m1, m2, args.sigma, cfg, args.k, SeedSpec(args.seed))
    print(repr(dist))
    return 0


def _cmd_mmd(args) -> int:
    m1 = EmpiricalMeasure.from_csv(args.input_a)
    m2 = EmpiricalMeasure.from_csv(args.input_b)
    res = d2_squared(m1, m2, KernelParams(args.sigma), kind=args.kind)
    print(json.dumps({"d2": res.d2, "d2_squared": res.d2_squared,
                      "estimator_kind": res.estimator_kind}))
    return 0


def _cmd_bound(args) -> int:
    spec = _load_spec(args.spec)
    mu = spec.mean_vector()
    if np.any(mu):
        print("# spec is centered before evaluating the bound", file=sys.stderr)
    from .experiments import _centered_spec

    cspec = _centered_spec(spec)
    params = KernelParams(args.sigma)
    seed = SeedSpec(args.seed)
    ident = one_sample_identity(cspec, params, n=1, mc=args.mc, seed=seed.derive("kernel_mc"))
    from .measures import sample, second_moment

    m2val = second_moment(sample(cspec, args.mc, seed.derive("m2")))
    print("n,bound")
    for n in _ints(args.n):
        d_val = (max(ident.value, 0.0) / n) ** 0.5
        print(f"{n},{gw_upper_bound(d_val, m2val, args.p, args.sigma)!r}")
    return 0


def _cmd_two_sample(args) -> int:
    m1 = EmpiricalMeasure.from_csv(args.input_a)
    m2 = EmpiricalMeasure.from_csv(args.input_b)
    cfg = TestConfig(p=args.p, sigma=args.sigma, alpha=args.alpha, B=args.B,
                     k=args.k, statistic_mode=args.statistic_mode)
    res = test(m1, m2, cfg, SeedSpec(args.seed))
    print(json.dumps({
        "statistic": res.statistic,
        "critical_value": res.critical_value,
        "reject": res.reject,
        "bootstrap_values": [float(v) for v in res.bootstrap_values],
    }))
    return 0


def _cmd_level_curve(args) -> int:
    cfg = ExperimentConfig(
        kind="level_curve",
        seed=args.seed,
        spec=_load_spec(args.spec),
        spec_b=_load_spec(args.spec_b) if args.spec_b else None,
        sigma=args.sigma,
        p=args.p,
        n=args.n,
        m=args.m,
        B=args.B,
        k=args.k,
        alphas=tuple(float(a) for a in args.alphas.split(",")),
        reps=args.reps,
    )
    rows = level_curve(cfg)
    if args.out:
        _level_csv(rows, args.out)
    else:
        print("alpha,rejection_rate,reps")
        for r in rows:
            print(f"{r.alpha!r},{r.rejection_rate!r},{r.reps}")
    return 0


def _cmd_mswe(args) -> int:
    family = ParamFamily(args.family)
    records = error_experiment(
        family,
        _floats(args.true_theta),
        args.p,
        args.sigma,
        _ints(args.n_grid),
        args.trials,
        SeedSpec(args.seed),
        k=args.k,
        data_spec=_load_spec(args.spec) if args.spec else None,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _mswe_csv(records, out / "mswe_errors.csv")
    (out / "mswe_errors.svg").write_text(_mswe_svg(records))
    print(f"wrote {out / 'mswe_errors.csv'} and {out / 'mswe_errors.svg'}")
    return 0


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_dict(json.loads(Path(args.config).read_text()))
    manifest = run(cfg, args.out)
    print(json.dumps({"outputs": manifest["outputs"], "failures": manifest["failures"]},
                     indent=2))
    return 1 if manifest["failures"] and not manifest["outputs"] else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "kernel-eval": _cmd_kernel_eval,
        "distance": _cmd_distance,
        "mmd": _cmd_mmd,
        "bound": _cmd_bound,
        "two-sample": _cmd_two_sample,
        "level-curve": _cmd_level_curve,
        "mswe": _cmd_mswe,
        "experiment": _cmd_experiment,
    }
    try:
        return handlers[args.command](args)
    except SmoothWpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
