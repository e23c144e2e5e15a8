"""Command-line interface.

Subcommands:
  run        one (problem, optimizer) experiment over a seed set
  sweep      grid of runs varying one stepper hyperparameter
  reference  solve and cache the full-batch reference solution
  verify     quick self-checks of the analytical oracles
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import objectives, oracles, runner
from .core import stream
from .steppers import STEPPERS, ConfigurationError, StepperConfig


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--problem", default="synthetic",
                   choices=["counterexample", "fig1", "synthetic", "dataset"])
    p.add_argument("--dataset", help="path for --problem dataset")
    p.add_argument("--dataset-format", default="libsvm", choices=["libsvm", "delimited"])
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--label-sign", default="standard", choices=["standard", "as_printed"])
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--interpolated", action="store_true")
    p.add_argument("--f-floor", type=float, default=1.0)
    p.add_argument("--gen-seed", type=int, default=0)
    p.add_argument("--optimizer", default="decsps", choices=sorted(STEPPERS))
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seeds", default="5",
                   help="seed count N (seeds 0..N-1) or comma-separated list")
    p.add_argument("--gamma-b", type=float, default=10.0)
    p.add_argument("--gamma-ell", type=float, default=0.01)
    p.add_argument("--c0", type=float, default=1.0)
    p.add_argument("--c-schedule", default="sqrt", choices=["constant", "sqrt", "linear_half"])
    p.add_argument("--c-sps", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--b0", type=float, default=0.1)
    p.add_argument("--beta2", type=float, default=0.99)
    p.add_argument("--f-star-policy", default="lower_bound", choices=["exact", "lower_bound"])
    p.add_argument("--lower-bound", default="zero", choices=["zero", "exact", "constant"])
    p.add_argument("--lower-bound-value", type=float, default=0.0)
    p.add_argument("--reference-tol", type=float, default=1e-10)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--out", default="out")
    p.add_argument("--format", default="csv", choices=["csv", "json-lines"])


def _parse_seeds(spec: str) -> tuple[int, ...]:
    parts = [s for s in spec.split(",") if s]
    if len(parts) == 1 and "," not in spec:
        return tuple(range(int(parts[0])))
    return tuple(int(s) for s in parts)


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser, argv) -> None:
    if not args.config:
        return
    with open(args.config) as fh:
        values = json.load(fh)
    explicit = {a.lstrip("-").replace("-", "_").split("=")[0] for a in argv if a.startswith("--")}
    for key, val in values.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            parser.error(f"unknown config key {key!r}")
        if attr not in explicit:  # flags take precedence
            setattr(args, attr, val)


def _build_run_config(args) -> runner.RunConfig:
    problem = runner.ProblemSpec(
        name=args.problem,
        lam=args.lam,
        label_sign=args.label_sign,
        dataset_path=args.dataset,
        dataset_format=args.dataset_format,
        n=args.n,
        d=args.d,
        interpolated=args.interpolated,
        f_floor=args.f_floor,
        gen_seed=args.gen_seed,
    )
    stepper = StepperConfig(
        gamma_b=args.gamma_b,
        gamma_ell=args.gamma_ell,
        c0=args.c0,
        c_schedule=args.c_schedule,
        c_sps=args.c_sps,
        eta=args.eta,
        b0=args.b0,
        beta2=args.beta2,
        f_star_policy=args.f_star_policy,
        lower_bound_policy=args.lower_bound,
        lower_bound_value=args.lower_bound_value,
    )
    return runner.RunConfig(
        problem=problem,
        optimizer=args.optimizer,
        stepper=stepper,
        B=args.batch_size,
        K=args.iters,
        seeds=_parse_seeds(str(args.seeds)),
        reference_tol=args.reference_tol,
        out_dir=args.out,
        trace_format=args.format,
        record_every=args.record_every,
    )


def _cmd_run(args) -> int:
    out = runner.run_experiment(_build_run_config(args))
    print(f"trace: {out.trace_path}")
    print(f"aggregate: {out.aggregate_path}")
    print(f"manifest: {out.manifest_path}")
    return 0


def _cmd_sweep(args) -> int:
    values = [float(v) for v in args.sweep_values.split(",")]
    base = _build_run_config(args)
    cfgs = []
    for v in values:
        stepper = dataclasses.replace(base.stepper, **{args.sweep_param: v})
        label = f"{base.problem.name}_{base.optimizer}_{args.sweep_param}_{v:g}"
        cfgs.append(dataclasses.replace(base, stepper=stepper, label=label))
    table = runner.compare_grid(cfgs)
    print(f"{'label':<45} {'final f_sub_avg':>18} {'2*std':>12}")
    for row in table:
        print(f"{row['label']:<45} {row['final_f_sub_avg_mean']:>18.6e} "
              f"{row['final_f_sub_avg_2std']:>12.3e}")
    return 0


def _cmd_reference(args) -> int:
    obj = runner.build_problem(_build_run_config(args).problem)
    ref = objectives.solve_reference(obj, args.reference_tol)
    payload = {
        "f_star": ref.f_star,
        "grad_norm": ref.grad_norm,
        "tol": ref.tol,
        "x_star": ref.x_star.tolist(),
    }
    if args.out and args.out != "-":
        import os

        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "reference.json")
        with open(path, "w") as fh:
            json.dump(payload, fh)
        print(f"reference cached at {path} (f* = {ref.f_star:.12g})")
    else:
        json.dump(payload, sys.stdout)
    return 0


def _cmd_verify(_args) -> int:
    """Fast oracle self-checks; exit 0 iff all pass."""
    rng = stream(20240)
    checks = []

    A = rng.standard_normal(12).tolist()
    eps = rng.standard_normal(12).tolist()
    z_closed = oracles.variation_of_constants(A, eps, 1.3, 12)
    z = 1.3
    for j in range(12):
        z = A[j] * z + eps[j]
    checks.append(("variation_of_constants", abs(z_closed - z) <= 1e-12 * max(1.0, abs(z))))

    max_obs, bound = oracles.bounded_recursion_check(
        rng.uniform(0.1, 5.0, 64), rng.uniform(0.05, 1.0, 64), rng.uniform(0.1, 3.0, 64), 2000
    )
    checks.append(("recursion_bound", bool(np.all(max_obs <= bound * (1.0 + 1e-12)))))

    samples = rng.gamma(2.0, 1.0, size=(200_000, 5))
    mc = float(np.mean((samples**2).sum(1) / samples.sum(1) ** 2))
    ident = oracles.gamma_moment_identity(5, 2.0)
    checks.append(("gamma_moment", abs(mc - ident) / ident < 0.02))

    obj = objectives.make_counterexample_1d()
    sim = oracles.simulate_polyak_1d(obj, "sps", steps=200, n_runs=20_000, rng=rng)
    mc_var = float(np.mean(sim["x"] ** 2))
    checks.append(("bias_variance", abs(mc_var - oracles.sps_bias_variance(199, 1.0)) / oracles.sps_bias_variance(199, 1.0) < 0.05))

    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}")
        ok = ok and passed
    return 0 if ok else 1


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = argparse.ArgumentParser(prog="polystep")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="hyperparameter sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--sweep-param", required=True,
                         choices=["c0", "gamma_b", "gamma_ell", "eta", "b0", "beta2", "c_sps"])
    p_sweep.add_argument("--sweep-values", required=True, help="comma-separated values")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_ref = sub.add_parser("reference", help="solve and cache the reference solution")
    _add_common(p_ref)
    p_ref.set_defaults(func=_cmd_reference)

    p_verify = sub.add_parser("verify", help="oracle self-checks")
    p_verify.set_defaults(func=_cmd_verify)

    try:
        args = parser.parse_args(argv)
        if hasattr(args, "config"):
            _apply_config_file(args, parser, argv)
        return args.func(args)
    except (ConfigurationError, objectives.UnavailableExactMinimum) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
