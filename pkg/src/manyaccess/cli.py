"""Command-line surface.

Subcommands: bounds, simulate, sweep, partition, classify, mu.  Exit
codes: 0 success, 2 config error, 3 complexity-budget abort.  Rates are
reported in both nats and bits per unit energy.
"""

import argparse
import json
import math
import sys

from . import bounds as bnd
from . import harness
from .codebooks import mu_chernoff_lb, mu_exact, mu_monte_carlo
from .decoding import BoundParams
from .errors import ComplexityBudgetError, ConfigError
from .model import SystemParams, make_joint_schedule, single_user_capacity_pue
from .partition import build_partition, partition_to_json, verify_partition
from .rng import make_rng

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _emit(payload: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(payload, indent=2, default=str))
    else:
        for key, val in payload.items():
            print(f"{key},{val}")


def _bound_dispatch(name: str, p: dict):
    """Evaluate a bound by name from flattened JSON parameters."""
    if name == "e0_msg":
        return bnd.e0_msg(p["a"], p["rho"], p["k_active"], p["E_msg"], p["n_msg"], p["N0"])
    if name == "pr_type_error_ub":
        return bnd.pr_type_error_ub(
            p["a"], p["rho"], p["M"], p["k_active"], p["E_msg"], p["n_msg"], p["N0"], p["mu"]
        )
    if name == "decode_error_budget":
        return bnd.decode_error_budget(
            p["rho"], p["M"], p["k_active"], p["E_msg"], p["n_msg"], p["N0"], p["mu"]
        )
    if name == "f_msg":
        return bnd.f_msg(p["a"], p["rho"], p["M"], p["k_active"], p["E_msg"], p["n_msg"], p["N0"])
    if name == "detect_exponent_g":
        return bnd.detect_exponent_g(
            p["lambda"], p["rho"], p["kappa1"], p["kappa2"],
            p["d_weight"], p["ell"], p["n_sig"], p["E_sig"],
        )
    if name in ("detection_budget", "two_phase_error_budget"):
        params = SystemParams(n=p["n"], ell=p["ell"], alpha=p["alpha"], N0=p["N0"])
        sched = make_joint_schedule(params, p["b"])
        bp = BoundParams(
            rho=p.get("rho", 0.75), lam=p.get("lambda", 2.0 / 3.0), xi=p.get("xi", 8)
        )
        if name == "detection_budget":
            return bnd.detection_budget(params, sched, bp, mu_exact(sched.n_sig).value)
        return bnd.two_phase_error_budget(params, sched, bp, p["M"])
    if name == "gallager_awgn":
        return bnd.gallager_awgn(p["M"], p["n_code"], p["P"], p["N0"], p["rho"])
    if name == "ortho_code_bound":
        return bnd.ortho_code_bound(p["M"], p["R_dot_nats"], p["N0"])
    if name == "ortho_user_error_bound":
        return bnd.ortho_user_error_bound(p["M"], p["t"], p["E"], p["N0"])
    if name == "converse_joint":
        params = SystemParams(n=p["n"], ell=p["ell"], alpha=p["alpha"], N0=p["N0"])
        return bnd.converse_joint(params, p["E"], p["Pe"])
    if name == "converse_ape":
        params = SystemParams(n=p["n"], ell=p["ell"], alpha=p["alpha"], N0=p["N0"])
        return bnd.converse_ape(params, p["E"], p["Pe_A"])
    if name == "converse_ortho_user":
        return bnd.converse_ortho_user(p["E"], p["n1"], p["N0"], p["P1"])
    if name == "joint_error_lb":
        return bnd.joint_error_lb(p["E"], p["ell"], p["N0"], p["alpha"])
    if name == "gaussian_kl":
        return bnd.gaussian_kl(p["delta_sq_norm"], p["N0"])
    if name == "normal_tail":
        q = bnd.normal_tail(p["x"])
        return {"q": q.q, "upper_bound": q.upper_bound}
    if name == "capacity_pue":
        c = single_user_capacity_pue(p["N0"])
        return {"nats": c, "bits": c / math.log(2.0)}
    raise ConfigError(f"unknown bound {name!r}")


def _cmd_bounds(args) -> int:
    params = json.loads(args.params)
    result = _bound_dispatch(args.name, params)
    if isinstance(result, bnd.BoundReport):
        payload = result.to_dict()
    elif isinstance(result, dict):
        payload = result
    else:
        payload = {"value": result}
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    overrides = {"trials": args.trials, "master_seed": args.seed}
    cfg = harness.load_config(args.config, overrides)
    summary = harness.estimate_error(cfg, threads=args.threads)
    budget = harness.analytic_budget(cfg)
    row = harness.summary_row(cfg, summary, budget)
    if args.trials_csv:
        harness.write_trials_csv(args.trials_csv, summary.records)
    if args.summary_csv:
        harness.write_summary_csv(args.summary_csv, [row])
    payload = dict(row)
    payload["budget_terms"] = budget.terms
    payload["budget_aborts"] = summary.budget_aborts
    payload["epsilon_target"] = cfg.epsilon
    payload["meets_epsilon"] = summary.joint_err <= cfg.epsilon
    _emit(payload, args.format)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    family = harness.load_family(args.family)
    n_grid = [int(x) for x in args.n_grid.split(",")]
    result = harness.sweep(
        family,
        n_grid,
        R_dot_fraction=args.rate_fraction,
        N0=args.N0,
        scheme=args.scheme,
        split=args.split,
        trials=args.trials if args.trials is not None else 0,
        master_seed=args.seed or 0,
        threads=args.threads,
    )
    harness.sweep_rows_to_csv(args.out, result)
    print(json.dumps({"rows": len(result.rows), "verdicts": result.verdicts, "csv": args.out}))
    return EXIT_OK


def _cmd_partition(args) -> int:
    p = build_partition(args.ell, args.M, args.t)
    report = verify_partition(p, args.ell)
    out = partition_to_json(p, report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
        print(json.dumps({"ok": report.ok, "json": args.out}))
    else:
        print(out)
    return EXIT_OK


def _cmd_classify(args) -> int:
    family = harness.load_family(args.family)
    n_grid = [int(x) for x in args.n_grid.split(",")]
    verdict = harness.classify_regime(family, n_grid, N0=args.N0, tol=args.tol)
    print(json.dumps({"family": family.name, "verdict": verdict}))
    return EXIT_OK


def _cmd_mu(args) -> int:
    payload = {
        "length": args.length,
        "exact": mu_exact(args.length).value,
        "chernoff_lb": mu_chernoff_lb(args.length).value,
    }
    if args.mc_trials:
        est = mu_monte_carlo(args.length, args.mc_trials, make_rng(args.seed or 0))
        payload["monte_carlo"] = est.value
        payload["monte_carlo_stderr"] = est.stderr
    _emit(payload, args.format)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="manyaccess",
        description="Simulator and bound calculator for Gaussian random-access many-user channels",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="evaluate a closed-form bound by name")
    p.add_argument("name")
    p.add_argument("--params", default="{}", help="JSON object of bound parameters")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("simulate", help="run one Monte Carlo config")
    p.add_argument("config", help="JSON config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--trials-csv", default=None, help="write the per-trial CSV here")
    p.add_argument("--summary-csv", default=None, help="write the one-row summary CSV here")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="bound/simulation table over a growth family")
    p.add_argument("--family", required=True, help="JSON family file")
    p.add_argument("--n-grid", required=True, help="comma-separated blocklengths")
    p.add_argument("--rate-fraction", type=float, default=0.25)
    p.add_argument("--N0", type=float, default=2.0)
    p.add_argument("--scheme", choices=("joint", "ortho"), default="joint")
    p.add_argument("--split", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("partition", help="build and verify a type-class partition")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_partition)

    p = sub.add_parser("classify", help="sublinear/superlinear verdict for a family")
    p.add_argument("--family", required=True)
    p.add_argument("--n-grid", required=True)
    p.add_argument("--N0", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=0.05)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("mu", help="truncation normalizer: exact, Chernoff, Monte Carlo")
    p.add_argument("length", type=int)
    p.add_argument("--mc-trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=_cmd_mu)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ComplexityBudgetError as e:
        print(f"complexity budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
