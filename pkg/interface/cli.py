#!/usr/bin/env python3
"""
pvweights - command-line front end.

Commands:
    weights          compute weights for a study file
    test             weights + weighted Bonferroni (or BH) decisions
    simulate         scheme comparison / sparse-means power tables (CSV)
    sparse-power     optimal-over-unweighted power ratio grid (CSV)
    check-condition  small-q and simple-condition verdicts

Exit status: 0 on success, 2 on a usage error, 1 on any other failure.
"""

import argparse
import sys
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from core_power.analytic import power_ratio_grid
from core_power.monte_carlo import monte_carlo_null_errors
from core_power.studies import comparison_study, sparse_means_study
from core_study.mapping import map_prior, resolve_tail
from core_study.procedures import weighted_bh, weighted_bonferroni
from core_study.records import RunMetadata
from core_study.tsv_io import read_study_table, write_outcomes, write_weights
from core_weights.critical import check_simple_condition, check_small_q_condition
from core_weights.schemes import SCHEMES, compute_weights
from utils import logger, output
from utils.config_loader import load_config
from utils.exceptions import UsageError, WeightingError

COMMANDS = ("weights", "test", "simulate", "sparse-power", "check-condition")
DEFAULT_OUTPUT = {
    "weights": "weights.tsv",
    "test": "outcomes.tsv",
    "simulate": "simulation.csv",
    "sparse-power": "sparse_power.csv",
    "check-condition": None,
}

stdout = Console()


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="study TSV (id, prior_z | prior_p [prior_sign], n_prior, n_current, p_current)")


def _add_level(p: argparse.ArgumentParser, alpha: bool = True) -> None:
    level = p.add_mutually_exclusive_group()
    level.add_argument("--q", type=float, help="per-test level q")
    if alpha:
        level.add_argument("--alpha", type=float, help="family level; q = alpha / number of tests")


def _add_scheme(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=SCHEMES, default="bayes", help="weighting scheme (default: bayes)")
    p.add_argument("--beta", type=float, help="tilt of the exponential scheme")
    p.add_argument("--filter-M", dest="filter_M", type=float, help="threshold M <= 0 of the filter scheme")


def _add_prior(p: argparse.ArgumentParser) -> None:
    p.add_argument("--phi", type=float, help="prior dispersion (default from config: 1.0)")
    p.add_argument("--tail", choices=("one", "two", "auto"), help="prior direction handling (default: auto)")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", help="output file (default depends on the command)")
    p.add_argument("--config", help="YAML config file (default: config.yaml)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for solver traces")


def build_parser() -> argparse.ArgumentParser:
    """One subparser per command; a flag that does not apply to a command is rejected."""
    parser = argparse.ArgumentParser(
        prog="pvweights",
        description="Bayes p-value weights: optimal weighted Bonferroni under Gaussian priors",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "weights": "compute weights for a study file",
        "test": "compute weights and run the weighted testing procedure",
        "simulate": "power of every scheme on simulated priors (CSV)",
        "sparse-power": "optimal / unweighted power ratio over an (M, pi1) grid (CSV)",
        "check-condition": "check the small-q and the simple sufficient condition",
    }
    cmds = {name: sub.add_parser(name, help=helps[name], description=helps[name]) for name in COMMANDS}

    p = cmds["weights"]
    _add_input(p)
    _add_level(p)
    _add_scheme(p)
    _add_prior(p)
    p.add_argument("--seed", type=int, help="random seed of the null check (default from config: 0)")
    p.add_argument("--reps", type=int, help="replicates of a global-null Monte Carlo check (default from config: 0)")

    p = cmds["test"]
    _add_input(p)
    _add_level(p)
    _add_scheme(p)
    _add_prior(p)
    p.add_argument("--procedure", choices=("bonferroni", "bh"), help="testing procedure (default: bonferroni)")

    p = cmds["simulate"]
    _add_level(p)
    p.add_argument("--n-tests", dest="n_tests", type=int, help="number of tests J")
    p.add_argument("--design", choices=("comparison", "sparse"), default="comparison",
                   help="study design (default: comparison)")
    p.add_argument("--seed", type=int, help="random seed of the comparison design (default from config: 0)")
    p.add_argument("--sigma", type=float, help="common prior sd of the sparse design")

    _add_level(cmds["sparse-power"], alpha=False)

    p = cmds["check-condition"]
    _add_input(p)
    _add_level(p)
    _add_prior(p)
    p.add_argument("--k", type=int, default=10, help="K of the simple condition (default: 10)")

    for p in cmds.values():
        _add_common(p)
    return parser


# ------------------------------
# Argument resolution
# ------------------------------
def _resolve_q(args, n_tests: int) -> float:
    if args.q is not None:
        q = args.q
    elif args.alpha is not None:
        if n_tests == 0:
            raise UsageError("--alpha needs at least one test")
        q = args.alpha / n_tests
    else:
        raise UsageError("give the level with --q or --alpha")
    if not 0.0 < q < 1.0:
        raise UsageError(f"q must lie in (0, 1), got {q!r}")
    return q


def _check_scheme_flags(args) -> None:
    if args.beta is not None and args.scheme != "exponential":
        raise UsageError("--beta only applies to --scheme exponential")
    if args.filter_M is not None and args.scheme != "filter":
        raise UsageError("--filter-M only applies to --scheme filter")
    if args.scheme == "exponential" and (args.beta is None or args.beta < 0.0):
        raise UsageError("--scheme exponential needs --beta >= 0")
    if args.scheme == "filter" and (args.filter_M is None or args.filter_M > 0.0):
        raise UsageError("--scheme filter needs --filter-M <= 0")


def _phi(args, cfg) -> float:
    phi = args.phi if args.phi is not None else float(cfg["phi"])
    if not phi > 0.0:
        raise UsageError(f"--phi must be positive, got {phi!r}")
    return phi


def _load_study(args, cfg):
    if not args.input:
        raise UsageError(f"{args.command} needs --input")
    phi = _phi(args, cfg)
    table = read_study_table(args.input)
    tail = resolve_tail(table, args.tail or cfg["tail"])
    effs = map_prior(table, phi=phi, tail=tail,
                     n_prior=cfg["study"]["n_prior"], n_current=cfg["study"]["n_current"])
    return table, effs, phi, tail


def _solve(args, cfg, effs, q):
    solver = cfg["solver"]
    return compute_weights(args.scheme, effs, q, beta=args.beta, threshold_M=args.filter_M,
                           tol=float(solver["tol"]), max_iter=int(solver["max_iter"]))


def _summary(title: str, items: Dict[str, Any]) -> None:
    table = Table(title=title, show_header=False)
    table.add_column("field", style="bold")
    table.add_column("value")
    for key, value in items.items():
        table.add_row(key, f"{value:.10g}" if isinstance(value, float) else str(value))
    stdout.print(table)


# ------------------------------
# Commands
# ------------------------------
def cmd_weights(args, cfg) -> int:
    _check_scheme_flags(args)
    table, effs, phi, tail = _load_study(args, cfg)
    q = _resolve_q(args, len(effs))
    solution = _solve(args, cfg, effs, q)
    metadata = RunMetadata.from_solution(solution, args.scheme, phi)
    out = args.output or DEFAULT_OUTPUT["weights"]
    write_weights(out, table.ids, solution, metadata)

    items = {
        "tests": len(effs),
        "tail": tail,
        "scheme": args.scheme,
        "method": solution.method,
        "q": q,
        "q*": solution.q_star,
        "lambda": solution.lambda_,
        "exact": solution.exact,
        "sum of weights": solution.total,
    }
    reps = args.reps if args.reps is not None else int(cfg["reps"])
    if reps < 0:
        raise UsageError(f"--reps must be nonnegative, got {reps!r}")
    if reps > 0:
        seed = args.seed if args.seed is not None else int(cfg["seed"])
        null = monte_carlo_null_errors(solution.weights, solution.q_star, reps, seed, args.scheme)
        items["null false rejections (exact)"] = null.analytic_power * len(effs)
        items["null false rejections (MC)"] = null.mc_power * len(effs)
        items["MC standard error"] = null.mc_se * len(effs)
    _summary("weights", items)
    logger.log_success(f"weights saved to {out}")
    return 0


def cmd_test(args, cfg) -> int:
    # ------------------------------
    # Step 1: priors from the study
    # ------------------------------
    _check_scheme_flags(args)
    table, effs, phi, tail = _load_study(args, cfg)
    q = _resolve_q(args, len(effs))

    # ------------------------------
    # Step 2: weights
    # ------------------------------
    solution = _solve(args, cfg, effs, q)

    # ------------------------------
    # Step 3: testing procedure
    # ------------------------------
    procedure = args.procedure or cfg["procedure"]
    if procedure == "bh":
        q_fdr = q * len(effs)
        if not 0.0 < q_fdr < 1.0:
            raise UsageError(f"BH needs a family level q * J in (0, 1), got {q_fdr!r}")
        outcomes = weighted_bh(table, solution.weights, q_fdr)
    else:
        outcomes = weighted_bonferroni(table, solution)

    # ------------------------------
    # Step 4: outcomes file
    # ------------------------------
    metadata = RunMetadata.from_solution(solution, args.scheme, phi)
    out = args.output or DEFAULT_OUTPUT["test"]
    write_outcomes(out, outcomes, metadata)
    _summary("test", {
        "ids": len(table),
        "tail": tail,
        "scheme": args.scheme,
        "procedure": procedure,
        "method": solution.method,
        "q*": solution.q_star,
        "exact": solution.exact,
        "rejected": sum(o.rejected for o in outcomes),
    })
    logger.log_success(f"outcomes saved to {out}")
    return 0


def cmd_simulate(args, cfg) -> int:
    sim = cfg["simulate"]
    if args.design == "sparse" and args.seed is not None:
        raise UsageError("--seed only applies to --design comparison")
    if args.design == "comparison" and args.sigma is not None:
        raise UsageError("--sigma only applies to --design sparse")
    J = args.n_tests if args.n_tests is not None else int(sim["n_tests"])
    if J < 1:
        raise UsageError(f"--n-tests must be at least 1, got {J!r}")
    q = _resolve_q(args, J) if (args.q is not None or args.alpha is not None) else float(sim["q"])
    seed = args.seed if args.seed is not None else int(cfg["seed"])
    solver = cfg["solver"]
    tol, max_iter = float(solver["tol"]), int(solver["max_iter"])

    if args.design == "sparse":
        sigma = args.sigma if args.sigma is not None else float(sim["sigma"])
        frame = sparse_means_study(J, q, sim["pi1_grid"], float(sim["small_mean"]), float(sim["large_mean"]),
                                   sigma, tol=tol, max_iter=max_iter)
    else:
        frame = comparison_study(J, q, seed, sim["phis"], sim["betas"], sim["thresholds"],
                                 tol=tol, max_iter=max_iter)

    out = args.output or DEFAULT_OUTPUT["simulate"]
    output.save_csv(frame, out)
    logger.log_success(f"{args.design} study ({len(frame)} rows) saved to {out}")
    return 0


def cmd_sparse_power(args, cfg) -> int:
    sp = cfg["sparse_power"]
    q = args.q if args.q is not None else float(sp["q"])
    if not 0.0 < q < 1.0:
        raise UsageError(f"q must lie in (0, 1), got {q!r}")
    M = np.linspace(float(sp["m_min"]), float(sp["m_max"]), int(sp["m_steps"]))
    pi1 = np.linspace(float(sp["pi1_min"]), float(sp["pi1_max"]), int(sp["pi1_steps"]))
    ratio = power_ratio_grid(M, pi1, q)

    MM, PP = np.meshgrid(M, pi1, indexing="ij")
    frame = pd.DataFrame({"M": MM.ravel(), "pi1": PP.ravel(), "ratio": ratio.ravel()})
    out = args.output or DEFAULT_OUTPUT["sparse-power"]
    output.save_csv(frame, out)
    _summary("sparse power", {"q": q, "grid": f"{M.size} x {pi1.size}",
                              "min ratio": float(ratio.min()), "max ratio": float(ratio.max())})
    logger.log_success(f"ratio grid saved to {out}")
    return 0


def cmd_check_condition(args, cfg) -> int:
    _, effs, phi, tail = _load_study(args, cfg)
    J = len(effs)
    q = _resolve_q(args, J)
    alpha = args.alpha if args.alpha is not None else q * J
    if args.k < 1:
        raise UsageError(f"--k must be at least 1, got {args.k!r}")

    small_q = check_small_q_condition(effs, q)
    simple = check_simple_condition(effs, alpha, args.k)
    report = {
        "tests": J,
        "q": q,
        "small_q_condition": small_q.holds,
        "small_q_margin": small_q.margin,
        "alpha": alpha,
        "K": args.k,
        "simple_condition": simple.holds,
        "z_abs": simple.z_abs,
        "z_asymptotic": simple.z_asymptotic,
        "qualifying_tests": simple.count,
    }
    _summary("conditions", report)
    if args.output:
        output.save_json(report, args.output)
        logger.log_success(f"report saved to {args.output}")
    return 0


HANDLERS = {
    "weights": cmd_weights,
    "test": cmd_test,
    "simulate": cmd_simulate,
    "sparse-power": cmd_sparse_power,
    "check-condition": cmd_check_condition,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logger.set_verbosity(args.verbose)
    try:
        cfg = load_config(args.config)
        return HANDLERS[args.command](args, cfg)
    except UsageError as exc:
        logger.log_error(f"usage: {exc}")
        return 2
    except WeightingError as exc:
        logger.log_error(str(exc))
        return 1
    except OSError as exc:
        logger.log_error(f"I/O error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
