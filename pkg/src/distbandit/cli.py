"""Command-line front end.

``distbandit run``     run a batch experiment and write CSV/JSON output.
``distbandit oracle``  solve the offline problem and print the optimum.

Exit codes: 0 success, 2 configuration error, 3 output I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .experiment import (
    MODE_CHOICES,
    UTILITIES,
    ConfigError,
    OutputError,
    make_utility_spec,
    parse_config,
    run_experiment,
)
from .oracle import active_support, solve_offline
from .scenarios import SCENARIO_NAMES, build_scenario
from .engine import SCHEDULES


def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", choices=SCENARIO_NAMES, default=None,
                   help="benchmark arm family (default S1)")
    p.add_argument("--utility", choices=UTILITIES, default=None,
                   help="objective to maximize (default variance)")
    p.add_argument("--gamma", type=float, default=None, help="simplex floor (default 0.03)")
    p.add_argument("--seed", type=int, default=None, help="experiment seed (default 0)")
    p.add_argument("--grid", type=int, default=None,
                   help="quadrature nodes for Wasserstein machinery (default 4096)")
    p.add_argument("--oracle-iters", dest="oracle_iters", type=int, default=None,
                   help="offline solver iterations (default 200000)")
    p.add_argument("--config", default=None, help="JSON config file; flags override its keys")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distbandit",
        description="Bandit maximization of distributional utilities over reward mixtures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run episodes and write aggregated curves")
    _add_shared(run_p)
    run_p.add_argument("--mode", choices=MODE_CHOICES, default=None,
                       help="score snapshots: exact, estimated, or both (default both)")
    run_p.add_argument("--T", type=int, default=None, help="rounds per episode (default 2000)")
    run_p.add_argument("--episodes", type=int, default=None, help="episodes per mode (default 500)")
    run_p.add_argument("--eta0", type=float, default=None, help="base step size (default 0.5)")
    run_p.add_argument("--schedule", choices=SCHEDULES, default=None,
                       help="step-size schedule (default inv_sqrt)")
    run_p.add_argument("--out", default=None, help="output directory (required)")
    run_p.add_argument("--alpha0", type=float, default=None,
                       help="pseudo-observations of the estimation prior (default 1.0)")
    run_p.add_argument("--bias-every", dest="bias_every", type=int, default=None,
                       help="bias Monte Carlo cadence in rounds; 0 disables (default 25)")
    run_p.add_argument("--n-mc", dest="n_mc", type=int, default=None,
                       help="Monte Carlo draws per bias checkpoint (default 1000)")
    run_p.add_argument("--jobs", type=int, default=None,
                       help="worker processes; 0 = all cores (default 0)")
    run_p.add_argument("--plots", action="store_true", default=None,
                       help="also write SVG plots of the aggregated curves")

    oracle_p = sub.add_parser("oracle", help="print the offline optimum for a scenario")
    _add_shared(oracle_p)
    return parser


_RUN_KEYS = ("scenario", "utility", "mode", "T", "episodes", "gamma", "eta0", "schedule",
             "seed", "out", "alpha0", "bias_every", "n_mc", "grid", "jobs", "plots",
             "oracle_iters")
_ORACLE_KEYS = ("scenario", "utility", "gamma", "seed", "grid", "oracle_iters")


def _run(args: argparse.Namespace) -> int:
    overrides = {k: getattr(args, k) for k in _RUN_KEYS}
    cfg = parse_config(args.config, overrides)
    summary = run_experiment(cfg)
    oracle = summary["oracle"]
    print(f"wrote {cfg.out}: scenario {cfg.scenario}, utility {cfg.utility}, "
          f"{cfg.episodes} episode(s) x {summary['config']['mode']}")
    print(f"  offline optimum U* = {oracle['ustar']:.9g} "
          f"(certificate {oracle['certificate']:.3g}{', FLAGGED' if oracle['flagged'] else ''})")
    for mode, stats in summary["modes"].items():
        print(f"  {mode:>9}: final gap {stats['final_gap_mean']:.3e} "
              f"+/- {stats['final_gap_se']:.1e}")
    return 0


def _oracle(args: argparse.Namespace) -> int:
    overrides = {k: getattr(args, k) for k in _ORACLE_KEYS}
    cfg = parse_config(args.config, overrides)
    scenario = build_scenario(cfg.scenario, cfg.seed, cfg.arms)
    spec = make_utility_spec(cfg, scenario)
    res = solve_offline(scenario.arms, spec, cfg.gamma, grid=cfg.grid,
                        iters=cfg.oracle_iters, seed=cfg.seed)
    print(f"scenario {cfg.scenario} ({scenario.k} arms), utility {cfg.utility}, "
          f"gamma {cfg.gamma:g}")
    print("wstar = [" + ", ".join(f"{x:.9g}" for x in res.wstar) + "]")
    print(f"ustar = {res.ustar:.9g}")
    print(f"certificate = {res.certificate:.3g}{'  (FLAGGED: not converged)' if res.flagged else ''}")
    print(f"active support (w_k > gamma + 1e-4): {active_support(res.wstar, cfg.gamma)}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        return _oracle(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
