"""Batch experiments: many episodes, aggregated curves, CSV/JSON output.

An experiment fixes a scenario, a utility and a mode set, solves the
offline problem once, then runs ``episodes`` independent episodes per
mode.  Episode e draws all of its randomness from the substream
SeedSequence((seed, e)), so results are reproducible bit-for-bit and
independent of how episodes are scheduled across workers: every episode
writes into its own slot and aggregation always reduces in index order.

Output files (UTF-8 CSV, header row, floats printed with 9 significant
digits):

* ``gap.csv``      t, mode, gap_mean, gap_se, n
* ``bias.csv``     t, mode, bias_inf_mean, bias_inf_se, n
* ``weights.csv``  mode, k, wbar_mean, wbar_se
* ``summary.json`` resolved config, scenario parameters, oracle result
* ``diag.csv``     cdf comparison on a 512-point grid (Wasserstein runs)
* ``gap.svg`` / ``bias.svg``  optional mean +/- SE plots
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .engine import MODES, SCHEDULES, AscentConfig, run_episode
from .oracle import solve_offline
from .scenarios import SCENARIO_NAMES, ScenarioSpec, build_scenario
from .simplex import check_floor
from .utilities import VarianceUtility, WassersteinUtility
from .distributions import UniformArm

DIAG_GRID = 512

UTILITIES = ("variance", "wasserstein")
MODE_CHOICES = MODES + ("both",)


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to exit code 2)."""


class OutputError(RuntimeError):
    """Failure writing result files (maps to exit code 3)."""


@dataclass
class ExperimentConfig:
    scenario: str = "S1"
    utility: str = "variance"
    mode: str = "both"
    T: int = 2000
    episodes: int = 500
    gamma: float = 0.03
    eta0: float = 0.5
    schedule: str = "inv_sqrt"
    seed: int = 0
    out: str | None = None
    alpha0: float = 1.0
    bias_every: int = 25
    n_mc: int = 1000
    grid: int = 4096
    jobs: int = 0  # 0 -> use all available cores
    plots: bool = False
    oracle_iters: int = 200_000
    arms: list | None = None  # custom scenario arm dicts
    reference: dict | None = None  # override for the Wasserstein target law

    def validate(self) -> "ExperimentConfig":
        if self.scenario not in SCENARIO_NAMES:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIO_NAMES}")
        if self.utility not in UTILITIES:
            raise ConfigError(f"unknown utility {self.utility!r}; choose from {UTILITIES}")
        if self.mode not in MODE_CHOICES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {MODE_CHOICES}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}; choose from {SCHEDULES}")
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if self.episodes < 1:
            raise ConfigError(f"episodes must be >= 1, got {self.episodes}")
        if self.eta0 <= 0:
            raise ConfigError(f"eta0 must be positive, got {self.eta0}")
        if self.alpha0 <= 0:
            raise ConfigError(f"alpha0 must be positive, got {self.alpha0}")
        if self.n_mc < 2:
            raise ConfigError(f"n_mc must be >= 2, got {self.n_mc}")
        if self.grid < 16:
            raise ConfigError(f"grid must be >= 16, got {self.grid}")
        if self.bias_every < 0:
            raise ConfigError(f"bias_every must be >= 0, got {self.bias_every}")
        if self.scenario == "custom" and not self.arms:
            raise ConfigError("custom scenario requires an 'arms' list in the config file")
        try:
            scenario = build_scenario(self.scenario, self.seed, self.arms)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        try:
            check_floor(scenario.k, self.gamma)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def resolved_jobs(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


_FIELD_NAMES = {f.name for f in dataclasses.fields(ExperimentConfig)}


def parse_config(file_path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Merge a JSON config file with explicit overrides (flags win).

    Unknown keys in either source are rejected rather than ignored, so
    a typo cannot silently fall back to a default.
    """
    merged: dict = {}
    if file_path is not None:
        try:
            with open(file_path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {file_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {file_path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        merged.update(loaded)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    unknown = sorted(set(merged) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config keys {unknown}; known keys: {sorted(_FIELD_NAMES)}")
    return ExperimentConfig(**merged).validate()


def make_utility_spec(cfg: ExperimentConfig, scenario: ScenarioSpec):
    if cfg.utility == "variance":
        return VarianceUtility()
    if cfg.reference is not None:
        from .scenarios import arm_from_dict

        return WassersteinUtility(reference=arm_from_dict(cfg.reference))
    return WassersteinUtility(reference=UniformArm(0.0, 1.0))


# ---------------------------------------------------------------------------
# Episode worker
# ---------------------------------------------------------------------------


def _episode_task(args):
    """Run one episode and reduce its trace to the aggregation payload."""
    cfg, scenario, spec, wstar, ustar, mode, ep = args
    acfg = AscentConfig(
        T=cfg.T, gamma=cfg.gamma, eta0=cfg.eta0, schedule=cfg.schedule,
        mode=mode, grid=cfg.grid, alpha0=cfg.alpha0,
        bias_every=cfg.bias_every, n_mc=cfg.n_mc,
    )
    trace = run_episode(
        scenario.arms, spec, acfg, wstar, ustar,
        seed=np.random.SeedSequence((cfg.seed, ep)),
    )
    xs = np.linspace(scenario.lo, scenario.hi, DIAG_GRID)
    emp = np.zeros(DIAG_GRID)
    total = trace.pulls.sum()
    for k, arm_data in enumerate(trace.state.arms_data):
        # Pool the observed rewards into one empirical mixture; arms the
        # episode never pulled (possible only for tiny T) contribute 0.
        if arm_data.count:
            emp += (arm_data.count / total) * arm_data.cdf(xs)
    return {
        "mode": mode,
        "ep": ep,
        "gaps": trace.gaps,
        "bias_ts": trace.bias_ts,
        "bias_inf": trace.bias_inf,
        "final_wbar": trace.final_wbar,
        "pulls": trace.pulls,
        "emp_mix": emp,
    }


# ---------------------------------------------------------------------------
# Aggregation and file output
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _mean_se(block: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    n = block.shape[axis]
    mean = block.mean(axis=axis)
    if n > 1:
        se = block.std(axis=axis, ddof=1) / np.sqrt(n)
    else:
        se = np.zeros_like(mean)
    return mean, se


def run_experiment(cfg: ExperimentConfig, progress=None) -> dict:
    """Solve the offline problem, run all episodes, write the output dir.

    Returns the summary dict (also serialized to ``summary.json``).
    ``progress`` may be a callable taking (done, total) for UIs.
    """
    cfg.validate()
    if not cfg.out:
        raise ConfigError("an output directory is required (--out or config key 'out')")
    scenario = build_scenario(cfg.scenario, cfg.seed, cfg.arms)
    spec = make_utility_spec(cfg, scenario)
    oracle = solve_offline(
        scenario.arms, spec, cfg.gamma, grid=cfg.grid,
        iters=cfg.oracle_iters, seed=cfg.seed,
    )
    modes = list(MODES) if cfg.mode == "both" else [cfg.mode]
    tasks = [
        (cfg, scenario, spec, oracle.wstar, oracle.ustar, mode, ep)
        for mode in modes
        for ep in range(cfg.episodes)
    ]

    results: dict[str, list] = {mode: [None] * cfg.episodes for mode in modes}
    jobs = cfg.resolved_jobs()
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, payload in enumerate(pool.map(_episode_task, tasks, chunksize=1)):
                results[payload["mode"]][payload["ep"]] = payload
                if progress:
                    progress(i + 1, len(tasks))
    else:
        for i, args in enumerate(tasks):
            payload = _episode_task(args)
            results[payload["mode"]][payload["ep"]] = payload
            if progress:
                progress(i + 1, len(tasks))

    try:
        os.makedirs(cfg.out, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {cfg.out}: {exc}") from exc
    gap_rows, bias_rows, weight_rows = [], [], []
    mode_stats = {}
    for mode in modes:
        payloads = results[mode]
        gaps = np.stack([p["gaps"] for p in payloads])  # (episodes, T)
        g_mean, g_se = _mean_se(gaps)
        for t in range(cfg.T):
            gap_rows.append((t + 1, mode, g_mean[t], g_se[t], cfg.episodes))
        if cfg.bias_every > 0:
            b_ts = payloads[0]["bias_ts"]
            b_inf = np.stack([p["bias_inf"] for p in payloads])
            b_mean, b_se = _mean_se(b_inf)
            for i, t in enumerate(b_ts):
                bias_rows.append((int(t), mode, b_mean[i], b_se[i], cfg.episodes))
        wbars = np.stack([p["final_wbar"] for p in payloads])
        w_mean, w_se = _mean_se(wbars)
        for k in range(scenario.k):
            weight_rows.append((mode, k, w_mean[k], w_se[k]))
        mode_stats[mode] = {
            "final_gap_mean": float(g_mean[-1]),
            "final_gap_se": float(g_se[-1]),
            "mean_pulls": np.stack([p["pulls"] for p in payloads]).mean(axis=0).tolist(),
            "final_wbar_mean": w_mean.tolist(),
        }

    try:
        _write_csv(os.path.join(cfg.out, "gap.csv"),
                   ["t", "mode", "gap_mean", "gap_se", "n"], gap_rows)
        _write_csv(os.path.join(cfg.out, "bias.csv"),
                   ["t", "mode", "bias_inf_mean", "bias_inf_se", "n"], bias_rows)
        _write_csv(os.path.join(cfg.out, "weights.csv"),
                   ["mode", "k", "wbar_mean", "wbar_se"], weight_rows)

        summary = {
            "config": _config_dict(cfg),
            "scenario": {"name": scenario.name, "k": scenario.k, **scenario.params},
            "oracle": {
                "wstar": oracle.wstar.tolist(),
                "ustar": oracle.ustar,
                "certificate": oracle.certificate,
                "flagged": oracle.flagged,
                "iters": oracle.iters,
            },
            "modes": mode_stats,
            "version": __version__,
        }
        with open(os.path.join(cfg.out, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")

        if cfg.utility == "wasserstein":
            emit_distribution_diagnostic(cfg, scenario, oracle, results, modes)
        if cfg.plots:
            _write_plots(cfg, modes, results)
    except OSError as exc:
        raise OutputError(f"failed writing outputs under {cfg.out}: {exc}") from exc
    return summary


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["jobs"] = cfg.resolved_jobs()
    return d


def emit_distribution_diagnostic(cfg: ExperimentConfig, scenario: ScenarioSpec,
                                 oracle, results: dict, modes: list) -> None:
    """Write diag.csv comparing oracle / learned / empirical mixture cdfs.

    The learned column mixes the exact arm cdfs with the mean final
    averaged weights; the empirical column is the pooled cdf of every
    reward the episodes actually observed (pull frequencies track the
    averaged weights, so it estimates the same mixture), averaged over
    episodes.  Uses the estimated mode when both ran, since that is the
    mode whose data drives the learning.
    """
    mode = "estimated" if "estimated" in modes else modes[0]
    payloads = results[mode]
    xs = np.linspace(scenario.lo, scenario.hi, DIAG_GRID)
    cdf_table = np.stack([a.cdf(xs) for a in scenario.arms])
    wbar = np.stack([p["final_wbar"] for p in payloads]).mean(axis=0)
    learned = wbar @ cdf_table
    oracle_col = oracle.wstar @ cdf_table
    emp = np.stack([p["emp_mix"] for p in payloads]).mean(axis=0)
    rows = zip(xs, oracle_col, learned, emp)
    _write_csv(os.path.join(cfg.out, "diag.csv"),
               ["x", "cdf_oracle_mixture", "cdf_learned_mixture", "cdf_empirical_mixture"],
               rows)


def _write_plots(cfg: ExperimentConfig, modes: list, results: dict) -> None:
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    ts = np.arange(1, cfg.T + 1)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for mode in modes:
        gaps = np.stack([p["gaps"] for p in results[mode]])
        mean, se = _mean_se(gaps)
        ax.plot(ts, mean, label=mode)
        ax.fill_between(ts, mean - se, mean + se, alpha=0.25)
    ax.set_xlabel("round t")
    ax.set_ylabel("suboptimality gap of averaged weights")
    ax.set_xscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(cfg.out, "gap.svg"))
    plt.close(fig)

    if cfg.bias_every > 0:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for mode in modes:
            b_ts = results[mode][0]["bias_ts"]
            if len(b_ts) == 0:
                continue
            b_inf = np.stack([p["bias_inf"] for p in results[mode]])
            mean, se = _mean_se(b_inf)
            ax.plot(b_ts, mean, label=mode)
            ax.fill_between(b_ts, mean - se, mean + se, alpha=0.25)
        ax.set_xlabel("round t")
        ax.set_ylabel("sup-norm of estimated score bias")
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(cfg.out, "bias.svg"))
        plt.close(fig)
