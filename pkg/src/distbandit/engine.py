"""The online mirror-ascent loop on the floored simplex.

Each round t: freeze a score snapshot from the history so far (exact
mixture scores in "exact" mode, shrunk/regularized estimates in
"estimated" mode), draw an arm from w_t, observe a reward, form the
one-sample gradient estimate, take a multiplicative-weights step, and
KL-project back onto {w : w_k >= gamma}.  Only then is the new
observation appended — the snapshot used at round t never sees round
t's data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .oracle import bias_mc
from .plugin import PluginState, PriorConfig, build_plugin_snapshot, score_gradient
from .simplex import kl_project_floor, mw_update
from .utilities import CachedUtility, DEFAULT_GRID, ScoreSnapshot

MODES = ("exact", "estimated")
SCHEDULES = ("constant", "inv_sqrt")


@dataclass(frozen=True)
class AscentConfig:
    """Knobs of one bandit episode."""

    T: int = 2000
    gamma: float = 0.03
    eta0: float = 0.5
    schedule: str = "inv_sqrt"
    mode: str = "estimated"
    grid: int = DEFAULT_GRID
    alpha0: float = 1.0
    bias_every: int = 0
    n_mc: int = 1000

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")


def step_size(eta0: float, schedule: str, t: int) -> float:
    """eta_t: constant eta0, or eta0 / sqrt(t)."""
    if schedule == "constant":
        return eta0
    if schedule == "inv_sqrt":
        return eta0 / np.sqrt(t)
    raise ValueError(f"unknown schedule {schedule!r}")


def draw_arm(w, rng: np.random.Generator) -> int:
    """Sample an index from the weight vector with a single uniform."""
    cum = np.cumsum(w)
    return int(min(np.searchsorted(cum, rng.random() * cum[-1], side="right"), len(cum) - 1))


@dataclass
class StepResult:
    w_next: np.ndarray
    arm: int
    reward: float
    ghat: np.ndarray
    snapshot: ScoreSnapshot


def step(w, t: int, arms, state: PluginState, cache: CachedUtility,
         cfg: AscentConfig, rng: np.random.Generator) -> StepResult:
    """One round of the loop; appends (arm, reward) to the state last."""
    if cfg.mode == "exact":
        snap = cache.snapshot(w, t=t)
    else:
        snap = build_plugin_snapshot(state, w, m=cfg.grid, t=t)
    a = draw_arm(w, rng)
    r = float(arms[a].sample(rng))
    ghat = score_gradient(w, a, r, snap)
    w_next = kl_project_floor(mw_update(w, ghat, step_size(cfg.eta0, cfg.schedule, t)), cfg.gamma)
    state.add(a, r)
    return StepResult(w_next, a, r, ghat, snap)


@dataclass
class EpisodeTrace:
    """Everything one episode records.

    ``ws[t-1]`` is the weight vector played at round t, ``wbars[t-1]``
    the running average over rounds 1..t, ``gaps[t-1]`` the exact
    suboptimality ustar - U(wbar_t), and ``u_iterates[t-1]`` = U(w_t)
    (the quantity regret sums).  Bias diagnostics are recorded on the
    checkpoint grid ``bias_ts``.
    """

    ws: np.ndarray
    wbars: np.ndarray
    u_iterates: np.ndarray
    gaps: np.ndarray
    pulls: np.ndarray
    bias_ts: np.ndarray
    bias_inf: np.ndarray
    bias_se_inf: np.ndarray
    state: PluginState = field(repr=False, default=None)

    @property
    def final_wbar(self) -> np.ndarray:
        return self.wbars[-1]

    @property
    def final_gap(self) -> float:
        return float(self.gaps[-1])


def run_episode(arms, spec, cfg: AscentConfig, wstar, ustar: float,
                seed, prior: PriorConfig | None = None,
                cache: CachedUtility | None = None) -> EpisodeTrace:
    """Run one episode of T rounds from the uniform start.

    ``seed`` may be an int or a ``numpy.random.SeedSequence``; two
    child streams are split off, one driving the arm/reward draws and
    one reserved for the bias Monte Carlo so that toggling diagnostics
    never changes the trajectory.  ``wstar``/``ustar`` come from the
    offline solver and are used only for the recorded gap curve.
    """
    k = len(arms)
    lo = min(a.lo for a in arms)
    hi = max(a.hi for a in arms)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    step_stream, bias_stream = [np.random.default_rng(s) for s in ss.spawn(2)]
    if cache is None:
        cache = CachedUtility(arms, spec, m=cfg.grid)
    state = PluginState.fresh(k, lo, hi, spec, prior=prior, alpha0=cfg.alpha0)

    w = kl_project_floor(np.full(k, 1.0 / k), cfg.gamma)
    wbar = np.zeros(k)
    ws = np.empty((cfg.T, k))
    wbars = np.empty((cfg.T, k))
    u_iter = np.empty(cfg.T)
    gaps = np.empty(cfg.T)
    pulls = np.zeros(k, dtype=int)
    b_ts, b_inf, b_se = [], [], []

    for t in range(1, cfg.T + 1):
        ws[t - 1] = w
        wbar += (w - wbar) / t
        wbars[t - 1] = wbar
        u_iter[t - 1] = cache.value(w)
        gaps[t - 1] = ustar - cache.value(wbar)
        do_bias = cfg.bias_every > 0 and t % cfg.bias_every == 0
        if do_bias:
            if cfg.mode == "exact":
                snap_hat = snap_exact = cache.snapshot(w, t=t)
            else:
                snap_hat = build_plugin_snapshot(state, w, m=cfg.grid, t=t)
                snap_exact = cache.snapshot(w, t=t)
            est = bias_mc(w, arms, snap_hat, snap_exact, cfg.n_mc, bias_stream)
            b_ts.append(t)
            b_inf.append(est.inf_norm)
            b_se.append(float(est.se.max()))
        res = step(w, t, arms, state, cache, cfg, step_stream)
        pulls[res.arm] += 1
        w = res.w_next

    return EpisodeTrace(
        ws=ws, wbars=wbars, u_iterates=u_iter, gaps=gaps, pulls=pulls,
        bias_ts=np.asarray(b_ts, dtype=int), bias_inf=np.asarray(b_inf),
        bias_se_inf=np.asarray(b_se), state=state,
    )
