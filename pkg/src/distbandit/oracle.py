"""Offline optimum, KKT certificate, and bias/regret diagnostics.

``solve_offline`` maximizes the exact utility over the floored simplex
by deterministic mirror ascent (exact centered gradients, no sampling)
from multiple starts, then polishes the best iterate with a constant
step until the KKT certificate stops improving.  The certificate is
the spread of gradient components over the coordinates sitting above
the floor: at an optimum those must coincide.

``bias_mc`` measures, by paired Monte Carlo, how far a data-driven
score snapshot pulls the one-sample gradient estimate away from its
exact-score counterpart at the same weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .simplex import check_floor, kl_project_floor, mw_update, sample_floored
from .utilities import CachedUtility, DEFAULT_GRID

ACTIVE_EPS = 1e-6  # floor clearance defining the certificate's active set
CERT_FLAG = 1e-4  # certificates above this mark the result as unconverged
REFINE_TOL = 1e-5  # required agreement between ascent and 1-D refinement


@dataclass(frozen=True)
class OracleResult:
    wstar: np.ndarray
    ustar: float
    certificate: float
    flagged: bool
    iters: int
    meta: dict


def kkt_certificate(w, g, gamma: float, active_eps: float = ACTIVE_EPS) -> float:
    """Max |g_i - g_j| over pairs of coordinates above the floor."""
    w = np.asarray(w, dtype=float)
    g = np.asarray(g, dtype=float)
    active = g[w > gamma + active_eps]
    if active.size <= 1:
        return 0.0
    return float(active.max() - active.min())


def active_support(w, gamma: float, tol: float = 1e-4) -> int:
    """Number of coordinates strictly above the floor (w_k > gamma + tol)."""
    return int(np.sum(np.asarray(w) > gamma + tol))


def solve_offline(arms, spec, gamma: float, grid: int = DEFAULT_GRID,
                  iters: int = 200_000, n_starts: int = 8, seed: int = 0,
                  polish_iters: int = 50_000, polish_eta: float = 0.2,
                  cache: CachedUtility | None = None) -> OracleResult:
    """Maximize U over the floored simplex; return the argmax and a certificate.

    Phase 1 runs mirror ascent with eta_t = 0.5/sqrt(t) simultaneously
    from the uniform start and ``n_starts`` random interior starts.
    The decaying schedule alone leaves the iterate short of certificate
    accuracy, so phase 2 continues from the best start with a constant
    step, keeping the best value seen and stopping once the certificate
    bottoms out.  For K = 2 the segment w = (1-a, a) is additionally
    refined by bounded 1-D search and the two answers must agree to
    ``REFINE_TOL`` in U, otherwise the result is flagged.
    """
    k = len(arms)
    check_floor(k, gamma)
    if cache is None:
        cache = CachedUtility(arms, spec, m=grid)
    rng = np.random.default_rng(seed)
    W = np.vstack([np.full(k, 1.0 / k), sample_floored(k, gamma, rng, size=n_starts)])
    for t in range(1, iters + 1):
        G = cache.gradient_batch(W)
        W = kl_project_floor(mw_update(W, G, 0.5 / np.sqrt(t)), gamma)
    vals = cache.value_batch(W)
    best = int(np.argmax(vals))
    w_best, v_best = W[best], float(vals[best])
    spread = float(vals.max() - vals.min())

    # Constant-step polish from the best start.
    w, chunk, cert_prev = w_best.copy(), 1000, np.inf
    used = iters
    for _ in range(max(polish_iters // chunk, 1)):
        for _ in range(chunk):
            w = kl_project_floor(mw_update(w, cache.gradient(w), polish_eta), gamma)
        used += chunk
        v = float(cache.value(w))
        if v >= v_best:
            w_best, v_best = w.copy(), v
        cert = kkt_certificate(w, cache.gradient(w), gamma)
        if cert < 1e-12 or cert >= cert_prev:
            break
        cert_prev = cert

    meta = {"start_value_spread": spread}
    flagged = False
    if k == 2:
        res = minimize_scalar(
            lambda a: -cache.value(np.array([1.0 - a, a])),
            bounds=(gamma, 1.0 - gamma), method="bounded",
            options={"xatol": 1e-9},
        )
        w_ref = np.array([1.0 - res.x, res.x])
        v_ref = float(-res.fun)
        meta["refine_gap"] = abs(v_ref - v_best)
        if meta["refine_gap"] > REFINE_TOL:
            flagged = True
        if v_ref > v_best:
            w_best, v_best = w_ref, v_ref

    certificate = kkt_certificate(w_best, cache.gradient(w_best), gamma)
    flagged = flagged or certificate > CERT_FLAG
    return OracleResult(
        wstar=w_best, ustar=v_best, certificate=certificate,
        flagged=flagged, iters=used, meta=meta,
    )


@dataclass(frozen=True)
class BiasEstimate:
    """Componentwise mean and standard error of Ghat - G over paired draws."""

    b: np.ndarray
    se: np.ndarray
    n: int

    @property
    def inf_norm(self) -> float:
        return float(np.max(np.abs(self.b)))


def bias_mc(w, arms, snap_hat, snap_exact, n_mc: int, rng: np.random.Generator) -> BiasEstimate:
    """Paired Monte Carlo estimate of the score-estimation bias at w.

    Draws (A, R) once per replicate and evaluates both snapshots on the
    same rewards, so the difference

        Ghat_k - G_k = (1{A=k}/w_k - 1) (IF_hat(R) - IF(R))

    isolates the snapshot error.  With identical snapshots the estimate
    is exactly zero.
    """
    if n_mc < 2:
        raise ValueError("need at least 2 Monte Carlo draws")
    w = np.asarray(w, dtype=float)
    k = w.shape[0]
    cum = np.cumsum(w)
    a_idx = np.minimum(np.searchsorted(cum, rng.random(n_mc) * cum[-1], side="right"), k - 1)
    r = np.empty(n_mc)
    for j in range(k):
        mask = a_idx == j
        cnt = int(mask.sum())
        if cnt:
            r[mask] = arms[j].sample(rng, cnt)
    delta = np.asarray(snap_hat(r)) - np.asarray(snap_exact(r))
    factor = np.full((n_mc, k), -1.0)
    factor[np.arange(n_mc), a_idx] += 1.0 / w[a_idx]
    d = factor * delta[:, None]
    return BiasEstimate(b=d.mean(axis=0), se=d.std(axis=0, ddof=1) / np.sqrt(n_mc), n=n_mc)


def regret_accumulate(trace, ustar: float) -> dict:
    """Cumulative regret sum_t (ustar - U(w_t)) and the recorded gap curve."""
    inst = ustar - np.asarray(trace.u_iterates)
    return {
        "regret": float(inst.sum()),
        "regret_curve": np.cumsum(inst),
        "gap_curve": np.asarray(trace.gaps),
    }
