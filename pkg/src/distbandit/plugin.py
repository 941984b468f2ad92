"""Data-driven score snapshots: shrunk moments and regularized cdfs.

With only a handful of observations per arm the raw empirical moments
and cdfs are too ragged to differentiate through, so every estimate is
shrunk toward a prior carrying ``alpha0`` pseudo-observations:

* moments:  mu_hat = (S + alpha0 m0) / (N + alpha0), and likewise for
  the second moment with prior value s0;
* cdfs:  F_hat = (N F_emp + alpha0 F_ref) / (N + alpha0), where the
  regularizing law is the reference Q of the Wasserstein objective.

The resulting plug-in snapshot is exactly centered under the estimated
mixture, and converges to the exact score as per-arm counts grow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .distributions import ArmLaw, EmpiricalArm
from .utilities import (
    DEFAULT_GRID,
    PotentialScore,
    ScoreSnapshot,
    TransportPotential,
    VarianceScore,
    _anchor_phi,
)


@dataclass(frozen=True)
class PriorConfig:
    """Pseudo-observation prior: alpha0 pulls toward (m0, s0)."""

    alpha0: float = 1.0
    m0: float = 0.5
    s0: float = 1.0 / 3.0

    def __post_init__(self):
        if self.alpha0 <= 0.0:
            raise ValueError("alpha0 must be positive")
        if self.s0 < self.m0**2:
            raise ValueError("prior moments must be feasible (s0 >= m0^2)")

    @classmethod
    def for_support(cls, lo: float, hi: float, alpha0: float = 1.0) -> "PriorConfig":
        """Moments of the uniform law on [lo, hi] as the prior target."""
        m0 = 0.5 * (lo + hi)
        s0 = (hi**3 - lo**3) / (3.0 * (hi - lo))
        return cls(alpha0=alpha0, m0=m0, s0=s0)


def shrunk_moments(arm: EmpiricalArm, prior: PriorConfig) -> tuple[float, float]:
    """Posterior-mean style moment estimates for one arm.

    Returns (mu_hat, m2_hat) = ((S + a0 m0)/(N + a0), (S2 + a0 s0)/(N + a0)).
    With zero observations this is exactly the prior pair.
    """
    n = arm.count
    mu = (arm.sum + prior.alpha0 * prior.m0) / (n + prior.alpha0)
    m2 = (arm.sum_sq + prior.alpha0 * prior.s0) / (n + prior.alpha0)
    return mu, m2


class RegularizedCdf:
    """Convex blend of an empirical cdf with a reference law's cdf."""

    def __init__(self, arm: EmpiricalArm, ref: ArmLaw, alpha0: float):
        if alpha0 <= 0.0:
            raise ValueError("alpha0 must be positive")
        self.arm = arm
        self.ref = ref
        self.alpha0 = float(alpha0)
        self.lo = arm.lo
        self.hi = arm.hi

    def cdf(self, x):
        n = self.arm.count
        ref_part = self.ref.cdf(x)
        if n == 0:
            return ref_part
        lam = n / (n + self.alpha0)
        return lam * self.arm.cdf(x) + (1.0 - lam) * ref_part


def regularized_cdf(arm: EmpiricalArm, ref: ArmLaw, alpha0: float, x):
    """Evaluate the shrunk cdf (N F_emp + alpha0 F_ref)/(N + alpha0) at x."""
    return RegularizedCdf(arm, ref, alpha0).cdf(x)


@dataclass
class PluginState:
    """Per-arm reward history plus the estimation configuration.

    The Wasserstein path keeps a lazily built table of empirical cdf
    rows on the snapshot grid; appending a reward refreshes only the
    affected arm's row.
    """

    arms_data: list
    prior: PriorConfig
    spec: object
    _grid_nodes: np.ndarray | None = field(default=None, repr=False)
    _emp_rows: np.ndarray | None = field(default=None, repr=False)
    _ref_row: np.ndarray | None = field(default=None, repr=False)
    _ref_mid: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def fresh(cls, k: int, lo: float, hi: float, spec, prior: PriorConfig | None = None,
              alpha0: float = 1.0) -> "PluginState":
        if prior is None:
            prior = PriorConfig.for_support(lo, hi, alpha0=alpha0)
        return cls(arms_data=[EmpiricalArm(lo, hi) for _ in range(k)], prior=prior, spec=spec)

    @property
    def k(self) -> int:
        return len(self.arms_data)

    @property
    def lo(self) -> float:
        return self.arms_data[0].lo

    @property
    def hi(self) -> float:
        return self.arms_data[0].hi

    def counts(self) -> np.ndarray:
        return np.array([a.count for a in self.arms_data])

    def add(self, k: int, r: float) -> None:
        self.arms_data[k].add(r)
        if self._emp_rows is not None:
            arm = self.arms_data[k]
            self._emp_rows[k] = np.searchsorted(arm.samples, self._grid_nodes, side="right") / arm.count

    def _ensure_grid(self, m: int) -> None:
        if self._grid_nodes is not None and self._grid_nodes.shape[0] == m + 1:
            return
        self._grid_nodes = np.linspace(self.lo, self.hi, m + 1)
        ref = self.spec.reference
        self._ref_row = np.asarray(ref.cdf(self._grid_nodes))
        u_mid = (np.arange(m) + 0.5) / m
        self._ref_mid = np.asarray(ref.quantile(u_mid))
        self._emp_rows = np.zeros((self.k, m + 1))
        for k, arm in enumerate(self.arms_data):
            if arm.count:
                self._emp_rows[k] = np.searchsorted(arm.samples, self._grid_nodes, side="right") / arm.count


def build_plugin_snapshot(state: PluginState, w, m: int = DEFAULT_GRID, t: int = 0) -> ScoreSnapshot:
    """Influence score at the estimated mixture, frozen for one round.

    Variance: shrunk per-arm moments are mixed with the current weights
    and plugged into the centered-square score.  Wasserstein: the
    regularized per-arm cdfs are mixed, transported onto the reference,
    and integrated into a potential; the centering constant is the mean
    of the potential under the regularized empirical mixture (weighted
    sample average plus an alpha0-weighted reference-quadrature term).
    """
    w = np.asarray(w, dtype=float)
    prior = state.prior
    if state.spec.kind == "variance":
        pairs = [shrunk_moments(a, prior) for a in state.arms_data]
        mu_hat = np.array([p[0] for p in pairs])
        m2_hat = np.array([p[1] for p in pairs])
        mu_w = float(w @ mu_hat)
        var_w = float(w @ m2_hat - mu_w**2)
        if var_w < -1e-12:
            raise AssertionError(f"shrunk mixture variance went negative: {var_w}")
        return VarianceScore(mu_w, max(var_w, 0.0), kind="estimated", t=t)

    state._ensure_grid(m)
    nodes = state._grid_nodes
    counts = state.counts()
    lam = counts / (counts + prior.alpha0)
    # Regularized mixture cdf on the grid.
    row_w = w * lam
    mix_cdf = row_w @ state._emp_rows + float(w @ (1.0 - lam)) * state._ref_row
    transport = np.asarray(state.spec.reference.quantile(np.clip(mix_cdf, 0.0, 1.0)))
    phi = _anchor_phi(nodes, cumulative_trapezoid(nodes - transport, nodes, initial=0.0))
    pot = TransportPotential(nodes, transport, phi)
    # E[phi] under the regularized empirical mixture.
    ref_mean = float(np.mean(np.interp(state._ref_mid, nodes, phi)))
    mean_phi = 0.0
    for k, arm in enumerate(state.arms_data):
        data_mean = float(np.mean(np.interp(arm.samples, nodes, phi))) if arm.count else 0.0
        mean_phi += w[k] * (lam[k] * data_mean + (1.0 - lam[k]) * ref_mean)
    return PotentialScore(pot, mean_phi, kind="estimated", t=t)


def score_gradient(w, a: int, r: float, snap: ScoreSnapshot) -> np.ndarray:
    """One-sample gradient estimate G_k = (1{a=k}/w_k - 1) * IF(r).

    Unbiased for the centered gradient when the snapshot is exact:
    E[diag(w) G] = g.  The importance weight 1/w_k stays bounded by
    1/gamma on the floored simplex.
    """
    w = np.asarray(w, dtype=float)
    val = float(snap(r))
    factor = -np.ones(w.shape)
    factor[a] += 1.0 / w[a]
    return factor * val
