"""Concave utilities of reward mixtures and their influence scores.

A mixture weight vector w induces the law P^w = sum_k w_k P^k.  The two
utilities implemented here are

* ``variance``:  U(w) = Var(P^w), rewarding spread, and
* ``wasserstein``:  U(w) = -W2(P^w, Q)^2 / 2, rewarding closeness of
  the mixture to a reference law Q.

Both admit an influence score IF[P] with E_P[IF[P](R)] = 0, and the
centered gradient of U at w has components g_k = E_{P^k}[IF[P^w](R)],
so <w, g> = 0.  For the variance the score is the centered square
(r - mean)^2 - var; for the Wasserstein objective it is built from the
Kantorovich potential phi(r) = int_0^r (s - T(s)) ds of the monotone
transport T = Q^{-1} o F_w.  Note the convention: phi generates the
*half* squared cost (its derivative is s - T(s), not 2(s - T(s))), so
the utility the score IF = -phi + E[phi] differentiates is -W2^2/2.
The half scaling changes nothing qualitative — argmax, support
structure and decay shapes are invariant to positive rescaling — but
it makes gradient = E[score] an identity rather than off by 2.

``CachedUtility`` precomputes per-arm cdf/pdf tables on a fixed grid so
the per-round exact evaluations inside the bandit loop and the offline
solver stay cheap; the stand-alone functions recompute everything from
scratch and serve as the reference implementations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .distributions import ArmLaw, Mixture, w2_distance

DEFAULT_GRID = 4096


@dataclass(frozen=True)
class VarianceUtility:
    """Marker for U(w) = Var(P^w)."""

    kind: str = "variance"


@dataclass(frozen=True)
class WassersteinUtility:
    """Marker for U(w) = -W2(P^w, Q)^2 / 2 against a reference law Q."""

    reference: ArmLaw = None
    kind: str = "wasserstein"

    def __post_init__(self):
        if self.reference is None:
            raise ValueError("wasserstein utility needs a reference law")


def arm_moment_vectors(arms) -> tuple[np.ndarray, np.ndarray]:
    """Per-arm means and second moments as vectors."""
    mu = np.array([a.mean() for a in arms])
    m2 = np.array([a.second_moment() for a in arms])
    return mu, m2


# ---------------------------------------------------------------------------
# Variance utility
# ---------------------------------------------------------------------------


def variance_utility(w, arms) -> float:
    """Var(P^w) = m2 . w - (mu . w)^2."""
    w = np.asarray(w, dtype=float)
    mu, m2 = arm_moment_vectors(arms)
    return float(m2 @ w - (mu @ w) ** 2)


def variance_influence(mean: float, var: float, r):
    """Influence score of the variance at a law with the given moments.

    IF(r) = (r - mean)^2 - var; integrates to zero under that law.
    """
    r = np.asarray(r, dtype=float)
    out = (r - mean) ** 2 - var
    return float(out) if out.ndim == 0 else out


def variance_gradient(w, arms) -> np.ndarray:
    """Centered gradient of the variance utility, in closed form.

    g_k = E_{P^k}[(R - mu_w)^2 - var_w]
        = m2_k - 2 mu_w mu_k + mu_w^2 - var_w.
    """
    w = np.asarray(w, dtype=float)
    mu, m2 = arm_moment_vectors(arms)
    mu_w = mu @ w
    var_w = m2 @ w - mu_w**2
    return m2 - 2.0 * mu_w * mu + (mu_w**2 - var_w)


# ---------------------------------------------------------------------------
# Wasserstein utility: transport potential and influence score
# ---------------------------------------------------------------------------


class TransportPotential:
    """Kantorovich potential of the monotone transport onto a reference.

    Holds a uniform grid of nodes over the source support together with
    the transport values T(node) = Q^{-1}(F(node)) and the potential
    phi(node) = int (s - T(s)) ds, anchored so that phi vanishes at 0
    (or at the left endpoint when 0 lies outside the support).
    Off-grid evaluation is linear interpolation, clamped at the ends.
    """

    def __init__(self, nodes: np.ndarray, transport: np.ndarray, phi: np.ndarray):
        self.nodes = nodes
        self.transport = transport
        self.phi = phi

    def phi_at(self, r):
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self.nodes, self.phi)
        return float(out) if out.ndim == 0 else out


def _anchor_phi(nodes: np.ndarray, phi_raw: np.ndarray) -> np.ndarray:
    anchor = 0.0 if nodes[0] <= 0.0 <= nodes[-1] else nodes[0]
    return phi_raw - np.interp(anchor, nodes, phi_raw)


def build_potential(mix, q: ArmLaw, m: int = DEFAULT_GRID, lo=None, hi=None) -> TransportPotential:
    """Tabulate the transport T = Q^{-1} o F and its potential phi.

    ``mix`` is any cdf-evaluable law (arm, mixture, regularized
    estimate) on a bounded support; ``q`` is the reference law.  The
    grid has ``m + 1`` uniform nodes on [lo, hi], defaulting to the
    support of ``mix``.
    """
    if lo is None:
        lo = mix.lo
    if hi is None:
        hi = mix.hi
    nodes = np.linspace(float(lo), float(hi), m + 1)
    transport = np.asarray(q.quantile(np.clip(mix.cdf(nodes), 0.0, 1.0)))
    phi_raw = cumulative_trapezoid(nodes - transport, nodes, initial=0.0)
    return TransportPotential(nodes, transport, _anchor_phi(nodes, phi_raw))


# ---------------------------------------------------------------------------
# Score snapshots
# ---------------------------------------------------------------------------


class ScoreSnapshot:
    """A frozen influence score r -> IF(r), tagged with provenance.

    ``kind`` records whether the score came from the exact mixture law
    ("exact") or from data-driven estimates ("estimated"); ``t`` is the
    round whose history the snapshot was built from.
    """

    kind: str
    t: int

    def __call__(self, r):
        raise NotImplementedError


class VarianceScore(ScoreSnapshot):
    def __init__(self, mean: float, var: float, kind: str, t: int = 0):
        self.mean = float(mean)
        self.var = float(var)
        self.kind = kind
        self.t = t

    def __call__(self, r):
        return variance_influence(self.mean, self.var, r)

    def __repr__(self):
        return f"VarianceScore(mean={self.mean:.6g}, var={self.var:.6g}, kind={self.kind!r})"


class PotentialScore(ScoreSnapshot):
    """Wasserstein influence score IF(r) = -phi(r) + mean_phi."""

    def __init__(self, potential: TransportPotential, mean_phi: float, kind: str, t: int = 0):
        self.potential = potential
        self.mean_phi = float(mean_phi)
        self.kind = kind
        self.t = t

    def __call__(self, r):
        out = -self.potential.phi_at(r) + self.mean_phi
        return float(out) if np.ndim(out) == 0 else out

    def __repr__(self):
        return f"PotentialScore(mean_phi={self.mean_phi:.6g}, kind={self.kind!r})"


# ---------------------------------------------------------------------------
# Exact evaluations (reference implementations)
# ---------------------------------------------------------------------------


def wasserstein_utility(w, arms, q: ArmLaw, m: int = DEFAULT_GRID) -> float:
    """U(w) = -W2(P^w, Q)^2 / 2 with the mixture quantile found by bisection."""
    return -0.5 * w2_distance(Mixture(arms, w), q, m=m) ** 2


def utility_value(w, arms, spec, m: int = DEFAULT_GRID) -> float:
    """Exact utility U(w) for either spec."""
    if spec.kind == "variance":
        return variance_utility(w, arms)
    return wasserstein_utility(w, arms, spec.reference, m=m)


def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    h = nodes[1] - nodes[0]
    wts = np.full(nodes.shape, h)
    wts[0] = wts[-1] = 0.5 * h
    return wts


def exact_snapshot(w, arms, spec, m: int = DEFAULT_GRID, t: int = 0) -> ScoreSnapshot:
    """Influence score of U at the exact mixture P^w."""
    w = np.asarray(w, dtype=float)
    if spec.kind == "variance":
        mu, m2 = arm_moment_vectors(arms)
        mu_w = float(mu @ w)
        var_w = float(m2 @ w - mu_w**2)
        return VarianceScore(mu_w, var_w, kind="exact", t=t)
    mix = Mixture(arms, w)
    pot = build_potential(mix, spec.reference, m=m)
    wts = _trapezoid_weights(pot.nodes)
    per_arm = np.array([(pot.phi * a.pdf(pot.nodes)) @ wts for a in arms])
    return PotentialScore(pot, float(w @ per_arm), kind="exact", t=t)


def centered_gradient(w, arms, spec, m: int = DEFAULT_GRID) -> np.ndarray:
    """Centered gradient g with g_k = E_{P^k}[IF[P^w](R)].

    Closed form for the variance; per-arm trapezoid quadrature of the
    potential against each arm density for the Wasserstein objective.
    Satisfies <w, g> = 0 by construction.
    """
    w = np.asarray(w, dtype=float)
    if spec.kind == "variance":
        return variance_gradient(w, arms)
    mix = Mixture(arms, w)
    pot = build_potential(mix, spec.reference, m=m)
    wts = _trapezoid_weights(pot.nodes)
    per_arm = np.array([(pot.phi * a.pdf(pot.nodes)) @ wts for a in arms])
    # g_k = -E_{P^k}[phi] + E_{P^w}[phi]
    return -per_arm + float(w @ per_arm)


# ---------------------------------------------------------------------------
# Cached evaluator used by the bandit loop and the offline solver
# ---------------------------------------------------------------------------


class CachedUtility:
    """Per-instance tables for fast exact values, gradients and scores.

    For the Wasserstein utility the per-arm cdf and pdf are tabulated
    once on an (m + 1)-node grid; a value, gradient or exact score at
    any w then costs a few vector operations instead of fresh
    quadratures.  Batched variants accept a (B, K) block of weight
    rows.  Agreement with the reference implementations is part of the
    test suite.
    """

    def __init__(self, arms, spec, m: int = DEFAULT_GRID):
        self.arms = list(arms)
        self.spec = spec
        self.m = m
        self.mu, self.m2 = arm_moment_vectors(self.arms)
        if spec.kind == "wasserstein":
            lo = min(a.lo for a in self.arms)
            hi = max(a.hi for a in self.arms)
            self.nodes = np.linspace(lo, hi, m + 1)
            self.cdf_table = np.stack([a.cdf(self.nodes) for a in self.arms])
            wts = _trapezoid_weights(self.nodes)
            # Row k integrates a grid function against arm k's density.
            self.quad_table = np.stack([a.pdf(self.nodes) * wts for a in self.arms])
            self.u_mid = (np.arange(m) + 0.5) / m
            self.ref_mid = np.asarray(spec.reference.quantile(self.u_mid))

    # -- values ------------------------------------------------------------

    def value(self, w) -> float:
        return float(self.value_batch(np.asarray(w, dtype=float)[None, :])[0])

    def value_batch(self, W: np.ndarray) -> np.ndarray:
        if self.spec.kind == "variance":
            return W @ self.m2 - (W @ self.mu) ** 2
        P = W @ self.cdf_table
        out = np.empty(W.shape[0])
        for i in range(W.shape[0]):
            # Mixture quantiles by inverting the tabulated cdf.
            xq = np.interp(self.u_mid, P[i], self.nodes)
            d = xq - self.ref_mid
            out[i] = -0.5 * np.mean(d * d)
        return out

    # -- gradients ----------------------------------------------------------

    def gradient(self, w) -> np.ndarray:
        return self.gradient_batch(np.asarray(w, dtype=float)[None, :])[0]

    def gradient_batch(self, W: np.ndarray) -> np.ndarray:
        if self.spec.kind == "variance":
            mu_w = W @ self.mu
            var_w = W @ self.m2 - mu_w**2
            return self.m2[None, :] - 2.0 * mu_w[:, None] * self.mu[None, :] + (
                mu_w**2 - var_w
            )[:, None]
        phi = self._phi_rows(W)
        per_arm = phi @ self.quad_table.T  # (B, K) of E_{P^k}[phi]
        mean_phi = np.sum(W * per_arm, axis=1, keepdims=True)
        return -per_arm + mean_phi

    def _phi_rows(self, W: np.ndarray) -> np.ndarray:
        P = np.clip(W @ self.cdf_table, 0.0, 1.0)
        transport = np.asarray(self.spec.reference.quantile(P))
        return cumulative_trapezoid(self.nodes[None, :] - transport, self.nodes, axis=1, initial=0.0)

    # -- exact score snapshots ----------------------------------------------

    def snapshot(self, w, t: int = 0) -> ScoreSnapshot:
        w = np.asarray(w, dtype=float)
        if self.spec.kind == "variance":
            mu_w = float(self.mu @ w)
            var_w = float(self.m2 @ w - mu_w**2)
            return VarianceScore(mu_w, var_w, kind="exact", t=t)
        phi = _anchor_phi(self.nodes, self._phi_rows(w[None, :])[0])
        transport = np.asarray(self.spec.reference.quantile(np.clip(w @ self.cdf_table, 0.0, 1.0)))
        pot = TransportPotential(self.nodes, transport, phi)
        mean_phi = float(w @ (self.quad_table @ phi))
        return PotentialScore(pot, mean_phi, kind="exact", t=t)
