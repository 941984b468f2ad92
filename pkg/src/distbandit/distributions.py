"""Reward laws on bounded supports, empirical arms, and mixture views.

Every law exposes a common surface: ``cdf``, ``pdf`` (where it exists),
``quantile``, ``mean``, ``second_moment``, ``variance`` and inverse-cdf
``sample``.  All of them accept scalars or numpy arrays and are safe to
evaluate anywhere on the real line (the cdf clamps to 0/1 outside the
support).  Laws are immutable after construction; the one deliberately
mutable object is :class:`EmpiricalArm`, which accumulates observations
one reward at a time.
"""

from __future__ import annotations

import bisect
import math

import numpy as np
from scipy import special

# Absolute tolerance for bisection-based quantile inversion.
BISECT_TOL = 1e-10


def _as_float_array(x):
    """Return (array, was_scalar) for scalar-or-array input."""
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def bisect_quantile(cdf, lo, hi, p, tol=BISECT_TOL):
    """Invert a monotone cdf by bisection on [lo, hi].

    Returns the smallest ``x`` with ``cdf(x) >= p``, up to absolute
    tolerance ``tol``.  ``cdf`` must accept numpy arrays; ``p`` may be a
    scalar or an array and the bisection runs on all entries at once.
    """
    p_arr, scalar = _as_float_array(p)
    if np.any((p_arr < 0.0) | (p_arr > 1.0)):
        raise ValueError("quantile levels must lie in [0, 1]")
    lo_b = np.full(p_arr.shape, float(lo))
    hi_b = np.full(p_arr.shape, float(hi))
    n_iter = max(1, math.ceil(math.log2(max(hi - lo, tol) / tol)))
    for _ in range(n_iter):
        mid = 0.5 * (lo_b + hi_b)
        below = np.asarray(cdf(mid)) < p_arr
        lo_b = np.where(below, mid, lo_b)
        hi_b = np.where(below, hi_b, mid)
    # The upper bracket maintains cdf(hi_b) >= p throughout.
    return float(hi_b) if scalar else hi_b


class ArmLaw:
    """Base class for reward laws on a bounded interval [lo, hi].

    Subclasses implement ``cdf``, ``pdf``, ``quantile``, ``mean`` and
    ``second_moment``; ``variance`` and inverse-cdf ``sample`` are
    derived here.
    """

    lo: float
    hi: float

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def quantile(self, p):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        return self.second_moment() - self.mean() ** 2

    def sample(self, rng: np.random.Generator, size=None):
        """Draw via the inverse cdf, one uniform variate per sample.

        Using the quantile transform keeps every law on the same stream
        discipline (exactly one uniform consumed per draw), which makes
        runs reproducible and keeps truncated laws exactly inside their
        support.
        """
        return self.quantile(rng.random(size))

    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)


class BetaArm(ArmLaw):
    """Beta(a, b) reward law on [0, 1].

    Parameters
    ----------
    a, b : float
        Shape parameters, both strictly positive.

    Examples
    --------
    >>> arm = BetaArm(4.0, 2.0)
    >>> round(arm.mean(), 6)
    0.666667
    >>> round(arm.second_moment(), 6)
    0.47619
    """

    def __init__(self, a: float, b: float):
        if not (a > 0.0 and b > 0.0):
            raise ValueError(f"Beta shapes must be positive, got a={a}, b={b}")
        self.a = float(a)
        self.b = float(b)
        self.lo = 0.0
        self.hi = 1.0

    def cdf(self, x):
        arr, scalar = _as_float_array(x)
        out = special.betainc(self.a, self.b, np.clip(arr, 0.0, 1.0))
        return float(out) if scalar else out

    def pdf(self, x):
        arr, scalar = _as_float_array(x)
        inside = (arr >= 0.0) & (arr <= 1.0)
        z = np.clip(arr, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(
                inside,
                np.power(z, self.a - 1.0)
                * np.power(1.0 - z, self.b - 1.0)
                / special.beta(self.a, self.b),
                0.0,
            )
        return float(out) if scalar else out

    def quantile(self, p):
        arr, scalar = _as_float_array(p)
        if np.any((arr < 0.0) | (arr > 1.0)):
            raise ValueError("quantile levels must lie in [0, 1]")
        out = special.betaincinv(self.a, self.b, arr)
        return float(out) if scalar else out

    def mean(self) -> float:
        return self.a / (self.a + self.b)

    def second_moment(self) -> float:
        s = self.a + self.b
        return self.a * (self.a + 1.0) / (s * (s + 1.0))

    def __repr__(self):
        return f"BetaArm(a={self.a:g}, b={self.b:g})"


class TruncatedGaussianArm(ArmLaw):
    """Gaussian N(mu, sigma2) conditioned on (renormalized over) [lo, hi].

    Sampling goes through the inverse cdf, so draws land in [lo, hi]
    exactly rather than by rejection.
    """

    def __init__(self, mu: float, sigma2: float, lo: float, hi: float):
        if sigma2 <= 0.0:
            raise ValueError(f"sigma2 must be positive, got {sigma2}")
        if not lo < hi:
            raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
        self.mu = float(mu)
        self.sigma2 = float(sigma2)
        self.sigma = math.sqrt(sigma2)
        self.lo = float(lo)
        self.hi = float(hi)
        self._alpha = (self.lo - self.mu) / self.sigma
        self._beta = (self.hi - self.mu) / self.sigma
        self._z = special.ndtr(self._beta) - special.ndtr(self._alpha)
        if self._z < 1e-12:
            raise ValueError("truncation interval carries negligible mass")
        self._cdf_lo = special.ndtr(self._alpha)

    def cdf(self, x):
        arr, scalar = _as_float_array(x)
        t = (np.clip(arr, self.lo, self.hi) - self.mu) / self.sigma
        out = (special.ndtr(t) - self._cdf_lo) / self._z
        out = np.clip(out, 0.0, 1.0)
        return float(out) if scalar else out

    def pdf(self, x):
        arr, scalar = _as_float_array(x)
        inside = (arr >= self.lo) & (arr <= self.hi)
        t = (arr - self.mu) / self.sigma
        out = np.where(
            inside,
            np.exp(-0.5 * t * t) / (math.sqrt(2.0 * math.pi) * self.sigma * self._z),
            0.0,
        )
        return float(out) if scalar else out

    def quantile(self, p):
        arr, scalar = _as_float_array(p)
        if np.any((arr < 0.0) | (arr > 1.0)):
            raise ValueError("quantile levels must lie in [0, 1]")
        out = self.mu + self.sigma * special.ndtri(self._cdf_lo + arr * self._z)
        out = np.clip(out, self.lo, self.hi)
        return float(out) if scalar else out

    def _phi(self, t: float) -> float:
        return math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)

    def mean(self) -> float:
        return self.mu + self.sigma * (self._phi(self._alpha) - self._phi(self._beta)) / self._z

    def second_moment(self) -> float:
        pa, pb = self._phi(self._alpha), self._phi(self._beta)
        var = self.sigma2 * (
            1.0
            + (self._alpha * pa - self._beta * pb) / self._z
            - ((pa - pb) / self._z) ** 2
        )
        return var + self.mean() ** 2

    def variance(self) -> float:
        pa, pb = self._phi(self._alpha), self._phi(self._beta)
        return self.sigma2 * (
            1.0
            + (self._alpha * pa - self._beta * pb) / self._z
            - ((pa - pb) / self._z) ** 2
        )

    def __repr__(self):
        return (
            f"TruncatedGaussianArm(mu={self.mu:g}, sigma2={self.sigma2:g}, "
            f"lo={self.lo:g}, hi={self.hi:g})"
        )


class UniformArm(ArmLaw):
    """Uniform law on [lo, hi]."""

    def __init__(self, lo: float, hi: float):
        if not lo < hi:
            raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)

    def cdf(self, x):
        arr, scalar = _as_float_array(x)
        out = np.clip((arr - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        return float(out) if scalar else out

    def pdf(self, x):
        arr, scalar = _as_float_array(x)
        out = np.where((arr >= self.lo) & (arr <= self.hi), 1.0 / (self.hi - self.lo), 0.0)
        return float(out) if scalar else out

    def quantile(self, p):
        arr, scalar = _as_float_array(p)
        if np.any((arr < 0.0) | (arr > 1.0)):
            raise ValueError("quantile levels must lie in [0, 1]")
        out = self.lo + arr * (self.hi - self.lo)
        return float(out) if scalar else out

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def second_moment(self) -> float:
        # E[X^2] = (hi^3 - lo^3) / (3 (hi - lo))
        return (self.hi**3 - self.lo**3) / (3.0 * (self.hi - self.lo))

    def __repr__(self):
        return f"UniformArm(lo={self.lo:g}, hi={self.hi:g})"


class EmpiricalArm:
    """Running record of rewards observed from one arm.

    Keeps the samples sorted so the empirical cdf is a cheap
    ``searchsorted``; also tracks count, sum and sum of squares for
    moment estimators.  The cdf is the usual right-continuous step
    function with jumps of 1/count.
    """

    def __init__(self, lo: float, hi: float):
        if not lo < hi:
            raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)
        self._sorted: list[float] = []
        self.sum = 0.0
        self.sum_sq = 0.0
        self._cache: np.ndarray | None = None

    @property
    def count(self) -> int:
        return len(self._sorted)

    @property
    def samples(self) -> np.ndarray:
        if self._cache is None:
            self._cache = np.asarray(self._sorted, dtype=float)
        return self._cache

    def add(self, r: float) -> None:
        r = float(r)
        if not (self.lo <= r <= self.hi):
            raise ValueError(f"reward {r} outside support [{self.lo}, {self.hi}]")
        bisect.insort(self._sorted, r)
        self.sum += r
        self.sum_sq += r * r
        self._cache = None

    def cdf(self, x):
        if not self._sorted:
            raise ValueError("empirical cdf undefined with zero samples")
        arr, scalar = _as_float_array(x)
        out = np.searchsorted(self.samples, arr, side="right") / self.count
        return float(out) if scalar else out

    def quantile(self, p):
        if not self._sorted:
            raise ValueError("empirical quantile undefined with zero samples")
        arr, scalar = _as_float_array(p)
        if np.any((arr < 0.0) | (arr > 1.0)):
            raise ValueError("quantile levels must lie in [0, 1]")
        idx = np.maximum(np.ceil(arr * self.count).astype(int) - 1, 0)
        out = self.samples[idx]
        return float(out) if scalar else out

    def mean(self) -> float:
        if not self._sorted:
            raise ValueError("no samples")
        return self.sum / self.count

    def second_moment(self) -> float:
        if not self._sorted:
            raise ValueError("no samples")
        return self.sum_sq / self.count

    def __repr__(self):
        return f"EmpiricalArm(n={self.count}, lo={self.lo:g}, hi={self.hi:g})"


class Mixture:
    """Weighted mixture of laws: cdf/pdf are convex combinations.

    The quantile has no closed form and is found by bisection to
    absolute tolerance ``BISECT_TOL``.
    """

    def __init__(self, arms, weights):
        arms = list(arms)
        w = np.asarray(weights, dtype=float)
        if len(arms) != w.shape[-1]:
            raise ValueError("one weight per arm required")
        if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be a probability vector")
        self.arms = arms
        self.weights = w
        self.lo = min(a.lo for a in arms)
        self.hi = max(a.hi for a in arms)

    def cdf(self, x):
        arr, scalar = _as_float_array(x)
        out = np.zeros(arr.shape)
        for wk, arm in zip(self.weights, self.arms):
            if wk != 0.0:
                out += wk * arm.cdf(arr)
        return float(out) if scalar else out

    def pdf(self, x):
        arr, scalar = _as_float_array(x)
        out = np.zeros(arr.shape)
        for wk, arm in zip(self.weights, self.arms):
            if wk != 0.0:
                out += wk * arm.pdf(arr)
        return float(out) if scalar else out

    def quantile(self, p):
        return bisect_quantile(self.cdf, self.lo, self.hi, p)

    def mean(self) -> float:
        return float(sum(wk * a.mean() for wk, a in zip(self.weights, self.arms)))

    def second_moment(self) -> float:
        return float(sum(wk * a.second_moment() for wk, a in zip(self.weights, self.arms)))

    def variance(self) -> float:
        return self.second_moment() - self.mean() ** 2


def _resolve_support(f, g, lo, hi):
    if lo is None or hi is None:
        if abs(f.lo - g.lo) > 1e-12 or abs(f.hi - g.hi) > 1e-12:
            raise ValueError(
                "supports differ; pass lo/hi explicitly to compare on a common interval"
            )
        lo, hi = f.lo, f.hi
    return float(lo), float(hi)


def w1_distance(f, g, lo=None, hi=None, m: int = 4096) -> float:
    """1-Wasserstein distance via the L1 norm of the cdf difference.

    W1(F, G) = int |F(x) - G(x)| dx, evaluated with the trapezoid rule
    on ``m + 1`` uniform nodes spanning the (common) support.  Pass
    ``lo``/``hi`` to integrate over an explicit interval when the two
    laws are declared on different supports.
    """
    lo, hi = _resolve_support(f, g, lo, hi)
    nodes = np.linspace(lo, hi, m + 1)
    return float(np.trapezoid(np.abs(f.cdf(nodes) - g.cdf(nodes)), nodes))


def w2_distance(f, g, m: int = 4096) -> float:
    """2-Wasserstein distance via the quantile-space L2 norm.

    W2(F, G)^2 = int_0^1 (F^{-1}(u) - G^{-1}(u))^2 du, evaluated by the
    midpoint rule on the interior grid u = (i + 1/2)/m.  Works for any
    pair of laws with quantile maps; supports need not match.
    """
    u = (np.arange(m) + 0.5) / m
    diff = np.asarray(f.quantile(u)) - np.asarray(g.quantile(u))
    return float(math.sqrt(np.mean(diff * diff)))
