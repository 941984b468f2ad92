"""Geometry of the probability simplex with a coordinate floor.

The learner lives on the truncated simplex {w : w_k >= gamma, sum w = 1}
with 0 < gamma < 1/K.  This module provides the softmax map and its
Jacobian, KL divergence, the multiplicative-weights update, and the KL
(I-projection) onto the floored simplex.  Vector arguments may carry
leading batch dimensions; the simplex axis is always the last one.
"""

from __future__ import annotations

import numpy as np


def check_floor(k: int, gamma: float) -> None:
    """Validate that the floor gamma leaves the truncated simplex nonempty."""
    if not (0.0 < gamma < 1.0 / k):
        raise ValueError(f"need 0 < gamma < 1/K, got gamma={gamma}, K={k}")


def sample_floored(k: int, gamma: float, rng: np.random.Generator, size=None):
    """Uniform-ish random points of the floored simplex.

    Draws Dirichlet(1) directions and shrinks them into
    {w : w_k >= gamma}: w = gamma + (1 - K gamma) * d.
    """
    check_floor(k, gamma)
    shape = (k,) if size is None else (size, k)
    g = rng.standard_exponential(shape)
    d = g / g.sum(axis=-1, keepdims=True)
    return gamma + (1.0 - k * gamma) * d


def softmax(h):
    """Map scores to the simplex, stabilized by max subtraction."""
    h = np.asarray(h, dtype=float)
    z = np.exp(h - h.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def softmax_jacobian(h) -> np.ndarray:
    """Jacobian of softmax at h: diag(w) - w w^T, with w = softmax(h).

    Symmetric, positive semidefinite, and every row sums to zero (mass
    is conserved along any score perturbation).
    """
    w = softmax(np.asarray(h, dtype=float))
    if w.ndim != 1:
        raise ValueError("softmax_jacobian expects a single score vector")
    return np.diag(w) - np.outer(w, w)


def kl_divergence(u, w) -> float:
    """KL(u || w) with the conventions 0 log 0 = 0 and support violation -> inf."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any((w == 0.0) & (u > 0.0)):
        return float("inf")
    mask = u > 0.0
    return float(np.sum(u[mask] * np.log(u[mask] / w[mask])))


def mw_update(w, g, eta: float):
    """Multiplicative-weights step: normalize w_k * exp(eta * g_k).

    The exponent is shifted by its max before exponentiation, which
    leaves the normalized result unchanged but avoids overflow.  This is
    the closed form of argmax_u  eta <g, u> - KL(u || w)  over the
    simplex.
    """
    w = np.asarray(w, dtype=float)
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient estimate contains non-finite entries")
    a = eta * g
    z = w * np.exp(a - a.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def kl_project_floor(w, gamma: float):
    """KL projection of a simplex point onto {u : u_k >= gamma, sum u = 1}.

    The minimizer of KL(u || w) clips a set S of coordinates to the
    floor and rescales the rest proportionally:

        u_k = gamma                     for k in S,
        u_k = c * w_k,  c = (1 - |S| gamma) / sum_{k not in S} w_k,
        S   = smallest set under which c * w_k >= gamma off S.

    S is grown greedily (any coordinate whose rescaled mass would fall
    below the floor joins the clipped set) and the loop stabilizes in at
    most K rounds.  Accepts a single vector or a batch of rows.
    """
    w = np.asarray(w, dtype=float)
    k = w.shape[-1]
    if not (0.0 < gamma < 1.0 / k):
        raise ValueError(f"need 0 < gamma < 1/K, got gamma={gamma}, K={k}")
    batched = w.ndim > 1
    rows = w.reshape(-1, k)
    clipped = np.zeros_like(rows, dtype=bool)
    for _ in range(k):
        n_clip = clipped.sum(axis=1, keepdims=True)
        free_mass = np.where(~clipped, rows, 0.0).sum(axis=1, keepdims=True)
        c = (1.0 - n_clip * gamma) / free_mass
        newly = (~clipped) & (c * rows < gamma)
        if not newly.any():
            break
        clipped |= newly
    out = np.where(clipped, gamma, c * rows)
    return out if batched else out.reshape(k)
