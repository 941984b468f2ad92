"""Benchmark arm families S1-S4 plus user-supplied custom arm lists."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import ArmLaw, BetaArm, TruncatedGaussianArm, UniformArm

# Salt mixed into the experiment seed when a scenario draws its own
# parameters, so the draw is independent of episode substreams.
_SCENARIO_SALT = 0x5C

SCENARIO_NAMES = ("S1", "S2", "S3", "S4", "custom")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    arms: tuple
    params: dict

    @property
    def k(self) -> int:
        return len(self.arms)

    @property
    def lo(self) -> float:
        return min(a.lo for a in self.arms)

    @property
    def hi(self) -> float:
        return max(a.hi for a in self.arms)


_ARM_KINDS = {
    "beta": (BetaArm, ("a", "b")),
    "truncgauss": (TruncatedGaussianArm, ("mu", "sigma2", "lo", "hi")),
    "uniform": (UniformArm, ("lo", "hi")),
}


def arm_from_dict(d: dict) -> ArmLaw:
    """Build an arm from a plain dict, e.g. {"kind": "beta", "a": 2, "b": 5}."""
    kind = d.get("kind")
    if kind not in _ARM_KINDS:
        raise ValueError(f"unknown arm kind {kind!r}; choose from {sorted(_ARM_KINDS)}")
    builder, fields = _ARM_KINDS[kind]
    missing = [f for f in fields if f not in d]
    extra = sorted(set(d) - set(fields) - {"kind"})
    if missing or extra:
        raise ValueError(f"arm spec {d}: missing {missing}, unknown {extra}")
    return builder(*[float(d[f]) for f in fields])


def arm_to_dict(arm: ArmLaw) -> dict:
    if isinstance(arm, BetaArm):
        return {"kind": "beta", "a": arm.a, "b": arm.b}
    if isinstance(arm, TruncatedGaussianArm):
        return {"kind": "truncgauss", "mu": arm.mu, "sigma2": arm.sigma2, "lo": arm.lo, "hi": arm.hi}
    if isinstance(arm, UniformArm):
        return {"kind": "uniform", "lo": arm.lo, "hi": arm.hi}
    raise ValueError(f"cannot serialize arm {arm!r}")


def build_scenario(name: str, seed: int = 0, custom_arms=None) -> ScenarioSpec:
    """Instantiate a named benchmark.

    S1: Beta(2,2), Beta(4,2) — two arms, one optimum off the vertices.
    S2: Beta(2,8), Beta(8,2), Beta(2,2), Beta(20,20) — spread/shape mix.
    S3: Beta(2, 1+3k) for k = 0..7 — an ordered family of eight arms.
    S4: thirty Gaussians truncated to [-2, 3], with means drawn
        uniformly from [-0.5, 1.5] and variances from [0.08, 0.35]
        once per experiment seed (recorded in ``params``).
    custom: arms supplied as a list of dicts (see ``arm_from_dict``).
    """
    if name == "S1":
        arms = (BetaArm(2, 2), BetaArm(4, 2))
    elif name == "S2":
        arms = (BetaArm(2, 8), BetaArm(8, 2), BetaArm(2, 2), BetaArm(20, 20))
    elif name == "S3":
        arms = tuple(BetaArm(2, 1 + 3 * k) for k in range(8))
    elif name == "S4":
        rng = np.random.default_rng(np.random.SeedSequence((seed, _SCENARIO_SALT)))
        means = rng.uniform(-0.5, 1.5, size=30)
        variances = rng.uniform(0.08, 0.35, size=30)
        arms = tuple(
            TruncatedGaussianArm(m, v, -2.0, 3.0) for m, v in zip(means, variances)
        )
    elif name == "custom":
        if not custom_arms:
            raise ValueError("custom scenario requires a non-empty arm list")
        arms = tuple(arm_from_dict(d) for d in custom_arms)
    else:
        raise ValueError(f"unknown scenario {name!r}; choose from {SCENARIO_NAMES}")
    return ScenarioSpec(name=name, arms=arms, params={"arms": [arm_to_dict(a) for a in arms]})
