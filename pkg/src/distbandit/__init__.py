"""distbandit: bandit maximization of distributional utilities.

A K-armed bandit where the payoff is a concave functional of the
*mixture* of arm reward laws rather than of the mean reward: play
weights w on the floored simplex, observe one reward, nudge w by a
one-sample influence-score gradient, repeat.  Ships exact and
estimated score snapshots, an offline oracle with a KKT certificate,
bias/regret diagnostics, benchmark scenarios and a CLI.
"""

__version__ = "0.1.0"

from .distributions import (
    ArmLaw,
    BetaArm,
    EmpiricalArm,
    Mixture,
    TruncatedGaussianArm,
    UniformArm,
    w1_distance,
    w2_distance,
)
from .engine import AscentConfig, EpisodeTrace, run_episode, step, step_size
from .oracle import (
    BiasEstimate,
    OracleResult,
    active_support,
    bias_mc,
    regret_accumulate,
    solve_offline,
)
from .plugin import (
    PluginState,
    PriorConfig,
    build_plugin_snapshot,
    regularized_cdf,
    score_gradient,
    shrunk_moments,
)
from .simplex import (
    kl_divergence,
    kl_project_floor,
    mw_update,
    sample_floored,
    softmax,
    softmax_jacobian,
)
from .utilities import (
    CachedUtility,
    ScoreSnapshot,
    TransportPotential,
    VarianceUtility,
    WassersteinUtility,
    build_potential,
    centered_gradient,
    exact_snapshot,
    utility_value,
    variance_gradient,
    variance_influence,
    variance_utility,
    wasserstein_utility,
)
from .scenarios import ScenarioSpec, build_scenario
from .experiment import ExperimentConfig, parse_config, run_experiment

__all__ = [
    "ArmLaw", "BetaArm", "TruncatedGaussianArm", "UniformArm", "EmpiricalArm",
    "Mixture", "w1_distance", "w2_distance",
    "softmax", "softmax_jacobian", "kl_divergence", "mw_update",
    "kl_project_floor", "sample_floored",
    "VarianceUtility", "WassersteinUtility", "CachedUtility", "ScoreSnapshot",
    "TransportPotential", "build_potential", "utility_value", "variance_utility",
    "variance_influence", "variance_gradient", "wasserstein_utility",
    "centered_gradient", "exact_snapshot",
    "PriorConfig", "PluginState", "shrunk_moments", "regularized_cdf",
    "build_plugin_snapshot", "score_gradient",
    "AscentConfig", "EpisodeTrace", "run_episode", "step", "step_size",
    "OracleResult", "BiasEstimate", "solve_offline", "active_support",
    "bias_mc", "regret_accumulate",
    "ScenarioSpec", "build_scenario",
    "ExperimentConfig", "parse_config", "run_experiment",
]
