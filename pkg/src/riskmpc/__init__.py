"""Risk-constrained robust and stochastic MPC path following for an automated vehicle."""

from .controller import OcpConfig, OcpSolution, PathFollowingMPC, rollout, solve
from .dynamics import EgoInput, InputBounds, advance_lambda, step, tracking_error
from .geometry import ArcPath, CircleShape, Configuration, collision_indicator, nearest_lambda, path_eval
from .harness import ScenarioConfig, ScenarioResult, metrics, run_matrix, run_scenario
from .prediction import STD, UNCERTAINTY_LEVELS, VARIANCE, ObjectBelief, UncertaintyGrowth, grid, grow, propagate_mean, sample
from .risk import RiskQuery, SeverityParams, mcs_risk, severity, worst_case_risk

__all__ = [
    "ArcPath", "CircleShape", "Configuration", "EgoInput", "InputBounds", "ObjectBelief",
    "OcpConfig", "OcpSolution", "PathFollowingMPC", "RiskQuery", "ScenarioConfig",
    "ScenarioResult", "SeverityParams", "UncertaintyGrowth", "advance_lambda",
    "collision_indicator", "grid", "grow", "mcs_risk", "metrics", "nearest_lambda",
    "path_eval", "propagate_mean", "rollout", "run_matrix", "run_scenario", "sample",
    "severity", "solve", "step", "tracking_error", "worst_case_risk",
    "STD", "UNCERTAINTY_LEVELS", "VARIANCE",
]
