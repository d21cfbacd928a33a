"""Normative practical reasoning: plan search over durative actions, valued goals and norms."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    DurativeAction,
    Goal,
    Literal,
    LiteralSet,
    Norm,
    Problem,
    ProblemError,
    ValidationReport,
    load_problem,
    parse_problem,
    serialize_problem,
    validate_problem,
)
from .semantics import ComplianceMode, PendingPolicy, Schedule, Status, simulate  # noqa: E402
from .planner import (  # noqa: E402
    PlanReport,
    SearchConfig,
    achievable_utilities,
    enumerate_naive,
    enumerate_plans,
    evaluate_schedule,
    optimal_plans,
)

__all__ = [
    "ComplianceMode",
    "DurativeAction",
    "Goal",
    "Literal",
    "LiteralSet",
    "Norm",
    "PendingPolicy",
    "PlanReport",
    "Problem",
    "ProblemError",
    "Schedule",
    "SearchConfig",
    "Status",
    "ValidationReport",
    "achievable_utilities",
    "enumerate_naive",
    "enumerate_plans",
    "evaluate_schedule",
    "load_problem",
    "optimal_plans",
    "parse_problem",
    "serialize_problem",
    "simulate",
    "validate_problem",
]
