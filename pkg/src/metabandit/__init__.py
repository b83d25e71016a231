"""Exact solver and experiment harness for metareasoning bandit agents.

An agent facing an N-armed Bernoulli bandit can interleave costly planning
steps (expanding its internal belief-lookahead graph) with physical pulls.
This package solves the resulting meta decision problem exactly at desk
scale and reproduces the behavioral observables of such agents.
"""

__version__ = "0.1.0"

from .bandit_core import (
    Belief,
    Environment,
    QStarTable,
    ResourceCapError,
    enumerate_beliefs,
    greedy_value,
    posterior_mean,
    solve_bamdp_exact,
    zero_belief,
)
from .plan_graph import (
    PlanError,
    PlanningBelief,
    expand,
    frontier,
    restrict_reachable,
    singleton,
    subjective_values,
    terminal_action,
)
from .meta_solver import (
    ApproxParams,
    Expand,
    MetaPolicy,
    MetaState,
    MetaValueTable,
    MissingPolicyStateError,
    TERMINATE,
    build_pruned_meta_graph,
    solve_meta,
)
