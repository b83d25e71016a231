"""Tiny-scale brute-force references for validating the pruned solver.

Everything here favors simplicity over speed: complete state spaces, no
pruning, no memo tricks. Feasible only for very short horizons, which is the
point; the pruned solver must agree with these exactly where both run.
"""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

from .bandit_core import (
    Belief,
    ResourceCapError,
    elapsed,
    enumerate_beliefs,
    mean_of,
    with_loss,
    with_win,
    zero_belief,
)
from .meta_solver import ApproxParams, Expand, MetaAction, MetaPolicy, MetaState, TERMINATE
from .plan_graph import (
    PlanningBelief,
    expand,
    frontier,
    restrict_reachable,
    serialize_plan,
    singleton,
    subjective_values,
    top_arms,
)

BRUTE_FORCE_HORIZON_CAP = 2
SLOW_HORIZON_CAP = 3


def enumerate_plans(root: Belief, horizon: int, cap: int = 1_000_000) -> list[PlanningBelief]:
    """Every closed expansion set rooted at `root`, i.e. every valid plan."""
    seen: set[frozenset] = {frozenset()}
    stack: list[frozenset] = [frozenset()]
    while stack:
        exps = stack.pop()
        plan = PlanningBelief(root, exps)
        for pair in frontier(plan, horizon):
            nxt = exps | {pair}
            if nxt not in seen:
                if len(seen) >= cap:
                    raise ResourceCapError(f"more than {cap} plans at {root}")
                seen.add(nxt)
                stack.append(nxt)
    plans = [PlanningBelief(root, e) for e in seen]
    plans.sort(key=lambda p: (p.edge_count(), serialize_plan(p)))
    return plans


@dataclass
class BruteForceSolution:
    horizon: int
    cost: Fraction
    policy: MetaPolicy
    values: dict[PlanningBelief, Fraction]
    root: PlanningBelief

    @property
    def root_value(self) -> Fraction:
        return self.values[self.root]


def brute_force_meta_solve(n: int, horizon: int, cost, horizon_cap: int = BRUTE_FORCE_HORIZON_CAP,
                           allow_slow: bool = False, time_budget_s: float | None = None,
                           plan_cap: int = 1_000_000) -> BruteForceSolution:
    """Backward induction over the complete, unpruned meta-state space.

    Every belief is paired with every plan rooted at it and every frontier
    expansion is a candidate edge. No action-change filtering, no bounds.
    """
    cap = SLOW_HORIZON_CAP if allow_slow else horizon_cap
    if horizon > cap:
        raise ValueError(f"brute force capped at horizon {cap}")
    cost = Fraction(cost)
    deadline = None if time_budget_s is None else time.monotonic() + time_budget_s

    beliefs = enumerate_beliefs(n, horizon)
    by_time: dict[int, list[Belief]] = defaultdict(list)
    for b in beliefs:
        by_time[elapsed(b)].append(b)

    values: dict[PlanningBelief, Fraction] = {}
    actions: dict[PlanningBelief, MetaAction] = {}
    for t in range(horizon - 1, -1, -1):
        for b in by_time[t]:
            plans = enumerate_plans(b, horizon, cap=plan_cap)
            if deadline is not None and time.monotonic() > deadline:
                raise ResourceCapError("brute-force time budget exhausted")
            for plan in sorted(plans, key=lambda p: -p.edge_count()):
                sv = subjective_values(plan, horizon)
                arms = top_arms(sv.root_q)
                total = Fraction(0)
                for i in arms:
                    p = mean_of(b, i)
                    if t + 1 >= horizon:
                        total += p
                    else:
                        v_win = values[restrict_reachable(plan, with_win(b, i))]
                        v_loss = values[restrict_reachable(plan, with_loss(b, i))]
                        total += p * (1 + v_win) + (1 - p) * v_loss
                best_v = total / len(arms)
                best_a: MetaAction = TERMINATE
                for node, arm in frontier(plan, horizon):
                    cand = values[expand(plan, node, arm, horizon)] - cost
                    if cand > best_v:
                        best_v, best_a = cand, Expand(node, arm)
                values[plan] = best_v
                actions[plan] = best_a
    root = singleton(zero_belief(n))
    policy = MetaPolicy(n, horizon, cost, None, actions)
    return BruteForceSolution(horizon, cost, policy, values, root)


def brute_force_minimal_mind_changers(
    state: MetaState,
    params: ApproxParams,
    horizon: int,
    cap: int = 1_000_000,
) -> list[tuple[tuple[Expand, ...], PlanningBelief]]:
    """Exhaustive bounded enumeration of expansion sequences, truncated at the
    first change of the subjective argmax set. No dominance shortcuts."""
    plan0 = state.plan
    base_arms = top_arms(subjective_values(plan0, horizon).root_q)
    t0 = elapsed(state.belief)
    results: list[tuple[tuple[Expand, ...], PlanningBelief]] = []
    explored = 0

    def dfs(cur: PlanningBelief, seq: tuple[Expand, ...], budget: int) -> None:
        nonlocal explored
        if budget == 0 or cur.edge_count() + 2 > params.k:
            return
        for node, arm in frontier(cur, horizon):
            if elapsed(node) - t0 >= params.d:
                continue
            explored += 1
            if explored > cap:
                raise ResourceCapError(f"more than {cap} sequences explored")
            nxt = expand(cur, node, arm, horizon)
            arms = top_arms(subjective_values(nxt, horizon).root_q)
            step = seq + (Expand(node, arm),)
            if arms != base_arms:
                results.append((step, nxt))
            else:
                dfs(nxt, step, budget - 1)

    dfs(plan0, (), params.k_c)
    return results


def unmemoized_subjective_value(plan: PlanningBelief, horizon: int) -> Fraction:
    """Plain tree recursion over the plan, no node merging, no memoization.

    Independent of the iterative evaluator; shared nodes are recomputed on
    every path, so the size is capped.
    """
    if len(plan.expansions) > 20:
        raise ValueError("unmemoized recursion capped at 20 expansions")
    n = len(plan.root)

    def value(node: Belief) -> Fraction:
        tau = horizon - elapsed(node)
        best = None
        for arm in range(n):
            p = mean_of(node, arm)
            if (node, arm) in plan.expansions:
                q = p * (1 + value(with_win(node, arm))) + (1 - p) * value(with_loss(node, arm))
            else:
                q = p * tau
            if best is None or q > best:
                best = q
        return best

    return value(plan.root)
