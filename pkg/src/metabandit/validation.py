"""Structural walks over solved policies.

Each check walks every meta-state reachable under the policy (both outcome
branches of every pull, every tie branch) and verifies one structural
property of the solution: computation chains change the chosen action, no
chain changes it early, termination happens wherever it is provably forced,
and no chain at a greedy-dominant belief starts along a dominated root arm.
A healthy solve passes all of them with zero violations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .bandit_core import QStarTable, greedy_arms
from .meta_solver import (
    Expand,
    MetaGraph,
    MetaPolicy,
    MetaState,
    is_greedy_dominant,
    is_termination_forced,
)
from .plan_graph import PlanningBelief, serialize_plan, top_arms


def reachable_states(graph: MetaGraph, policy: MetaPolicy) -> list[PlanningBelief]:
    """States visited with positive probability when following the policy."""
    seen = {graph.root}
    stack = [graph.root]
    while stack:
        plan = stack.pop()
        node = graph.nodes[plan]
        action = policy.action(plan)
        if isinstance(action, Expand):
            succs = [dict(node.comp)[action]]
        else:
            succs = [s for br in node.term for s in (br.win, br.loss) if s is not None]
        for s in succs:
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return sorted(seen, key=serialize_plan)


def policy_chains(graph: MetaGraph, policy: MetaPolicy) -> Iterator[list[PlanningBelief]]:
    """Maximal computation chains: a reachable state where the policy starts
    expanding, through every state it expands from, to the state where it
    terminates. Yields the full state list, start and endpoint included."""
    reachable = reachable_states(graph, policy)
    chain_members = {p for p in reachable
                     if isinstance(policy.action(p), Expand)}
    # chain starts: expanding states not reached from another expanding state
    targets = set()
    for p in chain_members:
        targets.add(dict(graph.nodes[p].comp)[policy.action(p)])
    for start in sorted(chain_members - targets, key=serialize_plan):
        chain = [start]
        cur = start
        while isinstance(policy.action(cur), Expand):
            cur = dict(graph.nodes[cur].comp)[policy.action(cur)]
            chain.append(cur)
        yield chain


@dataclass
class WalkReport:
    name: str
    states_checked: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def check_computation_changes_action(graph: MetaGraph, policy: MetaPolicy) -> WalkReport:
    """Every maximal computation chain must end with a different argmax set
    than it started with; computing without changing the choice is waste."""
    report = WalkReport("computation-changes-action")
    for chain in policy_chains(graph, policy):
        report.states_checked += 1
        start_arms = top_arms(graph.nodes[chain[0]].root_q)
        end_arms = top_arms(graph.nodes[chain[-1]].root_q)
        if start_arms == end_arms:
            report.violations.append(
                f"chain at {serialize_plan(chain[0])} ends with unchanged arms {end_arms}")
    return report


def check_no_early_change(graph: MetaGraph, policy: MetaPolicy) -> WalkReport:
    """No chain may pass through a state whose argmax set already differs
    from the start: the first change is where computing should stop."""
    report = WalkReport("no-early-change")
    for chain in policy_chains(graph, policy):
        report.states_checked += 1
        start_arms = top_arms(graph.nodes[chain[0]].root_q)
        for mid in chain[1:-1]:
            if top_arms(graph.nodes[mid].root_q) != start_arms:
                report.violations.append(
                    f"chain at {serialize_plan(chain[0])} changed arms before its end")
                break
    return report


def check_forced_termination(graph: MetaGraph, policy: MetaPolicy,
                             qstar: QStarTable) -> WalkReport:
    """Wherever the best arm already beats every rival's fully informed
    optimum, the policy must terminate."""
    report = WalkReport("forced-termination")
    for plan in reachable_states(graph, policy):
        node = graph.nodes[plan]
        state = MetaState.from_plan(plan)
        if is_termination_forced(state, qstar, root_q=node.root_q):
            report.states_checked += 1
            if isinstance(policy.action(plan), Expand):
                report.violations.append(
                    f"policy computes at forced state {serialize_plan(plan)}")
    return report


def check_dominant_belief_restriction(graph: MetaGraph, policy: MetaPolicy,
                                      qstar: QStarTable) -> WalkReport:
    """At a greedy-dominant belief no chain may begin by expanding a
    non-greedy root arm."""
    report = WalkReport("dominant-belief-restriction")
    for chain in policy_chains(graph, policy):
        start = chain[0]
        if not is_greedy_dominant(start.root, qstar):
            continue
        report.states_checked += 1
        first = policy.action(start)
        if first.node == start.root and first.arm not in greedy_arms(start.root):
            report.violations.append(
                f"non-greedy root expansion at dominant belief {serialize_plan(start)}")
    return report


def run_theorem_suite(graph: MetaGraph, policy: MetaPolicy,
                      qstar: QStarTable) -> list[WalkReport]:
    return [
        check_computation_changes_action(graph, policy),
        check_no_early_change(graph, policy),
        check_forced_termination(graph, policy, qstar),
        check_dominant_belief_restriction(graph, policy, qstar),
    ]
