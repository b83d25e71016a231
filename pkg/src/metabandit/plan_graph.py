"""Planning sub-DAGs of the belief-action graph and their subjective values.

A planning belief is the portion of the lookahead graph the agent has built
so far: a root belief plus a set of expanded (node, arm) pairs. Nodes are
keyed by count tuple, so expansion paths that collide share structure and the
object is a DAG rather than a tree. Each expansion contributes two outcome
edges, giving the edge count 2 * len(expansions).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .bandit_core import (
    Belief,
    elapsed,
    mean_of,
    n_arms,
    with_loss,
    with_win,
)


class PlanError(ValueError):
    """Illegal planning-graph operation (duplicate, unreachable or exhausted node)."""


ExpansionPair = tuple[Belief, int]


@dataclass(frozen=True)
class PlanningBelief:
    root: Belief
    expansions: frozenset[ExpansionPair] = frozenset()

    def edge_count(self) -> int:
        return 2 * len(self.expansions)

    def __repr__(self) -> str:  # stable, order-independent
        return f"PlanningBelief({serialize_plan(self)!r})"


def singleton(belief: Belief) -> PlanningBelief:
    """The plan holding just its root node, no expansions."""
    return PlanningBelief(belief, frozenset())


def _arms_by_node(plan: PlanningBelief) -> dict[Belief, list[int]]:
    out: dict[Belief, list[int]] = {}
    for node, arm in plan.expansions:
        out.setdefault(node, []).append(arm)
    return out


def reachable_nodes(plan: PlanningBelief) -> set[Belief]:
    """Beliefs reachable from the root through expanded pairs, frontier included."""
    by_node = _arms_by_node(plan)
    seen = {plan.root}
    stack = [plan.root]
    while stack:
        u = stack.pop()
        for arm in by_node.get(u, ()):
            for child in (with_win(u, arm), with_loss(u, arm)):
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
    return seen


def validate_plan(plan: PlanningBelief, horizon: int | None = None) -> None:
    n = n_arms(plan.root)
    nodes = reachable_nodes(plan)
    for node, arm in plan.expansions:
        if not 0 <= arm < n:
            raise PlanError(f"arm {arm} out of range")
        if node not in nodes:
            raise PlanError(f"expansion at unreachable node {node}")
        if horizon is not None and elapsed(node) >= horizon:
            raise PlanError(f"expansion at node {node} with no pulls remaining")


def frontier(plan: PlanningBelief, horizon: int) -> list[ExpansionPair]:
    """All (node, arm) pairs that may legally be expanded next, sorted."""
    n = n_arms(plan.root)
    out = []
    for node in sorted(reachable_nodes(plan)):
        if elapsed(node) >= horizon:
            continue
        for arm in range(n):
            if (node, arm) not in plan.expansions:
                out.append((node, arm))
    return out


def expand(plan: PlanningBelief, node: Belief, arm: int, horizon: int) -> PlanningBelief:
    """New plan with (node, arm) expanded; the input is unchanged."""
    if not 0 <= arm < n_arms(plan.root):
        raise PlanError(f"arm {arm} out of range")
    if (node, arm) in plan.expansions:
        raise PlanError(f"({node}, {arm}) already expanded")
    if node not in reachable_nodes(plan):
        raise PlanError(f"node {node} not reachable in the plan")
    if elapsed(node) >= horizon:
        raise PlanError(f"node {node} has no pulls remaining")
    return PlanningBelief(plan.root, plan.expansions | {(node, arm)})


def restrict_reachable(plan: PlanningBelief, new_root: Belief) -> PlanningBelief:
    """Sub-DAG that survives moving the root to `new_root`.

    `new_root` must be the current root or one of its one-step successors.
    Expansions no longer reachable from the new root are dropped; if none
    survive the result is the bare new root.
    """
    if new_root != plan.root:
        n = n_arms(plan.root)
        children = set()
        for arm in range(n):
            children.add(with_win(plan.root, arm))
            children.add(with_loss(plan.root, arm))
        if new_root not in children:
            raise PlanError(f"{new_root} is not the root or a one-step successor")
    by_node = _arms_by_node(plan)
    seen = {new_root}
    stack = [new_root]
    kept: set[ExpansionPair] = set()
    while stack:
        u = stack.pop()
        for arm in by_node.get(u, ()):
            kept.add((u, arm))
            for child in (with_win(u, arm), with_loss(u, arm)):
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
    return PlanningBelief(new_root, frozenset(kept))


@dataclass(frozen=True)
class SubjectiveValues:
    """Backward-induction values of a plan's nodes plus the root action values."""

    node_values: Mapping[Belief, Fraction]
    root_q: tuple[Fraction, ...]


def subjective_values(plan: PlanningBelief, horizon: int) -> SubjectiveValues:
    """Backward induction restricted to the plan, exact rationals.

    A frontier node is valued as if the agent exploited its current posterior
    means greedily until the horizon without further learning: value =
    max_i mean_i * remaining. At an expanded pair the value recurses through
    the win and loss children; an unexpanded arm of an interior node keeps
    its no-learning estimate mean * remaining.
    """
    n = n_arms(plan.root)
    nodes = reachable_nodes(plan)
    values: dict[Belief, Fraction] = {}
    root_q: tuple[Fraction, ...] = ()
    for node in sorted(nodes, key=elapsed, reverse=True):
        tau = horizon - elapsed(node)
        qs = []
        for arm in range(n):
            p = mean_of(node, arm)
            if (node, arm) in plan.expansions:
                q = p * (1 + values[with_win(node, arm)]) + (1 - p) * values[with_loss(node, arm)]
            else:
                q = p * tau
            qs.append(q)
        values[node] = max(qs)
        if node == plan.root:
            root_q = tuple(qs)
    return SubjectiveValues(values, root_q)


def terminal_action(plan: PlanningBelief, horizon: int) -> int:
    """Smallest-index arm among the subjective argmax set."""
    return terminal_action_arms(plan, horizon)[0]


def terminal_action_arms(plan: PlanningBelief, horizon: int) -> tuple[int, ...]:
    """Full subjective argmax set; simulation mixes over it uniformly."""
    if elapsed(plan.root) >= horizon:
        raise PlanError("no pulls remain at the root")
    return top_arms(subjective_values(plan, horizon).root_q)


def top_arms(qs) -> tuple[int, ...]:
    """Indices achieving the maximum, in index order."""
    top = max(qs)
    return tuple(i for i, q in enumerate(qs) if q == top)


def canonical_key(plan: PlanningBelief) -> tuple:
    """Hashable key equal iff root and expansion set are equal."""
    return (plan.root, tuple(sorted(plan.expansions)))


def serialize_plan(plan: PlanningBelief) -> str:
    """Byte-stable text form: root counts, then sorted expansions."""
    root = ",".join(str(x) for ab in plan.root for x in ab)
    exps = ";".join(
        ",".join(str(x) for ab in node for x in ab) + ":" + str(arm)
        for node, arm in sorted(plan.expansions)
    )
    return root + "|" + exps


def parse_plan(text: str) -> PlanningBelief:
    root_part, _, exp_part = text.partition("|")
    root = _parse_belief(root_part)
    exps = set()
    if exp_part:
        for token in exp_part.split(";"):
            counts, _, arm = token.rpartition(":")
            exps.add((_parse_belief(counts), int(arm)))
    return PlanningBelief(root, frozenset(exps))


def _parse_belief(text: str) -> Belief:
    flat = [int(x) for x in text.split(",")]
    return tuple(zip(flat[0::2], flat[1::2]))
