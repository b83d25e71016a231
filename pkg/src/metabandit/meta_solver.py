"""Pruned meta-graph construction and exact backward induction over it.

A meta-state pairs a belief with the plan currently held at it. Computational
edges stay inside one time step and strictly grow the plan; physical edges
advance time and shrink the plan to its reachable remainder. The graph is
therefore acyclic and one sweep ordered by (time desc, plan size desc)
solves it.

Construction only keeps computation sequences that change the prescribed
physical action: computing without changing the choice costs the same and can
always be postponed to the next round, so it is never strictly better. Three
search bounds keep the enumeration finite: plan size (k edges), expansions
per round (k_c) and expansion depth below the current root (d pulls).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Union

from .bandit_core import (
    Belief,
    QStarTable,
    ResourceCapError,
    elapsed,
    greedy_arms,
    mean_of,
    remaining,
    with_loss,
    with_win,
    zero_belief,
)
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

DEFAULT_NODE_CAP = 500_000


class MissingPolicyStateError(KeyError):
    """A policy was asked about a meta-state it does not cover (solver bug)."""


@dataclass(frozen=True)
class ApproxParams:
    """Search bounds: plan edges (k), expansions per round (k_c), depth (d)."""

    k: int = 2
    k_c: int = 1
    d: int = 3

    def __post_init__(self) -> None:
        if self.k < 2 or self.k % 2 != 0:
            raise ValueError("k must be even and at least 2")
        if self.k_c < 1:
            raise ValueError("k_c must be at least 1")
        if self.d < 1:
            raise ValueError("d must be at least 1")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.k, self.k_c, self.d)


@dataclass(frozen=True, order=True)
class Expand:
    """Computational action: expand `arm` at `node` of the current plan."""

    node: Belief
    arm: int


class _Terminate:
    __slots__ = ()

    def __repr__(self) -> str:
        return "Terminate"


TERMINATE = _Terminate()
MetaAction = Union[Expand, _Terminate]


@dataclass(frozen=True)
class MetaState:
    """Belief plus the plan rooted at it; time is the belief's pull count."""

    belief: Belief
    plan: PlanningBelief

    def __post_init__(self) -> None:
        if self.plan.root != self.belief:
            raise ValueError("plan must be rooted at the meta-state's belief")

    @property
    def t(self) -> int:
        return elapsed(self.belief)

    @classmethod
    def from_plan(cls, plan: PlanningBelief) -> "MetaState":
        return cls(plan.root, plan)


def is_greedy_dominant(belief: Belief, qstar: QStarTable) -> bool:
    """True when some greedy arm's no-learning value beats every other arm's
    fully informed optimum, making computation along other arms useless."""
    tau = remaining(belief, qstar.horizon)
    if tau <= 0:
        return False
    qb = qstar.q_values(belief)
    n = len(belief)
    for i in greedy_arms(belief):
        naive = mean_of(belief, i) * tau
        if all(naive >= qb[a] for a in range(n) if a != i):
            return True
    return False


def m_beliefs(qstar: QStarTable) -> frozenset[Belief]:
    """All beliefs where greedy dominance holds (elapsed time < horizon)."""
    return frozenset(b for b in qstar.beliefs() if is_greedy_dominant(b, qstar))


def is_termination_forced(state: MetaState, qstar: QStarTable,
                          root_q: tuple[Fraction, ...] | None = None) -> bool:
    """True when the currently best arm already beats every other arm's fully
    informed optimum, so no computation can change the choice."""
    if root_q is None:
        root_q = subjective_values(state.plan, qstar.horizon).root_q
    qb = qstar.q_values(state.belief)
    n = len(state.belief)
    for i in top_arms(root_q):
        if all(root_q[i] >= qb[a] for a in range(n) if a != i):
            return True
    return False


def _argmax_settled(arms: tuple[int, ...], root_q, qb) -> bool:
    # A single argmax strictly above every other arm's full-information
    # ceiling can never be displaced, so no deeper expansion changes the
    # action and the branch may be cut.
    if len(arms) != 1:
        return False
    i = arms[0]
    return all(root_q[i] > qb[a] for a in range(len(root_q)) if a != i)


def search_computational_trajectories(
    state: MetaState,
    qstar: QStarTable,
    params: ApproxParams,
) -> list[tuple[tuple[Expand, ...], PlanningBelief]]:
    """Minimal action-changing expansion sequences from `state`, bounded.

    Depth-first over expansion sequences; a path stops the first time the
    subjective argmax set differs from the starting one (deeper growth along
    that path can be redone later, after the pull). Root arms whose fully
    informed value sits strictly below the current subjective optimum are
    skipped: they can never enter the argmax, so expanding them cannot change
    the action.
    """
    horizon = qstar.horizon
    plan0 = state.plan
    b = state.belief
    base_values = subjective_values(plan0, horizon)
    base_arms = top_arms(base_values.root_q)
    qb = qstar.q_values(b)
    t0 = elapsed(b)
    results: list[tuple[tuple[Expand, ...], PlanningBelief]] = []

    def dfs(cur: PlanningBelief, cur_values, seq: tuple[Expand, ...], budget: int) -> None:
        if budget == 0 or cur.edge_count() + 2 > params.k:
            return
        cur_best = max(cur_values.root_q)
        for node, arm in frontier(cur, horizon):
            if elapsed(node) - t0 >= params.d:
                continue
            if node == b and qb[arm] < cur_best:
                continue
            nxt = expand(cur, node, arm, horizon)
            nxt_values = subjective_values(nxt, horizon)
            nxt_arms = top_arms(nxt_values.root_q)
            step = seq + (Expand(node, arm),)
            if nxt_arms != base_arms:
                results.append((step, nxt))
            elif budget > 1 and not _argmax_settled(nxt_arms, nxt_values.root_q, qb):
                dfs(nxt, nxt_values, step, budget - 1)

    dfs(plan0, base_values, (), params.k_c)
    return results


class TermBranch(NamedTuple):
    """One physical outcome branch: the pulled arm with its win probability
    under the posterior predictive and the two successor plans (None at the
    horizon)."""

    arm: int
    p_win: Fraction
    win: Optional[PlanningBelief]
    loss: Optional[PlanningBelief]


@dataclass
class MetaNode:
    plan: PlanningBelief
    root_q: tuple[Fraction, ...]
    pull_arms: tuple[int, ...]
    term: tuple[TermBranch, ...]
    comp: tuple[tuple[Expand, PlanningBelief], ...] = ()


@dataclass
class MetaGraph:
    n: int
    horizon: int
    params: ApproxParams
    root: PlanningBelief
    nodes: dict[PlanningBelief, MetaNode]

    def __len__(self) -> int:
        return len(self.nodes)

    def solve_order(self) -> list[PlanningBelief]:
        """Time descending, plan size descending: every edge target precedes
        its source, so a single sweep backward-solves the graph."""
        return sorted(
            self.nodes,
            key=lambda p: (-elapsed(p.root), -p.edge_count(), serialize_plan(p)),
        )

    def forward_order(self) -> list[PlanningBelief]:
        return sorted(
            self.nodes,
            key=lambda p: (elapsed(p.root), p.edge_count(), serialize_plan(p)),
        )


def build_pruned_meta_graph(
    n: int,
    horizon: int,
    qstar: QStarTable,
    params: ApproxParams = ApproxParams(),
    node_cap: int = DEFAULT_NODE_CAP,
) -> MetaGraph:
    """Breadth-first construction from the empty belief with a bare plan.

    Every node gets its physical branches (one per arm tied for the
    subjective optimum, successors carrying the reachable plan remainder).
    Nodes reached through a pull start a fresh round and are searched for
    action-changing computation chains; chain nodes inherit edges but are
    only searched themselves if some pull also lands on them.
    """
    if qstar.n != n or qstar.horizon != horizon:
        raise ValueError("qstar table does not match (n, horizon)")
    root = singleton(zero_belief(n))
    nodes: dict[PlanningBelief, MetaNode] = {}
    comp_edges: dict[PlanningBelief, dict[Expand, PlanningBelief]] = {}
    to_search: deque[PlanningBelief] = deque([root])
    queued = {root}

    def ensure(plan: PlanningBelief) -> MetaNode:
        node = nodes.get(plan)
        if node is not None:
            return node
        if len(nodes) >= node_cap:
            raise ResourceCapError(f"meta-graph exceeds {node_cap} nodes")
        sv = subjective_values(plan, horizon)
        arms = top_arms(sv.root_q)
        b = plan.root
        branches = []
        final_step = elapsed(b) + 1 >= horizon
        for i in arms:
            if final_step:
                branches.append(TermBranch(i, mean_of(b, i), None, None))
            else:
                win_plan = restrict_reachable(plan, with_win(b, i))
                loss_plan = restrict_reachable(plan, with_loss(b, i))
                branches.append(TermBranch(i, mean_of(b, i), win_plan, loss_plan))
        node = MetaNode(plan, sv.root_q, arms, tuple(branches))
        nodes[plan] = node
        for br in node.term:
            for succ in (br.win, br.loss):
                if succ is not None and succ not in queued:
                    queued.add(succ)
                    to_search.append(succ)
        return node

    while to_search:
        plan = to_search.popleft()
        node = ensure(plan)
        state = MetaState.from_plan(plan)
        if is_termination_forced(state, qstar, root_q=node.root_q):
            continue
        for seq, _final in search_computational_trajectories(state, qstar, params):
            cur = plan
            for step in seq:
                nxt = expand(cur, step.node, step.arm, horizon)
                ensure(nxt)
                comp_edges.setdefault(cur, {})[step] = nxt
                cur = nxt

    for plan, edges in comp_edges.items():
        nodes[plan].comp = tuple(sorted(edges.items(), key=lambda kv: (kv[0].node, kv[0].arm)))
    return MetaGraph(n, horizon, params, root, nodes)


@dataclass
class MetaPolicy:
    """Deterministic map from meta-state to action, plus its provenance."""

    n: int
    horizon: int
    cost: Fraction
    params: Optional[ApproxParams]
    actions: dict[PlanningBelief, MetaAction]

    def action(self, plan: PlanningBelief) -> MetaAction:
        try:
            return self.actions[plan]
        except KeyError:
            raise MissingPolicyStateError(serialize_plan(plan)) from None

    def __len__(self) -> int:
        return len(self.actions)


@dataclass
class MetaValueTable:
    """Exact values of the solved policy, one per meta-state."""

    root: PlanningBelief
    values: dict[PlanningBelief, Fraction]

    def value(self, plan: PlanningBelief) -> Fraction:
        return self.values[plan]

    @property
    def root_value(self) -> Fraction:
        return self.values[self.root]


def solve_meta(graph: MetaGraph, cost) -> tuple[MetaPolicy, MetaValueTable]:
    """Backward induction on the meta-graph for one expansion cost.

    Terminating mixes uniformly over the arms tied for the subjective
    optimum, matching the simulator's tie rule, and pays out the posterior
    predictive reward now plus the successor value. Each computational edge
    costs `cost` and stays at the same time step. Value ties go to
    termination, then to the lexicographically smallest expansion.
    """
    cost = Fraction(cost)
    if cost < 0:
        raise ValueError("cost must be nonnegative")
    values: dict[PlanningBelief, Fraction] = {}
    actions: dict[PlanningBelief, MetaAction] = {}
    for plan in graph.solve_order():
        node = graph.nodes[plan]
        total = Fraction(0)
        for br in node.term:
            v_win = values[br.win] if br.win is not None else Fraction(0)
            v_loss = values[br.loss] if br.loss is not None else Fraction(0)
            total += br.p_win * (1 + v_win) + (1 - br.p_win) * v_loss
        best_v = total / len(node.term)
        best_a: MetaAction = TERMINATE
        for step, succ in node.comp:
            if succ.edge_count() <= plan.edge_count():
                raise ValueError("computational edge does not grow the plan")
            v = values[succ] - cost
            if v > best_v:
                best_v, best_a = v, step
        values[plan] = best_v
        actions[plan] = best_a
    policy = MetaPolicy(graph.n, graph.horizon, cost, graph.params, actions)
    table = MetaValueTable(graph.root, values)
    return policy, table
