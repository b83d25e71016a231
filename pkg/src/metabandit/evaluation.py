"""Exact policy evaluation by forward occupancy propagation.

Outcome weights are either the true environment probabilities or, when no
environment is given, the posterior predictive means (the Bayes mixture over
environments under the uniform prior). Terminal ties are mixed uniformly,
matching the Monte Carlo simulator, so these expectations are exactly what
the simulator estimates.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .bandit_core import (
    Belief,
    Environment,
    QStarTable,
    elapsed,
    greedy_arms,
    mean_of,
    with_loss,
    with_win,
    zero_belief,
)
from .meta_solver import (
    ApproxParams,
    Expand,
    MetaGraph,
    MetaPolicy,
    build_pruned_meta_graph,
    solve_meta,
)

PullKey = tuple[int, Belief, int]  # (time step, belief before the pull, arm)


@dataclass
class ExactEvaluation:
    """Closed-form expectations of one policy in one (or the mixture of all)
    environments. Reward excludes computation costs; those are reported as a
    separate count."""

    n: int
    horizon: int
    reward: Fraction
    comp_count: Fraction
    action_dist: dict[int, dict[int, Fraction]]
    comp_time: dict[int, Fraction]
    pulls: dict[PullKey, Fraction]
    final_beliefs: dict[Belief, Fraction]

    def triple(self):
        return self.reward, self.comp_count, self.action_dist

    def mean_comp_time(self) -> Optional[Fraction]:
        """Expected time step of a computation event, pooled over events."""
        total = sum(self.comp_time.values(), Fraction(0))
        if total == 0:
            return None
        return sum((Fraction(t) * w for t, w in self.comp_time.items()), Fraction(0)) / total

    def mean_comp_time_norm(self) -> Optional[Fraction]:
        m = self.mean_comp_time()
        return None if m is None else m / self.horizon


def evaluate_policy(graph: MetaGraph, policy: MetaPolicy,
                    env: Environment | None = None) -> ExactEvaluation:
    """Exact forward sweep of a solved policy over the meta-graph."""
    horizon = graph.horizon
    occ: dict = defaultdict(Fraction)
    occ[graph.root] = Fraction(1)
    reward = Fraction(0)
    comp_count = Fraction(0)
    action_dist: dict[int, dict[int, Fraction]] = defaultdict(lambda: defaultdict(Fraction))
    comp_time: dict[int, Fraction] = defaultdict(Fraction)
    pulls: dict[PullKey, Fraction] = defaultdict(Fraction)
    final_beliefs: dict[Belief, Fraction] = defaultdict(Fraction)

    for plan in graph.forward_order():
        w = occ.get(plan, Fraction(0))
        if w == 0:
            continue
        node = graph.nodes[plan]
        t = elapsed(plan.root)
        action = policy.action(plan)
        if isinstance(action, Expand):
            comp_count += w
            comp_time[t] += w
            succ = dict(node.comp)[action]
            occ[succ] += w
        else:
            share = w / len(node.term)
            for br in node.term:
                p_env = env[br.arm] if env is not None else br.p_win
                reward += share * p_env
                action_dist[t][br.arm] += share
                pulls[(t, plan.root, br.arm)] += share
                win_mass = share * p_env
                loss_mass = share * (1 - p_env)
                if br.win is None:
                    if win_mass:
                        final_beliefs[with_win(plan.root, br.arm)] += win_mass
                    if loss_mass:
                        final_beliefs[with_loss(plan.root, br.arm)] += loss_mass
                else:
                    if win_mass:
                        occ[br.win] += win_mass
                    if loss_mass:
                        occ[br.loss] += loss_mass
    return ExactEvaluation(
        graph.n, horizon, reward, comp_count,
        {t: dict(d) for t, d in action_dist.items()},
        dict(comp_time), dict(pulls), dict(final_beliefs),
    )


def evaluate_baseline(kind: str, n: int, horizon: int,
                      env: Environment | None = None,
                      qstar: QStarTable | None = None) -> ExactEvaluation:
    """Exact evaluation of a plan-free baseline: `greedy` pulls a posterior
    mean argmax, `optimal` pulls a fully informed argmax; ties mix uniformly."""
    if kind == "optimal" and qstar is None:
        raise ValueError("the optimal baseline needs a QStarTable")
    occ: dict[Belief, Fraction] = defaultdict(Fraction)
    occ[zero_belief(n)] = Fraction(1)
    reward = Fraction(0)
    action_dist: dict[int, dict[int, Fraction]] = defaultdict(lambda: defaultdict(Fraction))
    pulls: dict[PullKey, Fraction] = defaultdict(Fraction)
    final_beliefs: dict[Belief, Fraction] = defaultdict(Fraction)
    for t in range(horizon):
        layer = sorted(b for b, w in occ.items() if elapsed(b) == t and w != 0)
        for b in layer:
            w = occ.pop(b)
            arms = greedy_arms(b) if kind == "greedy" else qstar.optimal_arms(b)
            share = w / len(arms)
            for i in arms:
                p_env = env[i] if env is not None else mean_of(b, i)
                reward += share * p_env
                action_dist[t][i] += share
                pulls[(t, b, i)] += share
                sink = final_beliefs if t + 1 >= horizon else occ
                if p_env:
                    sink[with_win(b, i)] += share * p_env
                if p_env != 1:
                    sink[with_loss(b, i)] += share * (1 - p_env)
    return ExactEvaluation(
        n, horizon, reward, Fraction(0),
        {t: dict(d) for t, d in action_dist.items()},
        {}, dict(pulls), dict(final_beliefs),
    )


def policy_value_in_env(policy, env: Environment | None, graph: MetaGraph | None = None,
                        n: int | None = None, horizon: int | None = None,
                        qstar: QStarTable | None = None):
    """(expected external reward, expected computation count, per-step action
    distribution) for a solved policy or a named baseline."""
    if isinstance(policy, str):
        if n is None or horizon is None:
            raise ValueError("baselines need n and horizon")
        return evaluate_baseline(policy, n, horizon, env=env, qstar=qstar).triple()
    if graph is None:
        raise ValueError("a solved policy needs its meta-graph")
    return evaluate_policy(graph, policy, env=env).triple()


def external_value(graph: MetaGraph, policy: MetaPolicy) -> Fraction:
    """Bayes expected external reward of the induced behavior, costs excluded."""
    return evaluate_policy(graph, policy, env=None).reward


def behavior_signature(graph: MetaGraph, policy: MetaPolicy) -> dict[PullKey, Fraction]:
    """Exact joint distribution of (time, belief, pulled arm) under the Bayes
    mixture; two policies with equal signatures are behaviorally identical."""
    return evaluate_policy(graph, policy, env=None).pulls


@dataclass
class ApproxSetting:
    params: ApproxParams
    root_value: Fraction
    external: Fraction
    signature: dict[PullKey, Fraction]
    graph_size: int


@dataclass
class ApproxReport:
    n: int
    horizon: int
    cost: Fraction
    settings: list[ApproxSetting]
    pairwise: list[tuple[int, int, bool, bool]] = field(default_factory=list)

    @property
    def behavior_invariant(self) -> bool:
        return all(beh for _, _, beh, _ in self.pairwise)

    @property
    def value_invariant(self) -> bool:
        return all(val for _, _, _, val in self.pairwise)


def validate_approximation(n: int, horizon: int, cost,
                           params_list: list[ApproxParams],
                           qstar: QStarTable | None = None) -> ApproxReport:
    """Solve under each bound setting and report whether the induced physical
    behavior and the meta-values agree across settings."""
    from .bandit_core import solve_bamdp_exact

    if qstar is None:
        qstar = solve_bamdp_exact(n, horizon)
    cost = Fraction(cost)
    settings = []
    for params in params_list:
        graph = build_pruned_meta_graph(n, horizon, qstar, params)
        policy, table = solve_meta(graph, cost)
        settings.append(ApproxSetting(
            params, table.root_value, external_value(graph, policy),
            behavior_signature(graph, policy), len(graph),
        ))
    report = ApproxReport(n, horizon, cost, settings)
    for i in range(len(settings)):
        for j in range(i + 1, len(settings)):
            beh = settings[i].signature == settings[j].signature
            val = settings[i].root_value == settings[j].root_value
            report.pairwise.append((i, j, beh, val))
    return report
