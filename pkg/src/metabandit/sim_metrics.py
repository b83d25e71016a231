"""Episode simulation and the behavioral observables of solved policies.

Expectation-valued observables are computed exactly (see evaluation.py)
whenever a meta-graph is available; Monte Carlo is kept for trajectory-level
statistics and as a cross-check. This module is float territory except where
it consumes exact values.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .bandit_core import (
    Belief,
    Environment,
    elapsed,
    mean_of,
    with_loss,
    with_win,
    zero_belief,
)
from .evaluation import ExactEvaluation, evaluate_policy
from .meta_solver import Expand, MetaPolicy
from .plan_graph import (
    expand,
    restrict_reachable,
    singleton,
    subjective_values,
    top_arms,
)


class DegenerateNormalizationError(ValueError):
    """Normalized reward is undefined when the optimal and greedy values tie."""


@dataclass(frozen=True)
class StepRecord:
    t: int
    action: int
    reward: int
    comps: tuple[Expand, ...]  # expansions performed before this pull


@dataclass
class Trajectory:
    n: int
    horizon: int
    steps: list[StepRecord]

    def beliefs_before(self) -> list[Belief]:
        """Belief held before each pull, reconstructed from the record."""
        out = []
        b = zero_belief(self.n)
        for step in self.steps:
            out.append(b)
            b = with_win(b, step.action) if step.reward else with_loss(b, step.action)
        return out

    def action_counts(self) -> list[int]:
        counts = [0] * self.n
        for step in self.steps:
            counts[step.action] += 1
        return counts

    def comp_count(self) -> int:
        return sum(len(step.comps) for step in self.steps)

    def comp_times(self) -> list[int]:
        return [step.t for step in self.steps for _ in step.comps]

    def total_reward(self) -> int:
        return sum(step.reward for step in self.steps)


def simulate_episode(policy: MetaPolicy, env: Environment, rng) -> Trajectory:
    """One seeded episode from the empty belief with a bare plan.

    Terminal ties are broken uniformly at random; after a pull the plan is
    cut down to its reachable remainder. A fixed seed replays byte-identically.
    """
    if isinstance(rng, int):
        rng = random.Random(rng)
    horizon = policy.horizon
    probs = [float(p) for p in env]
    belief = zero_belief(policy.n)
    plan = singleton(belief)
    steps: list[StepRecord] = []
    pending: list[Expand] = []
    while elapsed(belief) < horizon:
        action = policy.action(plan)
        if isinstance(action, Expand):
            pending.append(action)
            plan = expand(plan, action.node, action.arm, horizon)
            continue
        arms = top_arms(subjective_values(plan, horizon).root_q)
        arm = arms[0] if len(arms) == 1 else rng.choice(arms)
        reward = 1 if rng.random() < probs[arm] else 0
        steps.append(StepRecord(elapsed(belief), arm, reward, tuple(pending)))
        pending = []
        belief = with_win(belief, arm) if reward else with_loss(belief, arm)
        plan = restrict_reachable(plan, belief)
    return Trajectory(policy.n, horizon, steps)


def exploratory_flag(belief: Belief, action: int) -> bool:
    """True when the pull is not a posterior-mean argmax, or ties the argmax
    while another tied arm has been pulled more often (choosing the less
    chosen arm under a tie counts as exploration)."""
    means = [mean_of(belief, i) for i in range(len(belief))]
    top = max(means)
    if means[action] < top:
        return True
    pulls = [a + b for a, b in belief]
    tied = [i for i, m in enumerate(means) if m == top]
    return any(pulls[action] < pulls[j] for j in tied if j != action)


def histogram_entropy_bits(counts: Sequence[int]) -> float:
    """Shannon entropy of a count histogram, in bits."""
    total = sum(counts)
    if total <= 0:
        raise ValueError("need at least one observation")
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


def action_entropy_bits(traj: Trajectory) -> float:
    """Entropy of the episode's empirical arm histogram, in bits."""
    return histogram_entropy_bits(traj.action_counts())


def mean_action_entropy(trajs: Iterable[Trajectory]) -> tuple[float, float, int]:
    """(mean, standard error, count) of per-episode action entropy."""
    values = [action_entropy_bits(t) for t in trajs]
    n = len(values)
    if n == 0:
        raise ValueError("no trajectories")
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0, 1
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n), n


def exact_mean_entropy_bits(evaluation: ExactEvaluation) -> float:
    """Expected per-episode action entropy from the exact final-belief law.

    The end-of-episode belief fixes the arm histogram (arm i was pulled
    alpha_i + beta_i times), so the expectation needs no trajectory sampling.
    """
    out = 0.0
    for belief, w in evaluation.final_beliefs.items():
        out += float(w) * histogram_entropy_bits([a + b for a, b in belief])
    return out


def exact_explore_times(evaluation: ExactEvaluation) -> dict[int, Fraction]:
    """Occupancy of exploratory pulls per time step, from the exact pull law."""
    out: dict[int, Fraction] = {}
    for (t, belief, arm), w in evaluation.pulls.items():
        if exploratory_flag(belief, arm):
            out[t] = out.get(t, Fraction(0)) + w
    return out


def mean_explore_time(evaluation: ExactEvaluation) -> Optional[Fraction]:
    """Expected time step of an exploratory pull, pooled over events."""
    times = exact_explore_times(evaluation)
    total = sum(times.values(), Fraction(0))
    if total == 0:
        return None
    return sum((Fraction(t) * w for t, w in times.items()), Fraction(0)) / total


def normalized_reward(value, greedy, optimal) -> float:
    """(V - V_greedy) / (V_optimal - V_greedy); undefined on a degenerate gap."""
    if optimal == greedy:
        raise DegenerateNormalizationError(
            "optimal and greedy values coincide, normalization undefined")
    return float(Fraction(value - greedy) / Fraction(optimal - greedy))


def sensitivity(xs: Sequence[float], cs: Sequence[float]) -> float:
    """Integral of the squared derivative of X over the cost grid.

    Central differences inside, one-sided at the ends, trapezoid integration.
    Exact for linear X on a uniform grid.
    """
    if len(xs) != len(cs):
        raise ValueError("value and grid lengths differ")
    m = len(xs)
    if m < 3:
        raise ValueError("need at least 3 grid points")
    h = (cs[-1] - cs[0]) / (m - 1)
    if h <= 0:
        raise ValueError("grid must be increasing")
    deriv = [0.0] * m
    deriv[0] = (xs[1] - xs[0]) / h
    deriv[-1] = (xs[-1] - xs[-2]) / h
    for i in range(1, m - 1):
        deriv[i] = (xs[i + 1] - xs[i - 1]) / (2 * h)
    sq = [d * d for d in deriv]
    return sum((sq[i] + sq[i + 1]) * h / 2 for i in range(m - 1))


def most_computed_env(
    solved: Mapping, p_grid: Sequence[Fraction],
) -> dict:
    """For each cost, the symmetric environment maximizing the expected
    computation count (exact evaluation); ties to the smallest p, None when
    the policy never computes."""
    out = {}
    for cost, (graph, policy) in solved.items():
        best_p = None
        best_count = Fraction(0)
        for p in p_grid:
            count = evaluate_policy(graph, policy, env=(p, ) * graph.n).comp_count
            if count > best_count:
                best_count, best_p = count, p
        out[cost] = best_p
    return out


CSV_HEADER = ("N,T,c,env_p1,env_p2,env_kind,V,V_g,V_star,V_N,n_c_mean,"
              "tau_c_mean_norm,tau_explore_mean,H_pi_bits,omega,seed,episodes")


@dataclass
class MetricsRecord:
    """One sweep row; None fields serialize to empty CSV cells."""

    n: int
    horizon: int
    cost: Fraction
    env_p1: Optional[Fraction]
    env_p2: Optional[Fraction]
    env_kind: str
    value: Optional[Fraction]
    value_greedy: Optional[Fraction]
    value_star: Optional[Fraction]
    value_norm: Optional[float]
    n_c_mean: Optional[Fraction]
    tau_c_mean_norm: Optional[Fraction]
    tau_explore_mean: Optional[Fraction]
    entropy_bits: Optional[float]
    omega: Optional[float]
    seed: Optional[int]
    episodes: Optional[int]

    def to_csv_row(self) -> str:
        cells = [
            str(self.n), str(self.horizon), _fmt(self.cost),
            _fmt(self.env_p1), _fmt(self.env_p2), self.env_kind,
            _fmt(self.value), _fmt(self.value_greedy), _fmt(self.value_star),
            _fmt(self.value_norm), _fmt(self.n_c_mean), _fmt(self.tau_c_mean_norm),
            _fmt(self.tau_explore_mean), _fmt(self.entropy_bits), _fmt(self.omega),
            "" if self.seed is None else str(self.seed),
            "" if self.episodes is None else str(self.episodes),
        ]
        return ",".join(cells)


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def write_metrics_csv(records: Iterable[MetricsRecord], path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.to_csv_row() + "\n")
