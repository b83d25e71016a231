"""Beta-Bernoulli belief arithmetic and exact solutions of the underlying bandit.

Everything solver-side is a fractions.Fraction. The pruning logic downstream
compares quantities that coincide exactly in degenerate cases, and a float
representation would flip those decisions, so this module never rounds.
"""

from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction
from typing import Iterator, Sequence

# A belief is the per-arm (successes, failures) count tuple. The elapsed time
# is the total count, never stored separately.
Belief = tuple[tuple[int, int], ...]
Environment = tuple[Fraction, ...]

DEFAULT_LATTICE_CAP = 5_000_000


class ResourceCapError(RuntimeError):
    """A solve or enumeration would exceed its configured state-space cap."""


def posterior_mean(alpha: int, beta: int) -> Fraction:
    """Mean of Beta(alpha+1, beta+1), the posterior under a uniform prior."""
    if alpha < 0 or beta < 0:
        raise ValueError("counts must be nonnegative")
    return Fraction(alpha + 1, alpha + beta + 2)


def n_arms(belief: Belief) -> int:
    return len(belief)


def elapsed(belief: Belief) -> int:
    """Pulls recorded in the belief (the elapsed time t)."""
    return sum(a + b for a, b in belief)


def remaining(belief: Belief, horizon: int) -> int:
    return horizon - elapsed(belief)


def mean_of(belief: Belief, arm: int) -> Fraction:
    a, b = belief[arm]
    return Fraction(a + 1, a + b + 2)


def with_win(belief: Belief, arm: int) -> Belief:
    a, b = belief[arm]
    return belief[:arm] + ((a + 1, b),) + belief[arm + 1 :]


def with_loss(belief: Belief, arm: int) -> Belief:
    a, b = belief[arm]
    return belief[:arm] + ((a, b + 1),) + belief[arm + 1 :]


def greedy_arms(belief: Belief) -> tuple[int, ...]:
    """Arms tied for the largest posterior mean, in index order."""
    means = [mean_of(belief, i) for i in range(len(belief))]
    top = max(means)
    return tuple(i for i, m in enumerate(means) if m == top)


def zero_belief(n: int) -> Belief:
    return ((0, 0),) * n


def validate_belief(belief: Belief, horizon: int | None = None) -> None:
    if len(belief) < 2:
        raise ValueError("need at least two arms")
    for a, b in belief:
        if a < 0 or b < 0:
            raise ValueError("counts must be nonnegative")
    if horizon is not None and elapsed(belief) > horizon:
        raise ValueError("belief records more pulls than the horizon allows")


def _count_tuples(budget: int, slots: int) -> Iterator[tuple[int, ...]]:
    if slots == 0:
        yield ()
        return
    for head in range(budget + 1):
        for rest in _count_tuples(budget - head, slots - 1):
            yield (head,) + rest


def enumerate_beliefs(n: int, horizon: int, cap: int = DEFAULT_LATTICE_CAP) -> list[Belief]:
    """All count tuples with at most `horizon` total pulls, lexicographic order.

    The lattice has C(horizon + 2n, 2n) entries.
    """
    if n < 2:
        raise ValueError("need at least two arms")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    total = math.comb(horizon + 2 * n, 2 * n)
    if total > cap:
        raise ResourceCapError(f"belief lattice has {total} entries, cap is {cap}")
    out = []
    for flat in _count_tuples(horizon, 2 * n):
        out.append(tuple(zip(flat[0::2], flat[1::2])))
    return out


class QStarTable:
    """Optimal action values for every belief with elapsed time < horizon."""

    def __init__(self, n: int, horizon: int, q: dict[Belief, tuple[Fraction, ...]],
                 values: dict[Belief, Fraction]):
        self.n = n
        self.horizon = horizon
        self._q = q
        self._values = values

    def q_values(self, belief: Belief) -> tuple[Fraction, ...]:
        return self._q[belief]

    def value(self, belief: Belief) -> Fraction:
        return self._values[belief]

    def optimal_arms(self, belief: Belief) -> tuple[int, ...]:
        qs = self._q[belief]
        top = max(qs)
        return tuple(i for i, q in enumerate(qs) if q == top)

    def beliefs(self) -> Iterator[Belief]:
        return iter(self._q)

    def __contains__(self, belief: Belief) -> bool:
        return belief in self._q

    def __len__(self) -> int:
        return len(self._q)


def solve_bamdp_exact(n: int, horizon: int, cap: int = DEFAULT_LATTICE_CAP) -> QStarTable:
    """Backward induction over the whole belief lattice, exact rationals.

    Q(b, i) = p_i (1 + V(win_i)) + (1 - p_i) V(loss_i) with V = max_i Q and
    V = 0 once no pulls remain.
    """
    beliefs = enumerate_beliefs(n, horizon, cap=cap)
    by_time: dict[int, list[Belief]] = defaultdict(list)
    for b in beliefs:
        by_time[elapsed(b)].append(b)
    values: dict[Belief, Fraction] = {b: Fraction(0) for b in by_time[horizon]}
    q: dict[Belief, tuple[Fraction, ...]] = {}
    for t in range(horizon - 1, -1, -1):
        for b in by_time[t]:
            qs = []
            for i in range(n):
                p = mean_of(b, i)
                qs.append(p * (1 + values[with_win(b, i)]) + (1 - p) * values[with_loss(b, i)])
            qt = tuple(qs)
            q[b] = qt
            values[b] = max(qt)
    return QStarTable(n, horizon, q, values)


def greedy_value_table(n: int, horizon: int, cap: int = DEFAULT_LATTICE_CAP) -> dict[Belief, Fraction]:
    """Value of always pulling a posterior-mean argmax, ties mixed uniformly.

    The tie mix is averaged exactly inside the recursion, so the table is the
    Bayes value of the randomized greedy policy.
    """
    beliefs = enumerate_beliefs(n, horizon, cap=cap)
    by_time: dict[int, list[Belief]] = defaultdict(list)
    for b in beliefs:
        by_time[elapsed(b)].append(b)
    values: dict[Belief, Fraction] = {b: Fraction(0) for b in by_time[horizon]}
    for t in range(horizon - 1, -1, -1):
        for b in by_time[t]:
            arms = greedy_arms(b)
            total = Fraction(0)
            for i in arms:
                p = mean_of(b, i)
                total += p * (1 + values[with_win(b, i)]) + (1 - p) * values[with_loss(b, i)]
            values[b] = total / len(arms)
    return values


def greedy_value(n: int, horizon: int, cap: int = DEFAULT_LATTICE_CAP) -> Fraction:
    """Bayes value of the uniform-tie greedy policy from the all-zero belief."""
    return greedy_value_table(n, horizon, cap=cap)[zero_belief(n)]


def make_env(probs: Sequence) -> Environment:
    """Build an environment from decimal strings, Fractions or ints.

    Floats are accepted through their shortest decimal repr so that 0.05
    means exactly 1/20 rather than its binary approximation.
    """
    out = []
    for p in probs:
        if isinstance(p, Fraction):
            f = p
        elif isinstance(p, float):
            f = Fraction(repr(p))
        else:
            f = Fraction(p)
        if not 0 <= f <= 1:
            raise ValueError(f"reward probability {p} outside [0, 1]")
        out.append(f)
    if len(out) < 2:
        raise ValueError("need at least two arms")
    return tuple(out)
