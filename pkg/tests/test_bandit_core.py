import math
from fractions import Fraction
from itertools import permutations

import pytest

from metabandit.bandit_core import (
    ResourceCapError,
    elapsed,
    enumerate_beliefs,
    greedy_value,
    make_env,
    mean_of,
    posterior_mean,
    with_loss,
    with_win,
    zero_belief,
)

Z2 = zero_belief(2)


def test_posterior_mean_values():
    assert posterior_mean(0, 0) == Fraction(1, 2)
    assert posterior_mean(2, 1) == Fraction(3, 5)
    assert posterior_mean(3, 0) == Fraction(4, 5)


def test_posterior_mean_rejects_negative_counts():
    with pytest.raises(ValueError):
        posterior_mean(-1, 0)


def test_enumerate_belief_counts():
    assert len(enumerate_beliefs(2, 2)) == 15
    assert len(enumerate_beliefs(2, 1)) == 5
    assert len(enumerate_beliefs(3, 1)) == 7


def test_enumerate_beliefs_matches_binomial_formula():
    for n, horizon in [(2, 4), (2, 6), (3, 3)]:
        assert len(enumerate_beliefs(n, horizon)) == math.comb(horizon + 2 * n, 2 * n)


def test_enumerate_rejects_bad_sizes():
    with pytest.raises(ValueError):
        enumerate_beliefs(1, 3)
    with pytest.raises(ValueError):
        enumerate_beliefs(2, 0)


def test_enumerate_respects_cap():
    with pytest.raises(ResourceCapError):
        enumerate_beliefs(2, 6, cap=10)


def test_optimal_value_tiny_horizons(qstar_tables):
    assert qstar_tables(2, 1).value(Z2) == Fraction(1, 2)
    assert qstar_tables(2, 2).value(Z2) == Fraction(13, 12)


def test_optimal_dominates_greedy(qstar_tables):
    assert qstar_tables(2, 6).value(Z2) >= greedy_value(2, 6)


def test_value_recursion_conservation(qstar_tables):
    # V(b) = max_i [p_i + p_i V(win) + (1-p_i) V(loss)] exactly, every belief
    qstar = qstar_tables(2, 4)
    for b in qstar.beliefs():
        best = max(
            mean_of(b, i) * (1 + qstar.value(with_win(b, i)))
            + (1 - mean_of(b, i)) * qstar.value(with_loss(b, i))
            for i in range(2)
        )
        assert qstar.value(b) == best


def test_q_bounded_by_remaining_pulls(qstar_tables):
    qstar = qstar_tables(2, 5)
    for b in qstar.beliefs():
        tau = 5 - elapsed(b)
        assert all(0 <= q <= tau for q in qstar.q_values(b))


def test_arm_permutation_symmetry(qstar_tables):
    qstar = qstar_tables(2, 4)
    for b in qstar.beliefs():
        for perm in permutations(range(2)):
            permuted = tuple(b[perm[i]] for i in range(2))
            qs = qstar.q_values(b)
            qs_p = qstar.q_values(permuted)
            assert all(qs_p[i] == qs[perm[i]] for i in range(2))


def test_greedy_value_hand_cases():
    assert greedy_value(2, 1) == Fraction(1, 2)
    assert greedy_value(2, 2) == Fraction(13, 12)
    # T=4 by hand: ties mixed uniformly, branch sums over the greedy tree
    assert greedy_value(2, 4) == Fraction(91, 40)


def test_greedy_below_optimal_everywhere(qstar_tables, greedy_tables):
    qstar = qstar_tables(2, 6)
    greedy = greedy_tables(2, 6)
    assert Fraction(0) <= greedy[Z2] <= qstar.value(Z2) <= 6
    for b, v in greedy.items():
        if elapsed(b) < 6:
            assert v <= qstar.value(b)


def test_make_env_decimal_exactness():
    env = make_env([0.05, "0.3"])
    assert env == (Fraction(1, 20), Fraction(3, 10))
    with pytest.raises(ValueError):
        make_env(["1.5", "0"])


def test_bayes_consistency_grid_integration(greedy_tables):
    # Averaging the greedy policy's value over a fine uniform grid of
    # environments must reproduce its Bayes value to grid accuracy.
    from metabandit.evaluation import evaluate_baseline

    horizon = 4
    bayes = float(greedy_tables(2, horizon)[Z2])
    grid_n = 100
    total = 0.0
    for i in range(grid_n):
        p1 = Fraction(2 * i + 1, 2 * grid_n)
        for j in range(grid_n):
            p2 = Fraction(2 * j + 1, 2 * grid_n)
            total += float(evaluate_baseline("greedy", 2, horizon, env=(p1, p2)).reward)
    assert abs(total / grid_n**2 - bayes) <= 1e-3
