import random
from fractions import Fraction

import pytest

from metabandit.bandit_core import (
    greedy_value,
    remaining,
    zero_belief,
)
from metabandit.meta_solver import (
    ApproxParams,
    MetaState,
    TERMINATE,
    build_pruned_meta_graph,
    is_greedy_dominant,
    is_termination_forced,
    m_beliefs,
    search_computational_trajectories,
    solve_meta,
)
from metabandit.plan_graph import expand, frontier, singleton, subjective_values

Z2 = zero_belief(2)


def test_approx_params_validation():
    ApproxParams(2, 1, 3)
    with pytest.raises(ValueError):
        ApproxParams(k=3)
    with pytest.raises(ValueError):
        ApproxParams(k=0)
    with pytest.raises(ValueError):
        ApproxParams(k_c=0)
    with pytest.raises(ValueError):
        ApproxParams(d=0)


def test_meta_state_requires_matching_root():
    with pytest.raises(ValueError):
        MetaState(Z2, singleton(((1, 0), (0, 0))))
    state = MetaState.from_plan(singleton(Z2))
    assert state.t == 0


def test_last_step_beliefs_are_greedy_dominant(qstar_tables):
    qstar = qstar_tables(2, 4)
    for b in qstar.beliefs():
        if remaining(b, 4) == 1:
            assert is_greedy_dominant(b, qstar)


def test_big_lead_belief_is_greedy_dominant(qstar_tables):
    b = ((5, 0), (0, 1))
    for horizon in (7, 8, 9):
        assert is_greedy_dominant(b, qstar_tables(2, horizon))


def test_zero_belief_dominance_matches_value_gap(qstar_tables):
    # dominance at the start holds exactly when the optimal solve gains
    # nothing over never learning
    for horizon in (2, 3, 6):
        qstar = qstar_tables(2, horizon)
        naive = Fraction(1, 2) * horizon
        expected = all(naive >= qstar.q_values(Z2)[a] for a in (0, 1))
        assert is_greedy_dominant(Z2, qstar) == expected


def test_m_belief_set_contains_all_final_step_beliefs(qstar_tables):
    qstar = qstar_tables(2, 3)
    members = m_beliefs(qstar)
    for b in qstar.beliefs():
        if remaining(b, 3) == 1:
            assert b in members


def test_forced_termination_cases(qstar_tables):
    qstar = qstar_tables(2, 4)
    # one pull left: nothing can change the choice
    state = MetaState.from_plan(singleton(((2, 0), (1, 0))))
    assert is_termination_forced(state, qstar)
    # fully expanded plan: subjective equals optimal, so the best arm wins
    plan = singleton(Z2)
    while frontier(plan, 4):
        node, arm = frontier(plan, 4)[0]
        plan = expand(plan, node, arm, 4)
    assert is_termination_forced(MetaState.from_plan(plan), qstar)
    # fresh start at T=4: computation can still help
    assert not is_termination_forced(MetaState.from_plan(singleton(Z2)), qstar)


def test_search_returns_nothing_on_last_step(qstar_tables):
    qstar = qstar_tables(2, 3)
    state = MetaState.from_plan(singleton(((1, 1), (0, 0))))
    assert search_computational_trajectories(state, qstar, ApproxParams()) == []


def test_search_is_arm_symmetric_at_start(qstar_tables):
    qstar = qstar_tables(2, 4)
    state = MetaState.from_plan(singleton(Z2))
    seqs = search_computational_trajectories(state, qstar, ApproxParams())
    starts = sorted(seq[0].arm for seq, _ in seqs)
    assert starts == [0, 1]


def test_search_sequences_change_the_argmax(qstar_tables):
    from metabandit.plan_graph import top_arms

    qstar = qstar_tables(2, 6)
    params = ApproxParams(k=8, k_c=2, d=3)
    rng = random.Random(3)
    for b in sorted(qstar.beliefs()):
        if remaining(b, 6) < 2 or rng.random() < 0.5:
            continue
        state = MetaState.from_plan(singleton(b))
        base = top_arms(subjective_values(state.plan, 6).root_q)
        for seq, final in search_computational_trajectories(state, qstar, params):
            assert top_arms(subjective_values(final, 6).root_q) != base
            # no strict prefix changes it
            cur = state.plan
            for step in seq[:-1]:
                cur = expand(cur, step.node, step.arm, 6)
                assert top_arms(subjective_values(cur, 6).root_q) == base


def test_trivial_graph_has_no_computational_edges(qstar_tables):
    graph = build_pruned_meta_graph(2, 1, qstar_tables(2, 1))
    assert len(graph) == 1
    assert graph.nodes[graph.root].comp == ()


def test_graph_node_count_regression(meta_graphs):
    # first-run snapshot at the default bounds, frozen as a regression guard
    assert len(meta_graphs(2, 6)) == 94


def test_solver_reaches_optimal_at_zero_cost(qstar_tables, meta_graphs):
    for horizon in (2, 4, 6):
        graph = meta_graphs(2, horizon)
        _, table = solve_meta(graph, 0)
        assert table.root_value == qstar_tables(2, horizon).value(Z2)


def test_solver_collapses_to_greedy_when_cost_exceeds_any_gain(meta_graphs):
    graph = meta_graphs(2, 6)
    policy, table = solve_meta(graph, Fraction(6))
    assert table.root_value == greedy_value(2, 6)
    assert all(action is TERMINATE for action in policy.actions.values())


def test_value_monotone_in_cost(meta_graphs):
    graph = meta_graphs(2, 6)
    grid = [Fraction(15, 100) * i / 10 for i in range(11)]
    values = [solve_meta(graph, c)[1].root_value for c in grid]
    assert all(values[i + 1] <= values[i] for i in range(len(values) - 1))


def test_policy_total_on_reachable_states(meta_graphs):
    from metabandit.validation import reachable_states

    graph = meta_graphs(2, 6)
    policy, _ = solve_meta(graph, Fraction(1, 50))
    for plan in reachable_states(graph, policy):
        policy.action(plan)  # must not raise


def test_value_table_within_bounds(meta_graphs):
    graph = meta_graphs(2, 6)
    _, table = solve_meta(graph, Fraction(1, 20))
    for plan, value in table.values.items():
        tau = remaining(plan.root, 6)
        assert value <= tau


def test_lower_envelope_consistency(meta_graphs):
    # the optimum at any cost dominates the (reward - cost * computations)
    # line of every policy solved at any other cost
    from metabandit.evaluation import evaluate_policy

    graph = meta_graphs(2, 6)
    grid = [Fraction(15, 100) * i / 6 for i in range(7)]
    solved = []
    for c in grid:
        policy, table = solve_meta(graph, c)
        ev = evaluate_policy(graph, policy)
        assert table.root_value == ev.reward - c * ev.comp_count
        solved.append((c, table.root_value, ev.reward, ev.comp_count))
    for c, value, _, _ in solved:
        for _, _, reward, comps in solved:
            assert value >= reward - c * comps
