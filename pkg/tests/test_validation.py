from fractions import Fraction

from metabandit.meta_solver import Expand, TERMINATE, solve_meta
from metabandit.validation import (
    check_computation_changes_action,
    check_dominant_belief_restriction,
    check_forced_termination,
    check_no_early_change,
    policy_chains,
    reachable_states,
    run_theorem_suite,
)

COSTS = [Fraction(0), Fraction(1, 100), Fraction(1, 20), Fraction(1, 10),
         Fraction(1), Fraction(10)]


def test_suite_passes_across_costs_and_horizons(qstar_tables, meta_graphs):
    for horizon in (2, 3, 4, 5, 6):
        qstar = qstar_tables(2, horizon)
        graph = meta_graphs(2, horizon)
        for cost in COSTS:
            policy, _ = solve_meta(graph, cost)
            for report in run_theorem_suite(graph, policy, qstar):
                assert report.passed, (horizon, cost, report.name, report.violations[:2])


def test_chains_cover_all_expanding_states(meta_graphs):
    graph = meta_graphs(2, 6)
    policy, _ = solve_meta(graph, Fraction(1, 100))
    expanding = {p for p in reachable_states(graph, policy)
                 if isinstance(policy.action(p), Expand)}
    in_chains = set()
    for chain in policy_chains(graph, policy):
        in_chains.update(chain[:-1])
    assert expanding == in_chains


def corrupted_fixture(qstar_tables):
    """Hand-built graph whose single computation step cannot change the
    argmax (both outcome children keep the expanded arm ahead), with a policy
    that takes it anyway. Every pruning rule forbids this."""
    from metabandit.meta_solver import ApproxParams, Expand, MetaGraph, MetaNode, MetaPolicy, TermBranch
    from metabandit.plan_graph import expand as plan_expand
    from metabandit.plan_graph import singleton, subjective_values

    horizon = 3
    root_belief = ((1, 0), (0, 1))
    bare = singleton(root_belief)
    grown = plan_expand(bare, root_belief, 0, horizon)
    sv_bare = subjective_values(bare, horizon)
    sv_grown = subjective_values(grown, horizon)
    assert sv_bare.root_q == sv_grown.root_q  # the wasteful step changes nothing

    def term_node(plan, sv):
        from metabandit.plan_graph import top_arms
        from metabandit.bandit_core import mean_of

        arms = top_arms(sv.root_q)
        branches = tuple(TermBranch(i, mean_of(plan.root, i), None, None) for i in arms)
        return MetaNode(plan, sv.root_q, arms, branches)

    node_a = term_node(bare, sv_bare)
    node_b = term_node(grown, sv_grown)
    step = Expand(root_belief, 0)
    node_a.comp = ((step, grown),)
    graph = MetaGraph(2, horizon, ApproxParams(), bare, {bare: node_a, grown: node_b})
    policy = MetaPolicy(2, horizon, Fraction(1, 100), ApproxParams(),
                        {bare: step, grown: TERMINATE})
    return graph, policy


def test_negative_control_wasteful_expansion_detected(qstar_tables):
    # a deliberately corrupted solve must trip the walk, proving the walk
    # can actually fail
    graph, policy = corrupted_fixture(qstar_tables)
    report = check_computation_changes_action(graph, policy)
    assert not report.passed


def test_negative_control_forced_termination(qstar_tables):
    graph, policy = corrupted_fixture(qstar_tables)
    qstar = qstar_tables(2, 3)
    report = check_forced_termination(graph, policy, qstar)
    assert not report.passed


def test_walks_count_states(qstar_tables, meta_graphs):
    qstar = qstar_tables(2, 6)
    graph = meta_graphs(2, 6)
    policy, _ = solve_meta(graph, Fraction(1, 100))
    forced = check_forced_termination(graph, policy, qstar)
    assert forced.states_checked > 0
    changes = check_computation_changes_action(graph, policy)
    assert changes.states_checked > 0
    early = check_no_early_change(graph, policy)
    assert early.states_checked == changes.states_checked
    dominant = check_dominant_belief_restriction(graph, policy, qstar)
    assert dominant.passed
