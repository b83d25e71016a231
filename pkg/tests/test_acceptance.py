"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with its measured numbers. Tolerances are pinned here, not
configurable. Exact quantities are compared as rationals; Monte Carlo trend
checks use common random numbers across the cost grid and a three-standard-
error slack.
"""

import math
import random
import time
from fractions import Fraction

from metabandit.bandit_core import (
    greedy_value,
    make_env,
    solve_bamdp_exact,
    zero_belief,
)
from metabandit.evaluation import external_value, validate_approximation
from metabandit.heuristic_fit import (
    HeuristicParams,
    fit_omega,
    fit_pooled,
    sample_heuristic_episode,
)
from metabandit.meta_solver import (
    ApproxParams,
    MetaState,
    search_computational_trajectories,
    solve_meta,
)
from metabandit.oracle import (
    brute_force_meta_solve,
    brute_force_minimal_mind_changers,
)
from metabandit.plan_graph import expand, frontier, singleton, subjective_values
from metabandit.sim_metrics import (
    mean_action_entropy,
    sensitivity,
    simulate_episode,
)
from metabandit.validation import run_theorem_suite

Z2 = zero_belief(2)
COST_GRID_9 = [Fraction(15, 100) * i / 8 for i in range(9)]


def report(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))


def test_exact_bamdp_values():
    t0 = time.monotonic()
    v1 = solve_bamdp_exact(2, 1).value(Z2)
    v2 = solve_bamdp_exact(2, 2).value(Z2)
    solve_bamdp_exact(2, 6)
    elapsed = time.monotonic() - t0
    ok = v1 == Fraction(1, 2) and v2 == Fraction(13, 12) and elapsed < 1.0
    report("exact-bamdp-values", ok, f"V1={v1} V2={v2} t={elapsed:.2f}s")
    assert v1 == Fraction(1, 2)
    assert v2 == Fraction(13, 12)
    assert elapsed < 1.0


def fully_expand(root, horizon):
    plan = singleton(root)
    while True:
        options = frontier(plan, horizon)
        if not options:
            return plan
        for node, arm in options:
            plan = expand(plan, node, arm, horizon)


def test_full_expansion_equivalence(qstar_tables):
    t0 = time.monotonic()
    rng = random.Random(2025)
    checked = 0
    for horizon in (3, 4, 5):
        qstar = qstar_tables(2, horizon)
        candidates = [b for b in qstar.beliefs()]
        rng.shuffle(candidates)
        for root in candidates[:20]:
            plan = fully_expand(root, horizon)
            sv = subjective_values(plan, horizon)
            assert sv.root_q == qstar.q_values(root), (horizon, root)
            checked += 1
    elapsed = time.monotonic() - t0
    ok = checked >= 50 and elapsed < 30
    report("full-expansion-equivalence", ok, f"{checked} roots, t={elapsed:.1f}s")
    assert checked >= 50
    assert elapsed < 30


def test_monotonicity_suite():
    t0 = time.monotonic()
    rng = random.Random(424242)
    pairs = 10_000
    violations = 0
    for _ in range(pairs):
        horizon = rng.randrange(2, 9)
        plan = singleton(Z2)
        for _ in range(rng.randrange(6)):
            options = frontier(plan, horizon)
            if not options:
                break
            node, arm = rng.choice(options)
            plan = expand(plan, node, arm, horizon)
        bigger = plan
        for _ in range(rng.randrange(1, 5)):
            options = frontier(bigger, horizon)
            if not options:
                break
            node, arm = rng.choice(options)
            bigger = expand(bigger, node, arm, horizon)
        v_small = subjective_values(plan, horizon).node_values[Z2]
        v_big = subjective_values(bigger, horizon).node_values[Z2]
        if v_small > v_big:
            violations += 1
    elapsed = time.monotonic() - t0
    ok = violations == 0 and elapsed < 60
    report("monotonicity-suite", ok, f"{pairs} pairs, {violations} violations, t={elapsed:.1f}s")
    assert violations == 0
    assert elapsed < 60


def test_oracle_equivalence(qstar_tables, meta_graphs):
    t0 = time.monotonic()
    costs = [Fraction(0), Fraction(1, 64), Fraction(1, 16), Fraction(1, 4),
             Fraction(1), Fraction(10)]
    mismatches = []
    for horizon in (1, 2):
        graph = meta_graphs(2, horizon)
        for c in costs:
            _, table = solve_meta(graph, c)
            reference = brute_force_meta_solve(2, horizon, c)
            if table.root_value != reference.root_value:
                mismatches.append((horizon, c))
    qstar3 = qstar_tables(2, 3)
    params = ApproxParams(k=16, k_c=3, d=3)
    state = MetaState.from_plan(singleton(Z2))
    pruned = sorted(search_computational_trajectories(state, qstar3, params))
    exhaustive = sorted(brute_force_minimal_mind_changers(state, params, 3))
    search_ok = pruned == exhaustive
    elapsed = time.monotonic() - t0
    ok = not mismatches and search_ok and elapsed < 300
    report("oracle-equivalence", ok,
           f"{len(mismatches)} value mismatches, search match={search_ok}, t={elapsed:.1f}s")
    assert not mismatches
    assert search_ok
    assert elapsed < 300


def test_sandwich_and_endpoints(qstar_tables, meta_graphs):
    qstar = qstar_tables(2, 6)
    graph = meta_graphs(2, 6)
    v_star = qstar.value(Z2)
    v_greedy = greedy_value(2, 6)
    failures = []
    for c in COST_GRID_9:
        policy, _ = solve_meta(graph, c)
        v = external_value(graph, policy)
        if not v_greedy <= v <= v_star:
            failures.append(("sandwich", c))
        if c == 0 and v != v_star:
            failures.append(("zero-cost-optimal", c))
    policy, _ = solve_meta(graph, Fraction(6))
    if external_value(graph, policy) != v_greedy:
        failures.append(("prohibitive-cost-greedy", Fraction(6)))
    ok = not failures
    report("sandwich-and-endpoints", ok, f"{len(failures)} failures")
    assert not failures


def test_theorem_walk_suite(qstar_tables, meta_graphs):
    costs = COST_GRID_9 + [Fraction(1), Fraction(10)]
    violations = 0
    states = 0
    for horizon in (2, 3, 4, 5, 6):
        qstar = qstar_tables(2, horizon)
        graph = meta_graphs(2, horizon)
        for c in costs:
            policy, _ = solve_meta(graph, c)
            for walk in run_theorem_suite(graph, policy, qstar):
                states += walk.states_checked
                violations += len(walk.violations)
    ok = violations == 0
    report("theorem-walk-suite", ok, f"{states} checks, {violations} violations")
    assert violations == 0


def test_approximation_robustness(qstar_tables):
    t0 = time.monotonic()
    qstar = qstar_tables(2, 4)
    params_list = [ApproxParams(k, kc, d)
                   for k in (2, 4, 8, 16) for kc in (1, 2, 3) for d in (1, 2, 3)]
    disagreements = []
    for c in (Fraction(1, 100), Fraction(1, 20), Fraction(1, 10)):
        rep = validate_approximation(2, 4, c, params_list, qstar=qstar)
        if not rep.behavior_invariant:
            disagreements.append(c)
    elapsed = time.monotonic() - t0
    ok = not disagreements and elapsed < 600
    report("approximation-robustness", ok,
           f"{len(params_list)} settings x 3 costs, disagreements={disagreements}, t={elapsed:.1f}s")
    assert not disagreements
    assert elapsed < 600


def _common_random_episodes(policy, env, horizon_tag, episodes):
    # common random numbers across the cost grid: the seed depends on the
    # episode index only, so identical policies yield identical batches
    return [simulate_episode(policy, env, random.Random(horizon_tag * 10_000_019 + i))
            for i in range(episodes)]


def test_trend_reproduction(qstar_tables, meta_graphs):
    t0 = time.monotonic()
    episodes = 10_000
    env = make_env(["0.5", "0.5"])
    failures = []
    for horizon in (4, 8):
        qstar = qstar_tables(2, horizon)
        graph = meta_graphs(2, horizon)
        v_star = qstar.value(Z2)
        v_greedy = greedy_value(2, horizon)
        values = []
        entropies = []
        omegas = []
        for c in COST_GRID_9:
            policy, _ = solve_meta(graph, c)
            values.append(external_value(graph, policy))
            trajs = _common_random_episodes(policy, env, horizon, episodes)
            mean_h, se_h, _ = mean_action_entropy(trajs)
            entropies.append((mean_h, se_h))
            summary = fit_omega(trajs)
            omegas.append((summary.mean_omega, summary.stderr_omega or 0.0))
        # normalized reward is an affine map of the exact value, so the
        # monotonicity comparison happens on the rationals directly
        assert v_star > v_greedy
        for i in range(len(values) - 1):
            if values[i + 1] > values[i]:
                failures.append(("value", horizon, i))
        for i in range(len(entropies) - 1):
            m0, s0 = entropies[i]
            m1, s1 = entropies[i + 1]
            if m1 - m0 > 3 * math.sqrt(s0 * s0 + s1 * s1):
                failures.append(("entropy", horizon, i))
        for i in range(len(omegas) - 1):
            m0, s0 = omegas[i]
            m1, s1 = omegas[i + 1]
            if m1 - m0 > 3 * math.sqrt(s0 * s0 + s1 * s1):
                failures.append(("omega", horizon, i))
    elapsed = time.monotonic() - t0
    ok = not failures and elapsed < 1800
    report("trend-reproduction", ok, f"failures={failures}, t={elapsed:.0f}s")
    assert not failures
    assert elapsed < 1800


def test_heuristic_fit_recovery():
    t0 = time.monotonic()
    env = make_env(["0.5", "0.5"])
    generator = HeuristicParams(beta=30.0, omega=3.0)
    rng = random.Random(90210)
    batch = [sample_heuristic_episode(generator, env, 12, rng)
             for _ in range(10_000)]
    pooled = fit_pooled(batch)
    elapsed = time.monotonic() - t0
    ok = 2.5 <= pooled.omega <= 3.5
    report("heuristic-fit-recovery", ok,
           f"omega={pooled.omega:.3f} beta={pooled.beta:.1f} t={elapsed:.0f}s")
    assert 2.5 <= pooled.omega <= 3.5


def test_sensitivity_scheme_exactness():
    grid = [0.15 * i / 8 for i in range(9)]
    slope = 7.25
    chi = sensitivity([slope * c for c in grid], grid)
    err = abs(chi - slope * slope * 0.15)
    ok = err <= 1e-12
    report("sensitivity-exactness", ok, f"err={err:.2e}")
    assert err <= 1e-12
