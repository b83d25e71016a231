"""Command line entry point: solve, sweep, sensitivity, fit, validate.

Configuration comes from an optional JSON file plus flag overrides; every
command that writes outputs drops a resolved-config snapshot next to them.
Exit codes: 0 success, 1 validation failure, 2 config error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import random
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

from .bandit_core import (
    Environment,
    QStarTable,
    ResourceCapError,
    make_env,
    solve_bamdp_exact,
    zero_belief,
)
from .cache import CACHE_ENV_VAR, CacheCorruptionError, cache_path, load_policy, save_policy
from .evaluation import (
    evaluate_baseline,
    evaluate_policy,
    validate_approximation,
)
from .heuristic_fit import fit_omega, fit_pooled
from .meta_solver import (
    ApproxParams,
    MetaGraph,
    MetaPolicy,
    MetaState,
    MetaValueTable,
    build_pruned_meta_graph,
    search_computational_trajectories,
    solve_meta,
)
from .oracle import brute_force_meta_solve, brute_force_minimal_mind_changers
from .plan_graph import singleton
from .sim_metrics import (
    CSV_HEADER,
    DegenerateNormalizationError,
    MetricsRecord,
    exact_mean_entropy_bits,
    mean_action_entropy,
    mean_explore_time,
    normalized_reward,
    sensitivity,
    simulate_episode,
)
from .validation import run_theorem_suite

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_RESOURCE = 3

DEFAULT_MAX_HORIZON = {2: 12, 3: 9, 4: 9}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int = 2
    horizon: int = 6
    costs: str = "0:0.15:9"
    env: str = "uniform"
    k: int = 2
    k_c: int = 1
    d: int = 3
    episodes: int = 0
    seed: int = 0
    out_dir: str = "out"
    workers: int = 1
    cache_dir: str = ""
    fit: bool = False
    sign_convention: int = 1
    max_horizon: int = 0
    node_cap: int = 500_000

    def params(self) -> ApproxParams:
        return ApproxParams(self.k, self.k_c, self.d)

    def resolved_cache_dir(self) -> Path:
        if self.cache_dir:
            return Path(self.cache_dir)
        env_dir = os.environ.get(CACHE_ENV_VAR)
        if env_dir:
            return Path(env_dir)
        return Path(self.out_dir) / "cache"

    def validate(self) -> None:
        if self.n < 2:
            raise ConfigError("need at least two arms")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        limit = self.max_horizon or DEFAULT_MAX_HORIZON.get(self.n, 9)
        if self.horizon > limit:
            raise ConfigError(
                f"horizon {self.horizon} above the configured max {limit} for n={self.n}")
        if self.episodes < 0:
            raise ConfigError("episodes must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.sign_convention not in (1, -1):
            raise ConfigError("sign convention must be +1 or -1")
        try:
            self.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def parse_costs(spec: str) -> list[Fraction]:
    """Either `lo:hi:count` for a uniform grid or a comma list of decimals."""
    spec = spec.strip()
    if ":" in spec:
        lo_s, hi_s, count_s = spec.split(":")
        lo, hi, count = Fraction(lo_s), Fraction(hi_s), int(count_s)
        if count < 1:
            raise ConfigError("cost grid needs at least one point")
        if count == 1:
            return [lo]
        return [lo + (hi - lo) * i / (count - 1) for i in range(count)]
    return [Fraction(tok) for tok in spec.split(",") if tok.strip()]


def parse_envs(spec: str, n: int) -> list[tuple[str, Environment | None]]:
    """`uniform`, `symmetric:lo:hi:count`, or `p1,p2;p1,p2;...` explicit."""
    spec = spec.strip()
    if spec == "uniform":
        return [("uniform-mixture", None)]
    if spec.startswith("symmetric"):
        parts = spec.split(":")
        if len(parts) == 1:
            lo, hi, count = Fraction(0), Fraction(1), 21
        elif len(parts) == 4:
            lo, hi, count = Fraction(parts[1]), Fraction(parts[2]), int(parts[3])
        else:
            raise ConfigError("symmetric spec is symmetric[:lo:hi:count]")
        if count < 1:
            raise ConfigError("symmetric grid needs at least one point")
        ps = [lo] if count == 1 else [lo + (hi - lo) * i / (count - 1) for i in range(count)]
        return [("symmetric", make_env([p] * n)) for p in ps]
    out = []
    for token in spec.split(";"):
        token = token.strip()
        if not token:
            continue
        probs = token.split(",")
        if len(probs) != n:
            raise ConfigError(f"environment {token!r} does not have {n} probabilities")
        out.append(("explicit", make_env(probs)))
    if not out:
        raise ConfigError("no environments given")
    return out


# Per-process workspace so pooled workers reuse heavy tables across tasks.
_WORKSPACE: dict = {}


def _tables(n: int, horizon: int, node_cap: int,
            params: ApproxParams) -> tuple[QStarTable, MetaGraph]:
    key = (n, horizon, params.as_tuple(), node_cap)
    hit = _WORKSPACE.get(key)
    if hit is None:
        qstar = solve_bamdp_exact(n, horizon)
        graph = build_pruned_meta_graph(n, horizon, qstar, params, node_cap=node_cap)
        hit = (qstar, graph)
        _WORKSPACE[key] = hit
    return hit


def ensure_policy(cfg: RunConfig, cost: Fraction) -> tuple[MetaPolicy, MetaValueTable, str]:
    """Load the solve from cache or compute and cache it.

    Returns the policy, its value table and one of `hit`, `solved` or
    `corrupt-resolved` for reporting.
    """
    cache_dir = cfg.resolved_cache_dir()
    params = cfg.params()
    path = cache_path(cache_dir, cfg.n, cfg.horizon, cost, params)
    status = "solved"
    if path.exists():
        try:
            policy, table = load_policy(path)
            return policy, table, "hit"
        except (CacheCorruptionError, json.JSONDecodeError, KeyError, ValueError):
            status = "corrupt-resolved"
    qstar, graph = _tables(cfg.n, cfg.horizon, cfg.node_cap, params)
    policy, table = solve_meta(graph, cost)
    save_policy(cache_dir, policy, table)
    return policy, table, status


def _write_snapshot(cfg: RunConfig, name: str) -> None:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{name}-config.json", "w", encoding="ascii") as fh:
        json.dump(asdict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_solve(cfg: RunConfig) -> int:
    costs = parse_costs(cfg.costs)
    _write_snapshot(cfg, "solve")
    counts = {"hit": 0, "solved": 0, "corrupt-resolved": 0}
    for c in costs:
        try:
            _, table, status = ensure_policy(cfg, c)
        except ResourceCapError as exc:
            raise ResourceCapError(
                f"c={c} params={cfg.params().as_tuple()}: {exc}") from exc
        counts[status] += 1
        print(f"c={c} root value={table.root_value} [{status}]")
    print(f"cache hits: {counts['hit']}, solves: {counts['solved']}, "
          f"corrupted entries re-solved: {counts['corrupt-resolved']}")
    return EXIT_OK


def _task_seed(master: int, index: int) -> int:
    return master * 1_000_003 + index


def _metric_row(cfg_dict: dict, cost_str: str, env_kind: str,
                env_strs: list[str] | None, index: int) -> str:
    """One sweep task; module level so it can cross a process boundary."""
    cfg = RunConfig(**cfg_dict)
    cost = Fraction(cost_str)
    env = None if env_strs is None else make_env(env_strs)
    policy, _, _ = ensure_policy(cfg, cost)
    qstar, graph = _tables(cfg.n, cfg.horizon, cfg.node_cap, cfg.params())
    ev = evaluate_policy(graph, policy, env=env)
    value = ev.reward
    v_greedy = evaluate_baseline("greedy", cfg.n, cfg.horizon, env=env).reward
    v_star = evaluate_baseline("optimal", cfg.n, cfg.horizon, env=env, qstar=qstar).reward
    try:
        v_norm = normalized_reward(value, v_greedy, v_star)
    except DegenerateNormalizationError:
        v_norm = None
    entropy = exact_mean_entropy_bits(ev)
    omega = None
    seed = None
    episodes = cfg.episodes or None
    if cfg.episodes > 0:
        seed = _task_seed(cfg.seed, index)
        rng = random.Random(seed)
        trajs = []
        for _ in range(cfg.episodes):
            ep_env = env if env is not None else make_env(
                [Fraction(repr(rng.random())) for _ in range(cfg.n)])
            trajs.append(simulate_episode(policy, ep_env, rng))
        entropy, _, _ = mean_action_entropy(trajs)
        if cfg.fit:
            summary = fit_omega(trajs, sign=cfg.sign_convention)
            omega = summary.mean_omega
    record = MetricsRecord(
        n=cfg.n, horizon=cfg.horizon, cost=cost,
        env_p1=env[0] if env else None, env_p2=env[1] if env else None,
        env_kind=env_kind,
        value=value, value_greedy=v_greedy, value_star=v_star, value_norm=v_norm,
        n_c_mean=ev.comp_count, tau_c_mean_norm=ev.mean_comp_time_norm(),
        tau_explore_mean=mean_explore_time(ev), entropy_bits=entropy,
        omega=omega, seed=seed, episodes=episodes,
    )
    return record.to_csv_row()


def cmd_sweep(cfg: RunConfig) -> int:
    costs = parse_costs(cfg.costs)
    envs = parse_envs(cfg.env, cfg.n)
    _write_snapshot(cfg, "sweep")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    resume_path = out / "sweep.resume.json"
    done: dict[str, str] = {}
    if resume_path.exists():
        with open(resume_path, encoding="ascii") as fh:
            done = json.load(fh)
        print(f"resuming: {len(done)} rows already computed")

    tasks = []
    for c in costs:
        for kind, env in envs:
            index = len(tasks)
            env_strs = None if env is None else [str(p) for p in env]
            tasks.append((index, str(c), kind, env_strs))
    cfg_dict = asdict(cfg)
    rows: dict[int, str] = {int(k): v for k, v in done.items()}
    pending = [t for t in tasks if t[0] not in rows]
    try:
        if cfg.workers > 1 and len(pending) > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                futs = {pool.submit(_metric_row, cfg_dict, c, kind, env_strs, i): i
                        for i, c, kind, env_strs in pending}
                for fut in concurrent.futures.as_completed(futs):
                    rows[futs[fut]] = fut.result()
        else:
            for i, c, kind, env_strs in pending:
                rows[i] = _metric_row(cfg_dict, c, kind, env_strs, i)
    except KeyboardInterrupt:
        with open(resume_path, "w", encoding="ascii") as fh:
            json.dump({str(k): v for k, v in sorted(rows.items())}, fh)
        print(f"interrupted; {len(rows)}/{len(tasks)} rows flushed to {resume_path}")
        raise
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for i in range(len(tasks)):
            fh.write(rows[i] + "\n")
    if resume_path.exists():
        resume_path.unlink()
    print(f"wrote {len(tasks)} rows to {csv_path}")
    return EXIT_OK


def cmd_sensitivity(cfg: RunConfig, grid_points: int = 21) -> int:
    costs = parse_costs(cfg.costs)
    if len(costs) < 3:
        raise ConfigError("sensitivity needs a cost grid with at least 3 points")
    _write_snapshot(cfg, "sensitivity")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    solved = [ensure_policy(cfg, c)[0] for c in costs]
    qstar, graph = _tables(cfg.n, cfg.horizon, cfg.node_cap, cfg.params())
    cs = [float(c) for c in costs]
    csv_path = out / "sensitivity.csv"
    grid = [Fraction(i, grid_points - 1) for i in range(grid_points)]
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("p1,p2,chi_tau,chi_V\n")
        for p1 in grid:
            for p2 in grid:
                env = (p1, p2) + (p2,) * (cfg.n - 2)
                values = []
                explore_times = []
                for policy in solved:
                    ev = evaluate_policy(graph, policy, env=env)
                    values.append(float(ev.reward))
                    tau = mean_explore_time(ev)
                    explore_times.append(None if tau is None else float(tau))
                chi_v = sensitivity(values, cs)
                if any(t is None for t in explore_times):
                    chi_tau = ""
                else:
                    chi_tau = format(sensitivity(explore_times, cs), ".17g")
                fh.write(f"{float(p1):.17g},{float(p2):.17g},{chi_tau},"
                         f"{format(chi_v, '.17g')}\n")
    print(f"wrote {grid_points * grid_points} rows to {csv_path}")
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    if cfg.episodes < 1:
        raise ConfigError("fit needs episodes >= 1")
    costs = parse_costs(cfg.costs)
    envs = parse_envs(cfg.env, cfg.n)
    _write_snapshot(cfg, "fit")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    for index, c in enumerate(costs):
        policy, _, _ = ensure_policy(cfg, c)
        rng = random.Random(_task_seed(cfg.seed, index))
        for kind, env in envs:
            trajs = []
            for _ in range(cfg.episodes):
                ep_env = env if env is not None else make_env(
                    [Fraction(repr(rng.random())) for _ in range(cfg.n)])
                trajs.append(simulate_episode(policy, ep_env, rng))
            summary = fit_omega(trajs, sign=cfg.sign_convention)
            pooled = fit_pooled(trajs, sign=cfg.sign_convention)
            summaries.append({
                "cost": str(c),
                "env_kind": kind,
                "env": None if env is None else [str(p) for p in env],
                **summary.to_dict(),
                "pooled_omega": pooled.omega,
                "pooled_beta": pooled.beta,
                "pooled_boundary_hit": pooled.boundary_hit,
            })
            print(f"c={c} {kind}: mean omega {summary.mean_omega}, "
                  f"pooled omega {pooled.omega:.4f}")
    with open(out / "fit.json", "w", encoding="ascii") as fh:
        json.dump(summaries, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def _validate_theorems(cfg: RunConfig) -> list[str]:
    failures = []
    costs = parse_costs(cfg.costs)
    for horizon in range(2, cfg.horizon + 1):
        qstar, graph = _tables(cfg.n, horizon, cfg.node_cap, cfg.params())
        for c in costs:
            policy, _ = solve_meta(graph, c)
            for report in run_theorem_suite(graph, policy, qstar):
                status = "pass" if report.passed else "FAIL"
                print(f"theorems T={horizon} c={c} {report.name}: {status} "
                      f"({report.states_checked} checked)")
                if not report.passed:
                    failures.extend(report.violations[:5])
    return failures


def _validate_oracle(cfg: RunConfig) -> list[str]:
    failures = []
    costs = [Fraction(0), Fraction(1, 64), Fraction(1, 16), Fraction(1, 4),
             Fraction(1), Fraction(10)]
    for horizon in (1, 2):
        qstar, graph = _tables(cfg.n, horizon, cfg.node_cap, cfg.params())
        for c in costs:
            _, table = solve_meta(graph, c)
            reference = brute_force_meta_solve(cfg.n, horizon, c)
            ok = table.root_value == reference.root_value
            print(f"oracle T={horizon} c={c}: solver {table.root_value} "
                  f"reference {reference.root_value} {'pass' if ok else 'FAIL'}")
            if not ok:
                failures.append(f"value mismatch at T={horizon} c={c}")
    qstar3 = solve_bamdp_exact(cfg.n, 3)
    params = ApproxParams(k=16, k_c=3, d=3)
    state = MetaState.from_plan(singleton(zero_belief(cfg.n)))
    pruned = sorted(search_computational_trajectories(state, qstar3, params))
    exhaustive = sorted(brute_force_minimal_mind_changers(state, params, 3))
    ok = pruned == exhaustive
    print(f"oracle trajectory search T=3: {'pass' if ok else 'FAIL'} "
          f"({len(pruned)} sequences)")
    if not ok:
        failures.append("trajectory search mismatch at T=3")
    return failures


def _validate_approx(cfg: RunConfig) -> list[str]:
    failures = []
    horizon = min(cfg.horizon, 4)
    params_list = [ApproxParams(k, kc, d)
                   for k in (2, 4, 8, 16) for kc in (1, 2, 3) for d in (1, 2, 3)]
    for c in parse_costs(cfg.costs):
        report = validate_approximation(cfg.n, horizon, c, params_list)
        print(f"approx T={horizon} c={c}: behavior invariant "
              f"{report.behavior_invariant}, value invariant {report.value_invariant}")
        if not report.behavior_invariant:
            failures.append(f"behavior differs across bounds at c={c}")
    return failures


def cmd_validate(cfg: RunConfig, scope: str) -> int:
    failures = []
    if scope in ("theorems", "all"):
        failures += _validate_theorems(cfg)
    if scope in ("oracle", "all"):
        failures += _validate_oracle(cfg)
    if scope in ("approx", "all"):
        costs_cfg = cfg
        if cfg.costs == RunConfig.costs:
            # the default sweep grid is dense; the agreement matrix needs only
            # a few representative costs
            costs_cfg = RunConfig(**{**asdict(cfg), "costs": "0.01,0.05,0.1"})
        failures += _validate_approx(costs_cfg)
    if failures:
        print(f"{len(failures)} failures:")
        for f in failures:
            print(f"  {f}")
        return EXIT_VALIDATION
    print("all checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metabandit")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--n", type=int)
    common.add_argument("--horizon", type=int)
    common.add_argument("--costs")
    common.add_argument("--env")
    common.add_argument("--k", type=int)
    common.add_argument("--k-c", dest="k_c", type=int)
    common.add_argument("--d", type=int)
    common.add_argument("--episodes", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--workers", type=int)
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--fit", action="store_true", default=None)
    common.add_argument("--sign-convention", dest="sign_convention", type=int)
    common.add_argument("--max-horizon", dest="max_horizon", type=int)
    common.add_argument("--node-cap", dest="node_cap", type=int)
    sub.add_parser("solve", parents=[common])
    sub.add_parser("sweep", parents=[common])
    sens = sub.add_parser("sensitivity", parents=[common])
    sens.add_argument("--grid-points", type=int, default=21)
    sub.add_parser("fit", parents=[common])
    val = sub.add_parser("validate", parents=[common])
    val.add_argument("--scope", choices=["theorems", "oracle", "approx", "all"],
                     default="all")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        with open(args.config, encoding="ascii") as fh:
            data.update(json.load(fh))
    for key in RunConfig.__dataclass_fields__:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    unknown = set(data) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(**data)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "sensitivity":
            return cmd_sensitivity(cfg, grid_points=args.grid_points)
        if args.command == "fit":
            return cmd_fit(cfg)
        if args.command == "validate":
            return cmd_validate(cfg, args.scope)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
