"""Content-addressed on-disk cache for solved policies.

One file per (n, horizon, cost, bounds, code version), self-describing JSON
with exact rationals as "num/den" strings and a checksum over the payload.
Writes are atomic (temp file then rename) so concurrent workers never see a
torn file.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path

from . import __version__
from .meta_solver import (
    ApproxParams,
    Expand,
    MetaAction,
    MetaPolicy,
    MetaValueTable,
    TERMINATE,
)
from .plan_graph import parse_plan, serialize_plan

CACHE_ENV_VAR = "METABANDIT_CACHE_DIR"
FORMAT = "metabandit-policy-v1"


class CacheCorruptionError(RuntimeError):
    """Stored payload does not match its checksum."""


def _fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _parse_fraction(s: str) -> Fraction:
    num, _, den = s.partition("/")
    return Fraction(int(num), int(den or 1))


def _action_str(action: MetaAction) -> str:
    if isinstance(action, Expand):
        belief = ",".join(str(x) for ab in action.node for x in ab)
        return f"E:{belief}:{action.arm}"
    return "T"


def _parse_action(s: str) -> MetaAction:
    if s == "T":
        return TERMINATE
    _, counts, arm = s.split(":")
    flat = [int(x) for x in counts.split(",")]
    return Expand(tuple(zip(flat[0::2], flat[1::2])), int(arm))


def cache_key(n: int, horizon: int, cost: Fraction, params: ApproxParams) -> str:
    """Stable identity of a solve, independent of any solver internals."""
    text = f"{n}|{horizon}|{_fraction_str(Fraction(cost))}|{params.as_tuple()}|{__version__}"
    return hashlib.sha256(text.encode("ascii")).hexdigest()[:24]


def cache_path(cache_dir, n: int, horizon: int, cost: Fraction, params: ApproxParams) -> Path:
    return Path(cache_dir) / f"policy-{cache_key(n, horizon, cost, params)}.json"


def _payload(policy: MetaPolicy, table: MetaValueTable) -> dict:
    return {
        "format": FORMAT,
        "version": __version__,
        "n": policy.n,
        "horizon": policy.horizon,
        "cost": _fraction_str(policy.cost),
        "params": list(policy.params.as_tuple()) if policy.params else None,
        "root": serialize_plan(table.root),
        "actions": {serialize_plan(p): _action_str(a)
                    for p, a in sorted(policy.actions.items(), key=lambda kv: serialize_plan(kv[0]))},
        "values": {serialize_plan(p): _fraction_str(v)
                   for p, v in sorted(table.values.items(), key=lambda kv: serialize_plan(kv[0]))},
    }


def _checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("ascii")).hexdigest()


def save_policy(cache_dir, policy: MetaPolicy, table: MetaValueTable) -> Path:
    """Atomically write the solve under its content-addressed name."""
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    payload = _payload(policy, table)
    doc = {"checksum": _checksum(payload), "payload": payload}
    path = cache_path(cache_dir, policy.n, policy.horizon, policy.cost, policy.params)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="ascii") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path


def load_policy(path) -> tuple[MetaPolicy, MetaValueTable]:
    """Read a cached solve back, verifying the checksum first."""
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    payload = doc.get("payload", {})
    if doc.get("checksum") != _checksum(payload):
        raise CacheCorruptionError(f"checksum mismatch in {path}")
    if payload.get("format") != FORMAT:
        raise CacheCorruptionError(f"unknown cache format in {path}")
    params = payload["params"]
    policy = MetaPolicy(
        n=payload["n"],
        horizon=payload["horizon"],
        cost=_parse_fraction(payload["cost"]),
        params=ApproxParams(*params) if params else None,
        actions={parse_plan(k): _parse_action(v) for k, v in payload["actions"].items()},
    )
    values = {parse_plan(k): _parse_fraction(v) for k, v in payload["values"].items()}
    table = MetaValueTable(parse_plan(payload["root"]), values)
    return policy, table
