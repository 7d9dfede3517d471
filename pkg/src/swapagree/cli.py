"""Command-line front end.

Exit codes: 0 pass, 1 property violation, 2 resource bound hit, 64 usage error.
``SWAPAGREE_SEED`` and ``SWAPAGREE_MEMORY_BUDGET`` set the default seed and
exploration memory budget.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import adversary as adv
from .analysis import DEFAULT_MEMORY_BUDGET, explore, valency
from .checkers import CHECKS, run_checks
from .errors import CorruptionError, SimulationError, UsageError
from .harness import Explicit, RoundRobin, SeededRandom, Solo, initial_configuration, replay, run
from .protocols import PairedKSet, ProtocolParams, SwapKSetAgreement
from .tracefile import config_to_json, dumps_trace, load_run_config, read_trace, write_records

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_RESOURCE = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2, which means "resource bound" here
        raise UsageError(message)


def _default_seed() -> int:
    return int(os.environ.get("SWAPAGREE_SEED", "0"))


def _default_budget() -> int:
    return int(os.environ.get("SWAPAGREE_MEMORY_BUDGET", str(DEFAULT_MEMORY_BUDGET)))


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def parse_schedule(text: str, seed: int):
    """``solo:p0``, ``roundrobin[:order]``, ``random`` or ``explicit:0,1,...``."""
    kind, _, rest = text.partition(":")
    if kind == "solo":
        return Solo(int(rest.lstrip("p")))
    if kind == "roundrobin":
        return RoundRobin(tuple(_int_list(rest)) if rest else None)
    if kind == "random":
        return SeededRandom(seed)
    if kind == "explicit":
        return Explicit(_int_list(rest))
    raise UsageError(f"unknown schedule {text!r}; use solo:pN, roundrobin, random or explicit:...")


def _protocol_args(p: argparse.ArgumentParser, inputs: bool = True) -> None:
    p.add_argument("--n", type=int, help="number of processes")
    p.add_argument("--k", type=int, help="agreement bound")
    p.add_argument("--m", type=int, help="number of input values")
    p.add_argument("--objects", type=int, help="swap object count (default n-k)")
    p.add_argument("--protocol", choices=["kset", "paired"], default=None)
    if inputs:
        p.add_argument("--inputs", type=_int_list, help="comma-separated inputs, one per process")


def _build(ns: argparse.Namespace, config: dict | None = None):
    cfg = dict(config or {})
    for name in ("n", "k", "m", "objects", "protocol"):
        value = getattr(ns, name, None)
        if value is not None:
            cfg[name] = value
    problems = [f"--{f} is required" for f in ("n", "k") if cfg.get(f) is None]
    if problems:
        raise UsageError("; ".join(problems))
    protocol = cfg.get("protocol") or "kset"
    try:
        if protocol == "paired":
            return PairedKSet(cfg["n"], cfg["k"]), cfg
        m = cfg.get("m") or 2
        cfg["m"] = m
        return SwapKSetAgreement(ProtocolParams(cfg["n"], cfg["k"], m, cfg.get("objects"))), cfg
    except SimulationError as exc:
        raise UsageError(str(exc)) from exc


def _inputs(algorithm, given: list[int] | None) -> list[int]:
    inputs = given if given is not None else [p % (algorithm.m or 2) for p in range(algorithm.n)]
    if len(inputs) != algorithm.n:
        raise UsageError(f"--inputs has {len(inputs)} values, expected n={algorithm.n}")
    for v in inputs:
        try:
            algorithm.check_input(v)
        except SimulationError as exc:
            raise UsageError(f"--inputs: {exc}") from exc
    return inputs


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_run(ns: argparse.Namespace) -> int:
    config = load_run_config(ns.config) if ns.config else {}
    algorithm, cfg = _build(ns, config)
    inputs = _inputs(algorithm, ns.inputs if ns.inputs is not None else cfg.get("inputs"))
    seed = ns.seed if ns.seed is not None else cfg.get("seed", _default_seed())
    schedule = parse_schedule(ns.schedule or cfg.get("schedule", "roundrobin"), seed)
    step_limit = ns.step_limit if ns.step_limit is not None else cfg.get("step_limit")
    trace = run(algorithm, inputs, schedule, step_limit)
    _emit(dumps_trace(trace, step_limit), ns.out)
    decided = ", ".join(f"p{d.process}->{d.value}" for d in trace.decisions) or "none"
    print(f"{len(trace.events)} events; decisions: {decided}", file=sys.stderr)
    return EXIT_RESOURCE if trace.limit_hit else EXIT_OK


def cmd_check(ns: argparse.Namespace) -> int:
    props = [p for p in (ns.properties or "").split(",") if p]
    if props == ["all"]:
        props = list(CHECKS)
    if not props:
        raise UsageError(f"no properties given; valid names: {', '.join(CHECKS)}")
    unknown = [p for p in props if p not in CHECKS]
    if unknown:
        raise UsageError(f"unknown properties {unknown}; valid names: {', '.join(CHECKS)}")
    trace = read_trace(ns.trace)
    if isinstance(trace.algorithm, PairedKSet):
        lap_only = [p for p in props if p not in ("k_agreement", "validity")]
        if lap_only:
            raise UsageError(f"{lap_only} apply only to lap-race traces")
    try:
        replay(trace)
        replay_ok = True
    except CorruptionError as exc:
        replay_ok = False
        corruption = {"property": "replay", "verdict": "fail", "witness": {"step": exc.index, "detail": str(exc)}}
    reports = run_checks(trace, props, ns.k)
    records = [r.to_json() for r in reports]
    if not replay_ok:
        records.insert(0, corruption)
    write_records(records, ns.out or sys.stdout)
    return EXIT_OK if replay_ok and all(reports) else EXIT_VIOLATION


def cmd_adversary(ns: argparse.Namespace) -> int:
    if ns.k is None or ns.n is None:
        raise UsageError("--n and --k are required")
    m = ns.m if ns.m is not None else ns.k + 1
    try:
        params = ProtocolParams(ns.n, ns.k, m, ns.objects)
    except SimulationError as exc:
        raise UsageError(str(exc)) from exc
    seed = ns.seed if ns.seed is not None else _default_seed()
    outcome = adv.adversary(params, budget=ns.budget, seed=seed)
    record = adv.summary(outcome, params.object_count)
    record["lower_bound"] = adv.lower_bound(params.n, params.k)
    final = outcome
    while isinstance(final, adv.Reduction):
        final = final.outcome if final.outcome is not None else final.sub
    if isinstance(final, adv.Violation) and ns.out:
        Path(ns.out).write_text(dumps_trace(final.trace), encoding="utf-8")
        record["trace"] = ns.out
    write_records([record], ns.summary or sys.stdout)
    if isinstance(final, adv.Violation):
        return EXIT_VIOLATION
    if isinstance(final, adv.NotObstructionFreeVerdict):
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_explore(ns: argparse.Namespace) -> int:
    algorithm, _ = _build(ns)
    inputs = _inputs(algorithm, ns.inputs)
    summary = explore(algorithm, inputs, ns.depth, memory_budget=ns.memory_budget or _default_budget())
    record = summary.to_json()
    record["inputs"] = inputs
    write_records([record], ns.out or sys.stdout)
    if summary.max_distinct_decided > algorithm.k or not summary.validity_ok:
        return EXIT_VIOLATION
    if summary.truncated:
        print("exploration truncated by the memory budget", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK


def _group(text: str, n: int) -> list[int]:
    """``q0,q1`` names the last two processes; ``p3`` or ``3`` names a process id."""
    group = []
    for item in text.split(","):
        item = item.strip()
        if item.startswith("q"):
            idx = int(item[1:])
            if not 0 <= idx <= 1:
                raise UsageError("only q0 and q1 are defined")
            group.append(n - 2 + idx)
        else:
            group.append(int(item.lstrip("p")))
    if any(not 0 <= p < n for p in group):
        raise UsageError(f"process ids must lie in 0..{n - 1}")
    return group


def cmd_valency(ns: argparse.Namespace) -> int:
    algorithm, _ = _build(ns)
    group = _group(ns.q, algorithm.n)
    if ns.inputs is None:
        inputs = [0] * algorithm.n
        if algorithm.n >= 2:
            inputs[algorithm.n - 1] = 1
    else:
        inputs = _inputs(algorithm, ns.inputs)
    config = initial_configuration(algorithm, inputs)
    report = valency(algorithm, config, group, ns.depth)
    record = report.to_json()
    record["inputs"] = inputs
    write_records([record], ns.out or sys.stdout)
    return EXIT_OK


def cmd_replay(ns: argparse.Namespace) -> int:
    trace = read_trace(ns.trace)
    try:
        final = replay(trace)
    except CorruptionError as exc:
        write_records([{"replay": "fail", "step": exc.index, "detail": str(exc)}], sys.stdout)
        return EXIT_VIOLATION
    write_records([{"replay": "ok", "events": len(trace.events), "final": config_to_json(trace.algorithm, final)}], ns.out or sys.stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swapagree", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="execute a schedule and write its trace")
    _protocol_args(p)
    p.add_argument("--schedule", help="solo:pN | roundrobin[:order] | random | explicit:p,p,...")
    p.add_argument("--seed", type=int)
    p.add_argument("--step-limit", type=int)
    p.add_argument("--config", help="JSON run-parameter file")
    p.add_argument("--out", help="trace file (default: stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="run property checkers on a trace file")
    p.add_argument("trace")
    p.add_argument("--properties", default="", help=f"comma list or 'all' ({', '.join(CHECKS)})")
    p.add_argument("--k", type=int, help="agreement bound (default: from the trace)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("adversary", help="run the consume adversary against the lap-race protocol")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int, help="number of input values (default k+1)")
    p.add_argument("--objects", type=int)
    p.add_argument("--budget", type=int, default=10_000, help="random schedules tried when k > 1")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="violation trace file")
    p.add_argument("--summary", help="summary record file (default: stdout)")
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("explore", help="exhaustive bounded schedule exploration")
    _protocol_args(p)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--memory-budget", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("valency", help="classify a process set in an initial configuration")
    _protocol_args(p)
    p.add_argument("--q", default="q0,q1", help="process set, e.g. q0,q1 or 1,2")
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--out")
    p.set_defaults(func=cmd_valency)

    p = sub.add_parser("replay", help="re-execute a trace file and verify it")
    p.add_argument("trace")
    p.add_argument("--out")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorruptionError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, FileNotFoundError) else EXIT_VIOLATION
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
