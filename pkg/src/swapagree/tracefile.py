"""Line-delimited JSON files for traces, run configs and reports.

A trace file is one header record, one record per event, and a closing
``{"final": ...}`` record holding the final configuration::

    {"n": 2, "k": 1, "m": 2, "objects": 1, "inputs": [0, 1], "schedule": "solo:p0", "seed": null, ...}
    {"step": 0, "pid": 0, "op": "swap", "obj": 0, "arg": [[1, 0], 0], "resp": [[0, 0], "bot"], "decide": null}
    ...
    {"final": {"objects": [...], "processes": [...], "decisions": [[0, 0, 3]], "steps": 4}}

Lap counters are integer arrays and ⊥ is the string ``"bot"``. Output is
deterministic: the same trace always serializes to the same bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Any, Iterable

from .errors import CorruptionError, UsageError
from .harness import Configuration, Decision, Trace, TraceEvent, initial_configuration
from .protocols import algorithm_from_header

HEADER_FIELDS = ("n", "k", "m", "objects", "inputs", "schedule", "seed")


def _dumps(record: dict) -> str:
    return json.dumps(record, separators=(", ", ": "), ensure_ascii=False)


def config_to_json(algorithm: Any, config: Configuration) -> dict:
    return {
        "objects": [algorithm.value_to_json(v) for v in config.store.cells],
        "processes": [algorithm.state_to_json(s) for s in config.processes],
        "decisions": [[d.process, d.value, d.step_index] for d in config.decisions],
        "steps": config.step_count,
    }


def config_from_json(algorithm: Any, raw: dict) -> Configuration:
    store = algorithm.initial_store()
    cells = [algorithm.value_from_json(v) for v in raw["objects"]]
    if len(cells) != len(store):
        raise CorruptionError(f"snapshot has {len(cells)} objects, protocol uses {len(store)}")
    for i, value in enumerate(cells):
        store.swap(i, value)
    processes = tuple(algorithm.state_from_json(s) for s in raw["processes"])
    decisions = tuple(Decision(int(p), int(v), s) for p, v, s in raw["decisions"])
    return Configuration(store, processes, decisions, int(raw["steps"]))


def _event_to_json(algorithm: Any, event: TraceEvent) -> dict:
    return {
        "step": event.step,
        "pid": event.pid,
        "op": event.op,
        "obj": event.obj,
        "arg": algorithm.value_to_json(event.arg),
        "resp": algorithm.value_to_json(event.resp),
        "decide": event.decide,
    }


def _event_from_json(algorithm: Any, raw: dict) -> TraceEvent:
    try:
        return TraceEvent(
            int(raw["step"]),
            int(raw["pid"]),
            str(raw["op"]),
            int(raw["obj"]),
            algorithm.value_from_json(raw["arg"]),
            algorithm.value_from_json(raw["resp"]),
            raw["decide"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptionError(f"malformed event record {raw!r}: {exc}") from exc


def trace_header(trace: Trace, step_limit: int | None = None) -> dict:
    algorithm = trace.algorithm
    meta = algorithm.header()
    header = {
        "n": meta["n"],
        "k": meta["k"],
        "m": meta["m"],
        "objects": meta["objects"],
        "inputs": list(trace.inputs),
        "schedule": trace.schedule,
        "seed": trace.seed,
        "protocol": meta["protocol"],
        "limit_hit": trace.limit_hit,
    }
    if step_limit is not None:
        header["step_limit"] = step_limit
    if trace.start != initial_configuration(algorithm, trace.inputs):
        header["start"] = config_to_json(algorithm, trace.start)
    return header


def dumps_trace(trace: Trace, step_limit: int | None = None) -> str:
    algorithm = trace.algorithm
    lines = [_dumps(trace_header(trace, step_limit))]
    lines.extend(_dumps(_event_to_json(algorithm, e)) for e in trace.events)
    lines.append(_dumps({"final": config_to_json(algorithm, trace.final)}))
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, path: str | Path, step_limit: int | None = None) -> None:
    Path(path).write_text(dumps_trace(trace, step_limit), encoding="utf-8")


def loads_trace(text: str) -> Trace:
    records = []
    for lineno, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise CorruptionError(f"line {lineno + 1} is not JSON: {exc}", lineno) from exc
    if len(records) < 2:
        raise CorruptionError("trace file needs a header and a final record")
    header, *body = records
    missing = [f for f in HEADER_FIELDS if f not in header]
    if missing:
        raise CorruptionError(f"trace header lacks fields {missing}")
    algorithm = algorithm_from_header(header)
    if "final" not in body[-1]:
        raise CorruptionError("trace file lacks a final record")
    inputs = tuple(int(x) for x in header["inputs"])
    if "start" in header:
        start = config_from_json(algorithm, header["start"])
    else:
        start = initial_configuration(algorithm, inputs)
    events = [_event_from_json(algorithm, raw) for raw in body[:-1]]
    final = config_from_json(algorithm, body[-1]["final"])
    return Trace(
        algorithm,
        inputs,
        events,
        final,
        start,
        header["schedule"],
        header["seed"],
        bool(header.get("limit_hit", False)),
    )


def read_trace(path: str | Path) -> Trace:
    return loads_trace(Path(path).read_text(encoding="utf-8"))


def write_records(records: Iterable[dict], path: str | Path | IO[str]) -> None:
    """Write plain report records, one JSON object per line."""
    text = "".join(_dumps(r) + "\n" for r in records)
    if isinstance(path, (str, Path)):
        Path(path).write_text(text, encoding="utf-8")
    else:
        path.write(text)


def read_records(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def load_run_config(path: str | Path) -> dict:
    """Read a run-parameter file: one JSON object using the trace header's field names."""
    text = Path(path).read_text(encoding="utf-8").strip()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not a JSON object: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError(f"{path}: expected a JSON object")
    return raw
