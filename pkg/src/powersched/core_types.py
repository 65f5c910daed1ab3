"""Problem-instance data model, validation and JSON (de)serialization.

Times and works are exact :class:`fractions.Fraction` values; power
exponents and routing cost coefficients are reals.  Solvers convert to
floats at their own boundary.

A job that cannot run on a processor carries ``work=None`` for that
processor (the "infinite work" sentinel of the restricted-assignment model).
"""
from __future__ import annotations

import io
import json
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable

SCHEMA = "powersched/1"
KINDS = ("scheduling", "jobshop", "routing")


class SchemaError(ValueError):
    """Raised when a document does not follow the ``powersched/1`` schema."""

    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path = path
        self.line = line
        where = path or "<document>"
        if line is not None:
            where = f"line {line}: {where}"
        super().__init__(f"{where}: {message}")


def to_fraction(value: Any) -> Fraction:
    """Parse an int, a ``"p/q"`` string or a Fraction.  Floats are rejected
    unless they are integral, to keep rational data exact."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if value.is_integer():
            return Fraction(int(value))
        raise TypeError(f"non-integral float {value!r}; use a 'p/q' string")
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def fraction_to_json(value: Fraction) -> int | str:
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Processor:
    id: int
    alpha: float


@dataclass(frozen=True)
class JobOnProcessor:
    release: Fraction
    deadline: Fraction
    work: Fraction | None  # None: the job cannot run on this processor

    @property
    def finite(self) -> bool:
        return self.work is not None

    @property
    def window(self) -> Fraction:
        return self.deadline - self.release


@dataclass(frozen=True)
class SchedulingInstance:
    """n jobs x m processors; ``jobs[j][i]`` describes job j on processor i."""

    processors: tuple[Processor, ...]
    jobs: tuple[tuple[JobOnProcessor, ...], ...]
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def m(self) -> int:
        return len(self.processors)

    @property
    def alpha_max(self) -> float:
        return max(p.alpha for p in self.processors)

    def entry(self, i: int, j: int) -> JobOnProcessor:
        return self.jobs[j][i]

    def finite_pairs(self) -> list[tuple[int, int]]:
        """(i, j) pairs with finite work, ordered by job then processor."""
        return [(i, j) for j in range(self.n) for i in range(self.m)
                if self.jobs[j][i].finite]

    @classmethod
    def single_processor(cls, jobs: Iterable[tuple], alpha: float, name: str = "") -> "SchedulingInstance":
        """Build a one-processor instance from ``(release, deadline, work)`` triples."""
        rows = tuple((JobOnProcessor(to_fraction(r), to_fraction(d), to_fraction(w)),)
                     for r, d, w in jobs)
        return cls((Processor(0, float(alpha)),), rows, name)


@dataclass(frozen=True)
class Operation:
    processor: int
    release: Fraction
    deadline: Fraction
    work: Fraction


@dataclass(frozen=True)
class JobShopInstance:
    processors: tuple[Processor, ...]
    jobs: tuple[tuple[Operation, ...], ...]
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def m(self) -> int:
        return len(self.processors)

    @property
    def mu(self) -> int:
        """Total number of operations over all chains."""
        return sum(len(chain) for chain in self.jobs)

    @property
    def alpha_max(self) -> float:
        return max(p.alpha for p in self.processors)


@dataclass(frozen=True)
class Edge:
    tail: Any
    head: Any
    cost: Fraction
    alpha: float


@dataclass(frozen=True)
class Demand:
    source: Any
    destination: Any


@dataclass(frozen=True)
class RoutingInstance:
    """Uniform-demand routing.  With ``directed=False`` each edge may be
    traversed in both directions and both directions share its energy."""

    nodes: tuple
    edges: tuple[Edge, ...]
    demands: tuple[Demand, ...]
    bandwidth: int = 1
    directed: bool = True
    name: str = ""

    @property
    def alpha_max(self) -> float:
        return max(e.alpha for e in self.edges)

    def arcs(self) -> list[tuple[int, Any, Any]]:
        """Directed arcs as ``(edge index, tail, head)``."""
        out = [(k, e.tail, e.head) for k, e in enumerate(self.edges)]
        if not self.directed:
            out += [(k, e.head, e.tail) for k, e in enumerate(self.edges)]
        return out


Instance = SchedulingInstance | JobShopInstance | RoutingInstance


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


def _reachable(instance: RoutingInstance, source) -> set:
    adj: dict[Any, list] = {}
    for _, u, v in instance.arcs():
        adj.setdefault(u, []).append(v)
    seen = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def _check_alpha(processors, out: list[Violation]) -> None:
    for k, p in enumerate(processors):
        if p.id != k:
            out.append(Violation(f"processors[{k}].id", f"ids must be dense 0..m-1, got {p.id}"))
        if not p.alpha >= 1:
            out.append(Violation(f"processors[{k}].alpha", f"alpha must be >= 1, got {p.alpha}"))


def validate(instance: Instance) -> list[Violation]:
    """Return every invariant violation; an empty list means the instance is valid."""
    out: list[Violation] = []
    if isinstance(instance, SchedulingInstance):
        _check_alpha(instance.processors, out)
        if instance.m == 0:
            out.append(Violation("processors", "at least one processor required"))
        for j, row in enumerate(instance.jobs):
            if len(row) != instance.m:
                out.append(Violation(f"jobs[{j}]", f"expected {instance.m} entries, got {len(row)}"))
                continue
            if not any(e.finite for e in row):
                out.append(Violation(f"jobs[{j}]", "job has infinite work on every processor"))
            for i, e in enumerate(row):
                if not e.finite:
                    continue
                p = f"jobs[{j}][{i}]"
                if e.release < 0 or e.deadline < 0:
                    out.append(Violation(p, "negative time"))
                if e.work < 0:
                    out.append(Violation(f"{p}.work", "negative work"))
                if e.release >= e.deadline:
                    out.append(Violation(p, "empty window"))
    elif isinstance(instance, JobShopInstance):
        _check_alpha(instance.processors, out)
        for j, chain in enumerate(instance.jobs):
            if not chain:
                out.append(Violation(f"jobs[{j}]", "job has no operations"))
            for k, op in enumerate(chain):
                p = f"jobs[{j}].operations[{k}]"
                if not 0 <= op.processor < instance.m:
                    out.append(Violation(f"{p}.processor", f"unknown processor {op.processor}"))
                if op.release < 0 or op.deadline < 0:
                    out.append(Violation(p, "negative time"))
                if op.work <= 0:
                    out.append(Violation(f"{p}.work", "work must be positive"))
                if op.release >= op.deadline:
                    out.append(Violation(p, "empty window"))
                if k > 0:
                    prev = chain[k - 1]
                    if op.release < prev.release:
                        out.append(Violation(f"{p}.release", "releases must be non-decreasing along the chain"))
                    if op.deadline < prev.deadline:
                        out.append(Violation(f"{p}.deadline", "deadlines must be non-decreasing along the chain"))
    elif isinstance(instance, RoutingInstance):
        nodes = set(instance.nodes)
        if instance.bandwidth < 1:
            out.append(Violation("bandwidth", "bandwidth must be an integer >= 1"))
        for k, e in enumerate(instance.edges):
            if e.tail not in nodes or e.head not in nodes:
                out.append(Violation(f"edges[{k}]", "endpoint is not a declared node"))
            if not e.cost > 0:
                out.append(Violation(f"edges[{k}].cost", "cost coefficient must be positive"))
            if not e.alpha >= 1:
                out.append(Violation(f"edges[{k}].alpha", "alpha must be >= 1"))
        for k, dmd in enumerate(instance.demands):
            if dmd.source == dmd.destination:
                out.append(Violation(f"demands[{k}]", "source equals destination"))
            elif dmd.destination not in _reachable(instance, dmd.source):
                out.append(Violation(f"demands[{k}]", "no path from source to destination"))
    else:
        out.append(Violation("", f"unknown instance type {type(instance).__name__}"))
    return out


# ---------------------------------------------------------------------------
# JSON

def _proc_to_json(p: Processor) -> dict:
    return {"id": p.id, "alpha": p.alpha}


def to_document(instance: Instance) -> dict:
    if isinstance(instance, SchedulingInstance):
        doc = {
            "kind": "scheduling",
            "processors": [_proc_to_json(p) for p in instance.processors],
            "jobs": [[{"release": fraction_to_json(e.release),
                       "deadline": fraction_to_json(e.deadline),
                       "work": "inf" if e.work is None else fraction_to_json(e.work)}
                      for e in row] for row in instance.jobs],
        }
    elif isinstance(instance, JobShopInstance):
        doc = {
            "kind": "jobshop",
            "processors": [_proc_to_json(p) for p in instance.processors],
            "jobs": [{"operations": [{"processor": op.processor,
                                      "release": fraction_to_json(op.release),
                                      "deadline": fraction_to_json(op.deadline),
                                      "work": fraction_to_json(op.work)} for op in chain]}
                     for chain in instance.jobs],
        }
    elif isinstance(instance, RoutingInstance):
        doc = {
            "kind": "routing",
            "nodes": list(instance.nodes),
            "edges": [{"tail": e.tail, "head": e.head, "cost": fraction_to_json(e.cost),
                       "alpha": e.alpha} for e in instance.edges],
            "demands": [{"source": d.source, "destination": d.destination} for d in instance.demands],
            "bandwidth": instance.bandwidth,
            "directed": instance.directed,
        }
    else:
        raise TypeError(f"unknown instance type {type(instance).__name__}")
    doc["schema"] = SCHEMA
    if instance.name:
        doc["name"] = instance.name
    return doc


def dumps(instance: Instance) -> str:
    """Canonical serialization: sorted keys, normalized rationals."""
    return json.dumps(to_document(instance), sort_keys=True, indent=2) + "\n"


def _req(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", path)
    if key not in obj:
        raise SchemaError(f"missing required field '{key}'", f"{path}.{key}" if path else key)
    return obj[key]


def _rational(obj: dict, key: str, path: str) -> Fraction:
    raw = _req(obj, key, path)
    try:
        return to_fraction(raw)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"bad rational {raw!r} ({exc})", f"{path}.{key}") from None


def _real(obj: dict, key: str, path: str) -> float:
    raw = _req(obj, key, path)
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise SchemaError(f"expected a number, got {raw!r}", f"{path}.{key}")
    return float(raw)


def _processors(doc: dict) -> tuple[Processor, ...]:
    procs = _req(doc, "processors", "")
    if not isinstance(procs, list):
        raise SchemaError("expected a list", "processors")
    return tuple(Processor(int(_req(p, "id", f"processors[{k}]")), _real(p, "alpha", f"processors[{k}]"))
                 for k, p in enumerate(procs))


def from_document(doc: Any) -> Instance:
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    schema = _req(doc, "schema", "")
    if schema != SCHEMA:
        raise SchemaError(f"schema version mismatch: expected {SCHEMA!r}, got {schema!r}", "schema")
    kind = _req(doc, "kind", "")
    name = doc.get("name", "")
    if kind == "scheduling":
        procs = _processors(doc)
        rows = []
        for j, row in enumerate(_req(doc, "jobs", "")):
            if not isinstance(row, list):
                raise SchemaError("expected a list of per-processor entries", f"jobs[{j}]")
            entries = []
            for i, e in enumerate(row):
                p = f"jobs[{j}][{i}]"
                raw_work = _req(e, "work", p)
                work = None if raw_work == "inf" else _rational(e, "work", p)
                entries.append(JobOnProcessor(_rational(e, "release", p), _rational(e, "deadline", p), work))
            rows.append(tuple(entries))
        return SchedulingInstance(procs, tuple(rows), name)
    if kind == "jobshop":
        procs = _processors(doc)
        chains = []
        for j, job in enumerate(_req(doc, "jobs", "")):
            ops = []
            for k, op in enumerate(_req(job, "operations", f"jobs[{j}]")):
                p = f"jobs[{j}].operations[{k}]"
                ops.append(Operation(int(_req(op, "processor", p)), _rational(op, "release", p),
                                     _rational(op, "deadline", p), _rational(op, "work", p)))
            chains.append(tuple(ops))
        return JobShopInstance(procs, tuple(chains), name)
    if kind == "routing":
        nodes = tuple(_req(doc, "nodes", ""))
        edges = tuple(Edge(_req(e, "tail", f"edges[{k}]"), _req(e, "head", f"edges[{k}]"),
                           _rational(e, "cost", f"edges[{k}]"), _real(e, "alpha", f"edges[{k}]"))
                      for k, e in enumerate(_req(doc, "edges", "")))
        demands = tuple(Demand(_req(d, "source", f"demands[{k}]"), _req(d, "destination", f"demands[{k}]"))
                        for k, d in enumerate(_req(doc, "demands", "")))
        bandwidth = _req(doc, "bandwidth", "")
        if isinstance(bandwidth, bool) or not isinstance(bandwidth, int):
            raise SchemaError("bandwidth must be an integer", "bandwidth")
        return RoutingInstance(nodes, edges, demands, bandwidth, bool(doc.get("directed", True)), name)
    raise SchemaError(f"unknown kind {kind!r}; expected one of {KINDS}", "kind")


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"parse error: {exc.msg}", f"column {exc.colno}", exc.lineno) from None
    return from_document(doc)


def load(source) -> Instance:
    """Load from a path or a text stream."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return loads(fh.read())
    return loads(source.read())


def save(instance: Instance, target) -> None:
    text = dumps(instance)
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        target.write(text)
