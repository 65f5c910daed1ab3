"""Seeded random instances for every solver.

``generate(GenSpec(...))`` is a pure function of the spec: the same spec
(seed included) always yields the same instance, and every instance passes
``core_types.validate``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from fractions import Fraction

import numpy as np

from .core_types import (Demand, Edge, JobOnProcessor, JobShopInstance, Operation, Processor, RoutingInstance,
                         SchedulingInstance, validate)
from .rng import stream

KINDS = ("nonmigratory", "migratory", "single", "jobshop", "routing")
FAMILIES = ("random", "nested", "agreeable")


@dataclass(frozen=True)
class GenSpec:
    kind: str = "nonmigratory"
    n: int = 3  # jobs, or demands for routing
    m: int = 2  # processors, or nodes for routing
    horizon: int = 4
    alpha_range: tuple = (2.0, 2.0)
    window_density: float = 0.5  # mean window length as a fraction of the horizon
    work_range: tuple = (1, 4)
    seed: int = 0
    window_family: str = "random"
    restricted: float = 0.0  # probability that a (processor, job) pair is forbidden
    ops_range: tuple = (1, 2)  # operations per job (job shop)
    extra_edges: int = 3  # edges beyond the backbone path (routing)
    cost_range: tuple = (1, 3)  # edge cost coefficients (routing)
    bandwidth: int = 1
    directed: bool = True

    @classmethod
    def from_dict(cls, doc: dict) -> "GenSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown generator fields: {sorted(unknown)}")
        clean = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
        return cls(**clean)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    def check(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.window_family not in FAMILIES:
            raise ValueError(f"unknown window family {self.window_family!r}")
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if self.kind == "routing" and self.m < 2:
            raise ValueError("a routing graph needs at least two nodes")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        for name in ("alpha_range", "work_range", "ops_range", "cost_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is empty")
        if self.alpha_range[0] < 1:
            raise ValueError("alpha must be at least 1")
        if self.work_range[0] < 1 or self.cost_range[0] < 1 or self.ops_range[0] < 1:
            raise ValueError("work, cost and operation counts must be at least 1")
        if not 0 < self.window_density <= 1:
            raise ValueError("window_density must lie in (0, 1]")
        if not 0 <= self.restricted < 1:
            raise ValueError("restricted must lie in [0, 1)")
        if self.bandwidth < 1 or self.extra_edges < 0:
            raise ValueError("bandwidth must be >= 1 and extra_edges >= 0")


def _alpha(rng, spec: GenSpec) -> float:
    lo, hi = spec.alpha_range
    return float(round(rng.uniform(lo, hi), 2)) if hi > lo else float(lo)


def _length(rng, spec: GenSpec) -> int:
    mean = spec.window_density * spec.horizon
    return int(min(spec.horizon, max(1, round(mean * rng.uniform(0.5, 1.5)))))


def windows(rng, spec: GenSpec, count: int) -> list[tuple[int, int]]:
    """Integer windows (r, d] inside [0, horizon] shaped by the window family."""
    H = spec.horizon
    if spec.window_family == "random":
        out = []
        for _ in range(count):
            L = _length(rng, spec)
            r = int(rng.integers(0, H - L + 1))
            out.append((r, r + L))
        return out
    if spec.window_family == "agreeable":
        rel = np.sort(rng.integers(0, H, size=count))
        out, last = [], 0
        for r in rel.tolist():
            d = max(last, r + _length(rng, spec))
            d = min(max(d, r + 1), H)
            last = d
            out.append((r, d))
        return out
    # nested: every window lies inside the previous one
    r, d = int(rng.integers(0, max(1, H - _length(rng, spec)) + 1)), H
    out = []
    for _ in range(count):
        out.append((r, d))
        if d - r > 1:
            r2 = int(rng.integers(r, d))
            d2 = int(rng.integers(r2 + 1, d + 1))
            r, d = r2, d2
    return out


def _work(rng, spec: GenSpec) -> int:
    lo, hi = spec.work_range
    return int(rng.integers(lo, hi + 1))


def _scheduling(rng, spec: GenSpec, m: int) -> SchedulingInstance:
    procs = tuple(Processor(i, _alpha(rng, spec)) for i in range(m))
    base = windows(rng, spec, spec.n)
    jobs = []
    for r, d in base:
        allowed = rng.random(m) >= spec.restricted
        if not allowed.any():
            allowed[int(rng.integers(0, m))] = True
        shared = _work(rng, spec)
        row = []
        for i in range(m):
            if not allowed[i]:
                row.append(JobOnProcessor(Fraction(r), Fraction(d), None))
                continue
            w = shared if spec.restricted > 0 else _work(rng, spec)
            row.append(JobOnProcessor(Fraction(r), Fraction(d), Fraction(w)))
        jobs.append(tuple(row))
    return SchedulingInstance(procs, tuple(jobs), name=f"{spec.kind}-{spec.seed}")


def _jobshop(rng, spec: GenSpec) -> JobShopInstance:
    procs = tuple(Processor(i, _alpha(rng, spec)) for i in range(spec.m))
    jobs = []
    lo, hi = spec.ops_range
    for _ in range(spec.n):
        k = int(rng.integers(lo, hi + 1))
        wins = sorted(windows(rng, GenSpec(**{**asdict(spec), "window_family": "random"}), k))
        rel = sorted(r for r, _ in wins)
        dl = sorted(d for _, d in wins)
        chain = []
        for r, d in zip(rel, dl):
            d = max(d, r + 1)
            chain.append(Operation(int(rng.integers(0, spec.m)), Fraction(r), Fraction(d), Fraction(_work(rng, spec))))
        for t in range(1, len(chain)):
            if chain[t].deadline < chain[t - 1].deadline:
                chain[t] = Operation(chain[t].processor, chain[t].release, chain[t - 1].deadline, chain[t].work)
        jobs.append(tuple(chain))
    return JobShopInstance(procs, tuple(jobs), name=f"jobshop-{spec.seed}")


def _routing(rng, spec: GenSpec) -> RoutingInstance:
    N = spec.m
    nodes = tuple(range(N))
    lo, hi = spec.cost_range
    edges = [Edge(v, v + 1, Fraction(int(rng.integers(lo, hi + 1))), _alpha(rng, spec)) for v in range(N - 1)]
    for _ in range(spec.extra_edges):
        t, h = (int(x) for x in rng.choice(N, size=2, replace=False))
        edges.append(Edge(t, h, Fraction(int(rng.integers(lo, hi + 1))), _alpha(rng, spec)))
    demands = []
    for _ in range(spec.n):
        s, t = sorted(int(x) for x in rng.choice(N, size=2, replace=False))
        demands.append(Demand(s, t))
    return RoutingInstance(nodes, tuple(edges), tuple(demands), spec.bandwidth, spec.directed,
                           name=f"routing-{spec.seed}")


def generate(spec: GenSpec):
    spec.check()
    rng = stream(spec.seed, KINDS.index(spec.kind))
    if spec.kind in ("nonmigratory", "migratory"):
        inst = _scheduling(rng, spec, spec.m)
    elif spec.kind == "single":
        inst = _scheduling(rng, GenSpec(**{**asdict(spec), "restricted": 0.0}), 1)
    elif spec.kind == "jobshop":
        inst = _jobshop(rng, spec)
    else:
        inst = _routing(rng, spec)
    problems = validate(inst)
    if problems:
        raise ValueError("generator produced an invalid instance: " + "; ".join(map(str, problems)))
    return inst
