"""Run one solver on one instance, or a whole plan of generated instances, and
report the results as CSV rows.

A plan is a JSON object::

    {"seed": 7,
     "entries": [{"generator": {"kind": "nonmigratory", "n": 3, "seed": 0},
                  "count": 4, "solver": "nonmigratory", "epsilon": "1/2",
                  "trials": 200, "oracle": true, "max_combos": 1000000}],
     "output": "results.csv"}

Instance ``k`` of an entry is generated with generator seed ``seed + k``; the
rounding trials of entry ``e``, instance ``k`` draw from ``stream(seed, e, k, t)``.
Report rows hold no timings, so a re-run writes the same bytes; wall times go
to a separate sidecar file.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from . import jobshop as js
from . import migratory as mg
from . import nonmigratory as nm
from . import oracle as orc
from . import routing as rt
from . import single_nonpreemptive as sn
from .core_types import JobShopInstance, RoutingInstance, SchedulingInstance
from .discretize import DEFAULT_MAX_WINDOWS
from .generators import GenSpec, generate
from .probability import generalized_bell

SOLVERS = ("nonmigratory", "migratory", "single", "jobshop", "routing")
DEFAULT_TRIALS = 100
DEFAULT_EPSILON = Fraction(1, 2)
DEFAULT_DELTA = 0.1
DEFAULT_TOL = 1e-7

COLUMNS = ("entry", "instance", "kind", "n", "m", "parameter", "trials", "lp", "ip", "ip_status", "mean_energy",
           "stderr", "best_energy", "ratio_mean", "ratio_best", "ratio_to_ip", "bell", "guarantee", "violations",
           "checks_ok")
TIMING_COLUMNS = ("entry", "instance", "solve_seconds", "oracle_seconds")


class PlanError(ValueError):
    """The experiment plan is malformed."""


def parse_fraction(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a rational number: {text!r}") from None


def expected_type(kind: str):
    return {"jobshop": JobShopInstance, "routing": RoutingInstance}.get(kind, SchedulingInstance)


@dataclass
class Params:
    epsilon: Fraction = DEFAULT_EPSILON
    delta: float = DEFAULT_DELTA
    tol: float = DEFAULT_TOL
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    max_windows: int = DEFAULT_MAX_WINDOWS
    max_combos: int | None = None

    def label(self, kind: str) -> str:
        if kind == "migratory":
            return f"delta={self.delta:g}"
        if kind == "routing":
            return f"tol={self.tol:g}"
        return f"epsilon={self.epsilon}"


@dataclass
class Outcome:
    kind: str
    n: int
    m: int
    lp: float
    energies: list
    guarantee: float | None
    bell: float | None
    violations: list
    document: dict
    ip: float | None = None
    ip_status: str = "skipped"
    solve_seconds: float = 0.0
    oracle_seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return sum(self.energies) / len(self.energies)

    @property
    def best(self) -> float:
        return min(self.energies)

    @property
    def stderr(self) -> float:
        T = len(self.energies)
        if T < 2:
            return 0.0
        mu = self.mean
        return math.sqrt(sum((e - mu) ** 2 for e in self.energies) / (T - 1) / T)

    def check_failures(self) -> list[str]:
        out = [f"schedule: {v}" for v in self.violations]
        slack = lambda *v: 1e-6 * max(1.0, *(abs(x) for x in v))
        if self.lp > self.best + slack(self.lp, self.best):
            out.append(f"lp {self.lp} exceeds best energy {self.best}")
        if self.ip is not None:
            if self.kind == "migratory":
                if abs(self.lp - self.ip) > slack(self.lp, self.ip):
                    out.append(f"lp {self.lp} differs from enumeration {self.ip}")
            else:
                if self.kind != "single" and self.lp > self.ip + slack(self.lp, self.ip):
                    out.append(f"lp {self.lp} exceeds ip {self.ip}")
                if self.ip > self.best + slack(self.ip, self.best):
                    out.append(f"ip {self.ip} exceeds best energy {self.best}")
        return out


def solve_instance(kind: str, instance, params: Params, prefix: tuple = ()) -> Outcome:
    if kind not in SOLVERS:
        raise KeyError(kind)
    want = expected_type(kind)
    if not isinstance(instance, want):
        raise TypeError(f"solver {kind!r} needs a {want.__name__}, got {type(instance).__name__}")
    t0 = time.perf_counter()
    if kind == "nonmigratory":
        res = nm.solve_and_round(instance, params.epsilon, params.seed, params.trials, prefix=prefix)
        out = Outcome(kind, instance.n, instance.m, res.report.lp_value, res.energies.tolist(),
                      res.report.guarantee_factor, res.report.bell_alpha, list(res.report.violations),
                      res.schedule.to_document(), extra={"model": res.model})
    elif kind == "migratory":
        res = mg.solve_migratory(instance, params.delta)
        report = mg.validate_fractional(res.schedule)
        energy = res.schedule.energy()
        out = Outcome(kind, instance.n, instance.m, res.lp_value, [energy], res.guarantee_factor, None,
                      list(report.violations) + ([] if res.status == "optimal" else [f"lp status {res.status}"]),
                      res.schedule.to_document())
    elif kind == "single":
        res = sn.solve_single(instance, instance.processors[0].alpha, params.epsilon, params.seed, params.trials,
                              prefix=prefix)
        out = Outcome(kind, instance.n, 1, res.report.lp_value, res.energies.tolist(), res.report.guarantee_factor,
                      res.report.bell_alpha, list(res.report.violations), res.schedule.to_document())
    elif kind == "jobshop":
        res = js.solve_jobshop(instance, params.epsilon, params.seed, params.trials, params.max_windows, prefix)
        out = Outcome(kind, instance.n, instance.m, res.report.lp_value, res.energies.tolist(),
                      res.report.guarantee_factor, res.report.bell_alpha, list(res.report.violations),
                      res.schedule.to_document(), extra={"model": res.model})
    else:
        res = rt.solve_and_round_routing(instance, params.seed, params.trials, params.tol, prefix)
        arcs = instance.arcs()
        doc = {"paths": [[list(arcs[a][1:]) for a in p] for p in res.best_paths],
               "energy": float(res.energies.min())}
        out = Outcome(kind, len(instance.demands), len(instance.nodes), res.report.relaxation,
                      res.energies.tolist(), None, res.report.bell_alpha,
                      [] if res.relaxation.status == "optimal" else [f"relaxation {res.relaxation.status}"], doc,
                      extra={"per_edge_ok": res.report.per_edge_ok})
    out.solve_seconds = time.perf_counter() - t0
    return out


def run_oracle(kind: str, instance, params: Params, model=None) -> orc.OracleResult:
    """Exact optimum of the same discretized problem the solver relaxes.
    Raises ``OracleRefusal`` when the instance is beyond the oracle's limits."""
    limit = params.max_combos
    if kind == "nonmigratory":
        return orc.ip_nonmigratory(instance, model or params.epsilon, limit or orc.DEFAULT_MAX_STATES,
                                   with_solution=False)
    if kind == "migratory":
        return orc.ip_migratory(instance, params.delta, limit or 50_000)
    if kind == "single":
        return orc.continuous_single_processor(sn._jobs(instance), instance.processors[0].alpha)
    if kind == "jobshop":
        model = model or js.JobShopModel(instance, params.epsilon, params.max_windows)
        return orc.ip_jobshop(instance, model, limit or orc.DEFAULT_MAX_COMBINATIONS)
    if kind == "routing":
        return orc.ip_routing(instance, limit or orc.DEFAULT_MAX_COMBINATIONS)
    raise KeyError(kind)


def attach_oracle(outcome: Outcome, instance, params: Params) -> Outcome:
    t0 = time.perf_counter()
    try:
        res = run_oracle(outcome.kind, instance, params, outcome.extra.get("model"))
        outcome.ip, outcome.ip_status = res.value, "ok"
    except orc.OracleRefusal:
        outcome.ip_status = "refused"
    outcome.oracle_seconds = time.perf_counter() - t0
    return outcome


# ---------------------------------------------------------------------------
# reports

def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.10g}"
    return str(v)


def report_row(entry: int, name: str, outcome: Outcome, params: Params) -> dict:
    ratio = lambda v, base: v / base if base and base > 0 else None
    failures = outcome.check_failures()
    return {
        "entry": entry, "instance": name, "kind": outcome.kind, "n": outcome.n, "m": outcome.m,
        "parameter": params.label(outcome.kind), "trials": len(outcome.energies),
        "lp": outcome.lp, "ip": outcome.ip, "ip_status": outcome.ip_status,
        "mean_energy": outcome.mean, "stderr": outcome.stderr, "best_energy": outcome.best,
        "ratio_mean": ratio(outcome.mean, outcome.lp), "ratio_best": ratio(outcome.best, outcome.lp),
        "ratio_to_ip": ratio(outcome.best, outcome.ip), "bell": outcome.bell, "guarantee": outcome.guarantee,
        "violations": len(failures), "checks_ok": not failures,
    }


def write_csv(rows: list[dict], columns=COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writeheader()
    for r in rows:
        w.writerow({k: fmt(r.get(k)) for k in columns})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# plans

@dataclass
class PlanEntry:
    generator: GenSpec
    solver: str
    params: Params
    count: int = 1
    oracle: bool = False


@dataclass
class ExperimentPlan:
    seed: int
    entries: list
    output: str | None = None
    timings: str | None = None


ENTRY_KEYS = {"generator", "count", "solver", "epsilon", "delta", "tol", "trials", "oracle", "max_combos",
              "max_windows"}


def plan_from_document(doc) -> ExperimentPlan:
    if not isinstance(doc, dict):
        raise PlanError("plan must be a JSON object")
    if "seed" not in doc or not isinstance(doc["seed"], int):
        raise PlanError("plan needs an integer 'seed'")
    raw = doc.get("entries")
    if not isinstance(raw, list) or not raw:
        raise PlanError("plan needs a non-empty 'entries' list")
    entries = []
    for e, item in enumerate(raw):
        if not isinstance(item, dict):
            raise PlanError(f"entries[{e}] must be an object")
        unknown = set(item) - ENTRY_KEYS
        if unknown:
            raise PlanError(f"entries[{e}]: unknown fields {sorted(unknown)}")
        gen = item.get("generator")
        if not isinstance(gen, dict) or "seed" not in gen:
            raise PlanError(f"entries[{e}].generator must be an object with an explicit 'seed'")
        try:
            spec = GenSpec.from_dict(gen)
            spec.check()
        except (TypeError, ValueError) as exc:
            raise PlanError(f"entries[{e}].generator: {exc}") from None
        solver = item.get("solver", spec.kind)
        if solver not in SOLVERS:
            raise PlanError(f"entries[{e}]: unknown solver {solver!r}")
        try:
            params = Params(epsilon=parse_fraction(item.get("epsilon", DEFAULT_EPSILON)),
                            delta=float(item.get("delta", DEFAULT_DELTA)), tol=float(item.get("tol", DEFAULT_TOL)),
                            trials=int(item.get("trials", DEFAULT_TRIALS)), seed=doc["seed"],
                            max_windows=int(item.get("max_windows", DEFAULT_MAX_WINDOWS)),
                            max_combos=item.get("max_combos"))
        except (TypeError, ValueError) as exc:
            raise PlanError(f"entries[{e}]: {exc}") from None
        if params.trials < 1:
            raise PlanError(f"entries[{e}]: trials must be positive")
        count = item.get("count", 1)
        if not isinstance(count, int) or count < 1:
            raise PlanError(f"entries[{e}]: count must be a positive integer")
        entries.append(PlanEntry(spec, solver, params, count, bool(item.get("oracle", False))))
    return ExperimentPlan(doc["seed"], entries, doc.get("output"), doc.get("timings"))


def load_plan(path) -> ExperimentPlan:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PlanError(f"plan is not valid JSON: {exc}") from None
    return plan_from_document(doc)


def _run_case(task):
    e, k, entry = task
    spec = GenSpec.from_dict({**entry.generator.to_dict(), "seed": entry.generator.seed + k})
    instance = generate(spec)
    outcome = solve_instance(entry.solver, instance, entry.params, prefix=(e, k))
    if entry.oracle:
        attach_oracle(outcome, instance, entry.params)
    row = report_row(e, instance.name, outcome, entry.params)
    timing = {"entry": e, "instance": instance.name, "solve_seconds": outcome.solve_seconds,
              "oracle_seconds": outcome.oracle_seconds}
    return row, timing


def thread_count() -> int:
    raw = os.environ.get("POWERSCHED_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_plan(plan: ExperimentPlan, workers: int | None = None) -> tuple[list[dict], list[dict]]:
    """Rows come back ordered by (entry, instance) whatever the worker count."""
    tasks = [(e, k, entry) for e, entry in enumerate(plan.entries) for k in range(entry.count)]
    workers = workers or thread_count()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(_run_case, tasks))
    else:
        results = [_run_case(t) for t in tasks]
    return [r for r, _ in results], [t for _, t in results]
