"""Heterogeneous migratory scheduling as a configuration LP.

The horizon is cut at every release date and deadline.  Inside an interval a
configuration runs a partial one-to-one job/processor assignment with one grid
speed per assigned job, and the LP chooses how long each configuration runs.
Columns are priced per interval by a maximum-weight bipartite matching.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import lp as lpmod
from .core_types import SchedulingInstance
from .discretize import SpeedGrid, speed_grid
from .schedule import Piece, Schedule

DEFAULT_DELTA = 0.05


@dataclass(frozen=True)
class MigratoryConfiguration:
    interval: int
    assignment: tuple  # sorted ((job, processor, speed), ...)

    @property
    def jobs(self) -> tuple:
        return tuple(j for j, _, _ in self.assignment)


class MigratoryModel:
    def __init__(self, instance: SchedulingInstance, delta: float = DEFAULT_DELTA, grid: SpeedGrid | None = None):
        self.instance = instance
        self.delta = float(delta)
        self.grid = grid if grid is not None else speed_grid(instance, delta)
        self.alphas = tuple(p.alpha for p in instance.processors)
        times = sorted({t for row in instance.jobs for e in row if e.finite for t in (e.release, e.deadline)})
        self.intervals: list[tuple[Fraction, Fraction]] = []
        self.alive: list[list[tuple[int, int]]] = []  # (processor, job) pairs per interval
        for a, b in zip(times, times[1:]):
            pairs = [(i, j) for (i, j) in instance.finite_pairs()
                     if instance.jobs[j][i].release <= a and b <= instance.jobs[j][i].deadline]
            if pairs:
                self.intervals.append((a, b))
                self.alive.append(sorted(pairs))
        self.lengths = [float(b - a) for a, b in self.intervals]

    def work(self, i: int, j: int) -> float:
        return float(self.instance.jobs[j][i].work)

    def power(self, c: MigratoryConfiguration) -> float:
        return sum(v ** self.alphas[i] for _, i, v in c.assignment)

    def rate(self, c: MigratoryConfiguration, j: int) -> float:
        """Fraction of job j completed per time unit under c."""
        for jj, i, v in c.assignment:
            if jj == j:
                return v / self.work(i, j)
        return 0.0

    def guarantee_factor(self) -> float:
        return (1 + self.delta) ** max(self.alphas)

    def energy_upper_bound(self) -> float:
        """Energy of running every job alone at the top grid speed on its
        most expensive processor."""
        top = float(self.grid.speeds[-1])
        total = 0.0
        for j in range(self.instance.n):
            total += max(self.work(i, j) * top ** (self.alphas[i] - 1)
                         for i in range(self.instance.m) if self.instance.jobs[j][i].finite)
        return total


def best_speed(alpha: float, work: float, lam: float, grid: SpeedGrid) -> tuple[float, float]:
    """Grid speed minimizing v^alpha - v*lam/work, and the (negated) value as weight."""
    speeds = grid.speeds
    if alpha == 1:
        candidates = (float(speeds[0]), float(speeds[-1]))
    elif lam <= 0:
        candidates = (float(speeds[0]),)
    else:
        candidates = grid.neighbours((lam / (alpha * work)) ** (1 / (alpha - 1)))
    best = max(candidates, key=lambda v: (-(v ** alpha - v * lam / work), -v))
    return best, -(best ** alpha - best * lam / work)


def price_interval(model: MigratoryModel, interval: int, lam, mu: float = 0.0,
                   tol: float = 1e-9) -> tuple[MigratoryConfiguration | None, float]:
    """Most negative reduced-cost configuration for one interval, or None.

    ``lam[j]`` are the job coverage duals, ``mu`` the interval-length dual
    (both >= 0).  Returns (configuration or None, its reduced cost)."""
    pairs = model.alive[interval]
    if not pairs:
        return None, mu
    jobs = sorted({j for _, j in pairs})
    row = {j: k for k, j in enumerate(jobs)}
    W = np.zeros((len(jobs), model.instance.m))
    speed = {}
    for (i, j) in pairs:
        v, w = best_speed(model.alphas[i], model.work(i, j), float(lam[j]), model.grid)
        W[row[j], i] = w
        speed[(i, j)] = v
    matched, total = lpmod.max_weight_bipartite_matching(W)
    if not matched:
        return None, mu
    assignment = tuple(sorted((jobs[r], i, speed[(i, jobs[r])]) for r, i in matched))
    rc = -total + mu
    if rc < -tol:
        return MigratoryConfiguration(interval, assignment), rc
    return None, rc


# ---------------------------------------------------------------------------
# fractional schedules

@dataclass
class FractionalSchedule:
    model: MigratoryModel
    entries: list  # per interval: list[(MigratoryConfiguration, duration)]

    def job_fractions(self) -> list[float]:
        out = [0.0] * self.model.instance.n
        for opts in self.entries:
            for c, x in opts:
                for j, i, v in c.assignment:
                    out[j] += v / self.model.work(i, j) * x
        return out

    def interval_loads(self) -> list[float]:
        return [sum(x for _, x in opts) for opts in self.entries]

    def energy(self) -> float:
        return sum(self.model.power(c) * x for opts in self.entries for c, x in opts)

    def to_schedule(self) -> Schedule:
        """Configurations of an interval run back to back from its start, in
        column creation order."""
        pieces = []
        for (a, _), opts in zip(self.model.intervals, self.entries):
            t = float(a)
            for c, x in opts:
                for j, i, v in c.assignment:
                    pieces.append(Piece(i, j, t, t + x, v))
                t += x
        return Schedule(self.model.alphas, pieces)

    def to_document(self) -> dict:
        return {
            "intervals": [
                {"start": str(a), "end": str(b),
                 "configurations": [{"duration": x,
                                     "assignment": [{"job": j, "processor": i, "speed": v}
                                                    for j, i, v in c.assignment]}
                                    for c, x in opts]}
                for (a, b), opts in zip(self.model.intervals, self.entries)],
            "energy": self.energy(),
        }


@dataclass
class FractionalReport:
    fractions: list
    loads: list
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_fractional(fs: FractionalSchedule, tol: float = 1e-6) -> FractionalReport:
    model = fs.model
    problems = []
    loads = fs.interval_loads()
    for k, (load, length) in enumerate(zip(loads, model.lengths)):
        if load > length + tol * max(1.0, length):
            problems.append(f"interval {k}: configurations last {load} > length {length}")
    for k, opts in enumerate(fs.entries):
        alive = set(model.alive[k]) if k < len(model.alive) else set()
        for c, x in opts:
            if x < -tol:
                problems.append(f"interval {k}: negative duration {x}")
            jobs = [j for j, _, _ in c.assignment]
            procs = [i for _, i, _ in c.assignment]
            if len(set(jobs)) != len(jobs):
                problems.append(f"interval {k}: a job runs on two processors at once")
            if len(set(procs)) != len(procs):
                problems.append(f"interval {k}: a processor runs two jobs at once")
            for j, i, _ in c.assignment:
                if (i, j) not in alive:
                    problems.append(f"interval {k}: job {j} is not alive on processor {i}")
    fractions = fs.job_fractions()
    for j, f in enumerate(fractions):
        if f < 1 - tol:
            problems.append(f"job {j}: only {f} of its work is done")
    return FractionalReport(fractions, loads, problems)


# ---------------------------------------------------------------------------
# LP

def configuration_column(model: MigratoryModel, c: MigratoryConfiguration) -> lpmod.Column:
    coeffs = {("interval", c.interval): 1.0}
    for j, i, v in c.assignment:
        coeffs[("cover", j)] = v / model.work(i, j)
    return lpmod.Column(("mcfg", c.interval, c.assignment), model.power(c), coeffs, payload=c)


def master_lp(model: MigratoryModel, with_artificials: bool = True) -> lpmod.LinearProgram:
    lp = lpmod.LinearProgram()
    for k, length in enumerate(model.lengths):
        lp.add_row(("interval", k), lpmod.LE, length)
    for j in range(model.instance.n):
        lp.add_row(("cover", j), lpmod.GE, 1.0)
    if with_artificials:
        big = 10 * model.energy_upper_bound()
        lp.add_columns([(("artificial", j), big, {("cover", j): 1.0}) for j in range(model.instance.n)])
    return lp


def all_configurations(model: MigratoryModel) -> list[MigratoryConfiguration]:
    """Every configuration of every interval (exponential; for tiny instances)."""
    import itertools

    speeds = [float(v) for v in model.grid.speeds]
    out = []
    for k, pairs in enumerate(model.alive):
        for size in range(1, model.instance.m + 1):
            for chosen in itertools.combinations(pairs, size):
                if len({j for _, j in chosen}) < size or len({i for i, _ in chosen}) < size:
                    continue
                for vs in itertools.product(speeds, repeat=size):
                    out.append(MigratoryConfiguration(k, tuple(sorted((j, i, v) for (i, j), v in zip(chosen, vs)))))
    return out


@dataclass
class MigratoryResult:
    model: MigratoryModel
    schedule: FractionalSchedule
    lp_value: float
    bounds: tuple
    status: str
    iterations: int

    @property
    def guarantee_factor(self) -> float:
        return self.model.guarantee_factor()


def solve_migratory(instance: SchedulingInstance, delta: float = DEFAULT_DELTA, tol: float = 1e-9,
                    max_iters: int = 2000, grid: SpeedGrid | None = None) -> MigratoryResult:
    model = MigratoryModel(instance, delta, grid)
    master = master_lp(model)
    top = float(model.grid.speeds[-1])
    seeds = [configuration_column(model, MigratoryConfiguration(k, ((j, i, top),)))
             for k, pairs in enumerate(model.alive) for (i, j) in pairs]

    def pricer(duals):
        lam = [max(0.0, duals.get(("cover", j), 0.0)) for j in range(instance.n)]
        cols, gap = [], 0.0
        for k, length in enumerate(model.lengths):
            mu = max(0.0, -duals.get(("interval", k), 0.0))
            c, rc = price_interval(model, k, lam, mu, tol)
            gap += length * min(rc, 0.0)
            if c is not None:
                cols.append(configuration_column(model, c))
        return lpmod.PricingResult(cols, gap)

    res = lpmod.column_generation(master, pricer, tol, max_iters, initial_columns=seeds)
    if res.status not in ("optimal", "cap"):
        raise RuntimeError(f"migratory LP {res.status}")
    sol = res.solution
    for j in range(instance.n):
        if sol.value(("artificial", j)) > 1e-7:
            raise RuntimeError(f"job {j} cannot be covered with this speed grid")
    entries: list = [[] for _ in model.intervals]
    order = {lab: k for k, lab in enumerate(res.master.col_labels)}
    for col, x in sorted(res.active_columns(), key=lambda cx: order[cx[0].label]):
        c = col.payload
        entries[c.interval].append((c, x))
    return MigratoryResult(model, FractionalSchedule(model, entries), float(res.objective), res.bounds,
                           res.status, res.iterations)


def continuous_single_job(work: float, length: float, alpha: float) -> float:
    """Optimal energy of one job alone in one window, any speed allowed."""
    return work ** alpha / length ** (alpha - 1)


def enumerated_lp_value(model: MigratoryModel) -> float:
    lp = master_lp(model, with_artificials=False)
    lp.add_columns([(c.label, c.cost, c.coeffs) for c in
                    (configuration_column(model, cfg) for cfg in all_configurations(model))])
    sol = lpmod.solve(lp)
    if not sol.optimal:
        return math.inf if sol.status == "infeasible" else math.nan
    return sol.objective
