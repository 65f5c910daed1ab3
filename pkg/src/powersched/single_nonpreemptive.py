"""Non-preemptive scheduling on one speed-scalable processor.

Time is cut greedily at deadlines, every piece of the cut becomes a
pseudo-processor of a non-migratory instance, configurations are restricted
to contiguous slot runs, and the rounded schedule is made non-preemptive again
by earliest-deadline-first dispatching inside each piece.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import lp as lpmod
from .core_types import JobOnProcessor, Processor, SchedulingInstance
from .discretize import DEFAULT_EPSILON
from .nonmigratory import (ConfigDistribution, Configuration, NonMigratoryModel, RoundingReport, Rounder,
                           _normalized, assemble_schedule, summarize)
from .probability import generalized_bell
from .schedule import Piece, Requirement, Schedule, check_non_preemptive, check_schedule, merge_adjacent


@dataclass(frozen=True)
class IntervalPartition:
    breakpoints: tuple  # t_0 < t_1 < ... (Fractions)
    classes: tuple  # classes[p] = job indices whose class defined t_{p+1}

    @property
    def k(self) -> int:
        return len(self.classes)

    @property
    def intervals(self) -> list[tuple[Fraction, Fraction]]:
        return list(zip(self.breakpoints, self.breakpoints[1:]))


def _jobs(instance_or_jobs) -> list[tuple[Fraction, Fraction, Fraction]]:
    if isinstance(instance_or_jobs, SchedulingInstance):
        if instance_or_jobs.m != 1:
            raise ValueError("expected a single-processor instance")
        return [(row[0].release, row[0].deadline, row[0].work) for row in instance_or_jobs.jobs]
    return [(Fraction(r), Fraction(d), Fraction(w)) for r, d, w in instance_or_jobs]


def interval_partition(jobs) -> IntervalPartition:
    """Cut at the earliest deadline, then repeatedly at the earliest deadline
    among jobs released after the previous cut."""
    jobs = _jobs(jobs)
    if not jobs:
        raise ValueError("no jobs")
    remaining = set(range(len(jobs)))
    cuts, classes = [], []
    prev = None
    while remaining:
        t = min(jobs[j][1] for j in remaining)
        cls = sorted(j for j in remaining if jobs[j][0] <= t)
        cuts.append(t)
        classes.append(tuple(cls))
        remaining -= set(cls)
        prev = t
    t0 = min(r for r, _, _ in jobs)
    last = max(d for _, d, _ in jobs)
    points = [t0] + cuts + ([last] if last > prev else [])
    return IntervalPartition(tuple(points), tuple(classes))


def reduce(jobs, partition: IntervalPartition, alpha: float) -> SchedulingInstance:
    """One processor per interval (t_{p-1}, t_p]; windows clipped and shifted
    so that each interval starts at 0; jobs not alive there get infinite work."""
    jobs = _jobs(jobs)
    intervals = partition.intervals
    procs = tuple(Processor(p, alpha) for p in range(len(intervals)))
    rows = []
    for r, d, w in jobs:
        row = []
        for a, b in intervals:
            if r < b and d > a:
                row.append(JobOnProcessor(max(r, a) - a, min(d, b) - a, w))
            else:
                row.append(JobOnProcessor(Fraction(0), b - a, None))
        rows.append(tuple(row))
    return SchedulingInstance(procs, tuple(rows), name="reduced")


# ---------------------------------------------------------------------------
# contiguous configuration LP

def contiguous_configurations(model: NonMigratoryModel):
    K = model.K
    for (i, j) in model.pairs:
        for a in range(K):
            for b in range(a + 1, K + 1):
                yield Configuration(j, i, tuple(range(a, b)))


def build_contiguous_lp(model: NonMigratoryModel) -> lpmod.SparseProgram:
    sp = lpmod.SparseProgram()
    K = model.K
    a_idx, b_idx = np.triu_indices(K + 1, k=1)  # run of slots [a, b)
    spans = {}
    for (i, j) in model.pairs:
        E = model.energy_table[(i, j)]
        first = sp.n_cols
        for a, b in zip(a_idx.tolist(), b_idx.tolist()):
            sp.add_column(("cfg", j, i, a, b), float(E[b - a - 1]))
        spans[(i, j)] = np.arange(first, sp.n_cols)
    for j in range(model.instance.n):
        cols = np.concatenate([c for (i, jj), c in spans.items() if jj == j])
        r = sp.add_row(("assign", j), lpmod.EQ, 1.0, [])
        sp.add_entries(np.full(cols.size, r), cols, 1.0)
    for i, pa in enumerate(model.td.atoms):
        row_of_atom = np.full(pa.count, -1, dtype=np.int64)
        for p in pa.covered_indices():
            row_of_atom[p] = sp.add_row(("cap", i, int(p)), lpmod.LE, 1.0, [])
        for (pi, j), cols in spans.items():
            if pi != i:
                continue
            r = model.slot_atom_ranges(i, j)
            lo, hi = r[a_idx], r[b_idx]
            width = hi - lo
            col_rep = np.repeat(cols, width)
            atoms = np.repeat(lo - np.cumsum(width) + width, width) + np.arange(width.sum())
            sp.add_entries(row_of_atom[atoms], col_rep, 1.0)
    return sp


def solve_contiguous_lp(model: NonMigratoryModel) -> tuple[lpmod.LpSolution, ConfigDistribution]:
    sol = lpmod.solve_sparse(build_contiguous_lp(model))
    if not sol.optimal:
        raise RuntimeError(f"contiguous configuration LP {sol.status}")
    choices: dict = {j: [] for j in range(model.instance.n)}
    for lab, v in zip(sol.col_labels, sol.x):
        if v > 1e-12:
            _, j, i, a, b = lab
            choices[j].append((Configuration(j, i, tuple(range(a, b))), float(v)))
    return sol, ConfigDistribution(model, _normalized(choices))


# ---------------------------------------------------------------------------
# de-preemption

class EdfFailure(RuntimeError):
    pass


def edf_sequence(pieces: list[Piece], windows: dict, tol: float = 1e-9) -> list[Piece]:
    """Non-preemptive EDF dispatch on one processor.

    ``pieces`` is a preemptive schedule; ``windows[job] = (release, deadline)``.
    Whenever the processor is free the released job with the smallest
    (deadline, index) runs to completion, replaying its own pieces back to back
    so that durations and speeds are unchanged."""
    own: dict = {}
    for p in sorted(pieces, key=lambda p: p.start):
        own.setdefault(p.job, []).append(p)
    todo = set(own)
    t = min((windows[j][0] for j in todo), default=0.0)
    out = []
    while todo:
        ready = [j for j in todo if windows[j][0] <= t + tol]
        if not ready:
            t = min(windows[j][0] for j in todo)
            continue
        j = min(ready, key=lambda j: (windows[j][1], j))
        for p in own[j]:
            out.append(Piece(p.processor, j, t, t + p.duration, p.speed, p.operation))
            t += p.duration
        if t > windows[j][1] + tol:
            raise EdfFailure(f"job {j} finishes at {t} after its deadline {windows[j][1]}")
        todo.remove(j)
    return out


@dataclass
class SingleResult:
    partition: IntervalPartition
    reduced: SchedulingInstance
    model: NonMigratoryModel
    distribution: ConfigDistribution
    energies: np.ndarray
    assignment: list
    schedule: Schedule
    report: RoundingReport


def guarantee_factor(n: int, epsilon, alpha: float) -> float | None:
    if n <= 2:
        return None
    eps = float(epsilon)
    if eps >= 1:
        return math.inf
    return 2 ** (alpha - 1) * ((1 + eps / (1 - eps)) * (1 + 2 / (n - 2))) ** alpha * generalized_bell(alpha)


def depreempt(model: NonMigratoryModel, partition: IntervalPartition, assignment: list[Configuration]) -> Schedule:
    """Assemble the rounded configurations, run EDF inside every interval and
    map the pieces back to absolute time on processor 0."""
    pre = assemble_schedule(model, assignment)
    pieces = []
    for p, (a, _) in enumerate(partition.intervals):
        mine = [x for x in pre.pieces if x.processor == p]
        if not mine:
            continue
        windows = {}
        for c in assignment:
            if c.processor == p:
                e = model.instance.jobs[c.job][p]
                windows[c.job] = (float(e.release), float(e.deadline))
        for x in edf_sequence(mine, windows):
            pieces.append(Piece(0, x.job, x.start + float(a), x.end + float(a), x.speed))
    return Schedule((model.alphas[0],), merge_adjacent(pieces))


def solve_single(jobs, alpha: float, epsilon=DEFAULT_EPSILON, seed: int = 0, trials: int = 100,
                 prefix: tuple = ()) -> SingleResult:
    """``jobs``: (release, deadline, work) triples or a one-processor instance."""
    if isinstance(jobs, SchedulingInstance):
        alpha = jobs.processors[0].alpha
    triples = _jobs(jobs)
    partition = interval_partition(triples)
    reduced = reduce(triples, partition, alpha)
    model = NonMigratoryModel(reduced, epsilon)
    _, dist = solve_contiguous_lp(model)
    lp_value = dist.lp_value()
    rounder = Rounder(dist)
    choices = rounder.draws(seed, trials, prefix)
    energies = rounder.energies(choices)
    best = int(np.argmin(energies))
    assignment = rounder.assignment(choices[best])
    schedule = depreempt(model, partition, assignment)
    reqs = {(j, None): Requirement(0, float(r), float(d), float(w)) for j, (r, d, w) in enumerate(triples)}
    violations = check_schedule(schedule, reqs) + check_non_preemptive(schedule)
    report = summarize(lp_value, energies, generalized_bell(alpha), guarantee_factor(len(triples), epsilon, alpha),
                       method="contiguous", violations=violations)
    return SingleResult(partition, reduced, model, dist, energies, assignment, schedule, report)
