"""Preemptive job shop with speed scaling, through a configuration LP.

A configuration fixes, for every operation of one job, a candidate window
(b, c], a set of equal slots of that window and therefore a constant speed.
Slots of an operation must all end before the first slot of the next
operation of the same job starts.  The LP is solved by column generation; the
pricer is a dynamic program over the operations of a chain.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import lp as lpmod
from .core_types import JobShopInstance
from .discretize import DEFAULT_EPSILON, DEFAULT_MAX_WINDOWS, JobShopGrids, Window, jobshop_grids
from .nonmigratory import RoundingReport, summarize
from .probability import generalized_bell
from .rng import stream
from .schedule import Piece, Requirement, Schedule, check_precedence, check_schedule, merge_adjacent


@dataclass(frozen=True)
class OperationPlan:
    window: Window
    slots: tuple  # indices into the window's inner grid


@dataclass(frozen=True)
class JobShopConfiguration:
    job: int
    plans: tuple  # one OperationPlan per operation of the chain


def normalize_chains(instance: JobShopInstance, mode: str = "normalize") -> JobShopInstance:
    """Make releases and deadlines non-decreasing along every chain.

    ``mode="normalize"`` clips releases up to the previous release and
    deadlines down to the next deadline (precedence makes the clipped parts
    unusable anyway) and warns; ``mode="reject"`` raises instead."""
    jobs, changed = [], False
    for j, chain in enumerate(instance.jobs):
        ops = list(chain)
        for k in range(1, len(ops)):
            if ops[k].release < ops[k - 1].release:
                ops[k] = replace(ops[k], release=ops[k - 1].release)
                changed = True
        for k in range(len(ops) - 2, -1, -1):
            if ops[k].deadline > ops[k + 1].deadline:
                ops[k] = replace(ops[k], deadline=ops[k + 1].deadline)
                changed = True
        for k, op in enumerate(ops):
            if op.release >= op.deadline:
                raise ValueError(f"operation ({j},{k}) has an empty window after aligning its chain")
        jobs.append(tuple(ops))
    if not changed:
        return instance
    if mode == "reject":
        raise ValueError("release dates or deadlines decrease along a chain")
    if mode != "normalize":
        raise ValueError(f"unknown mode {mode!r}")
    warnings.warn("release dates / deadlines were aligned along chains", stacklevel=2)
    return replace(instance, jobs=tuple(jobs))


class JobShopModel:
    def __init__(self, instance: JobShopInstance, epsilon=DEFAULT_EPSILON,
                 max_windows_per_op: int = DEFAULT_MAX_WINDOWS, chains: str = "normalize"):
        self.instance = normalize_chains(instance, chains)
        self.grids: JobShopGrids = jobshop_grids(self.instance, epsilon, max_windows_per_op)
        self.epsilon = self.grids.epsilon
        self.K = self.grids.inner_slots
        self.denom = self.grids.denom
        self.alphas = tuple(p.alpha for p in self.instance.processors)
        atoms = self.grids.atoms
        self.atom_offset = np.concatenate([[0], np.cumsum([pa.count for pa in atoms])]).astype(int)
        self._ticks: dict = {}
        self._ranges: dict = {}

    @property
    def window_cap_binding(self) -> bool:
        return any(self.grids.capped.values())

    def op(self, j: int, k: int):
        return self.instance.jobs[j][k]

    def slot_ticks(self, w: Window) -> np.ndarray:
        """K+1 boundaries of the window's inner grid, in ticks."""
        key = (w.start, w.end)
        if key not in self._ticks:
            a, b = int(w.start * self.denom), int(w.end * self.denom)
            step = (b - a) // self.K
            self._ticks[key] = a + step * np.arange(self.K + 1, dtype=np.int64)
        return self._ticks[key]

    def slot_atom_ranges(self, j: int, k: int, w: Window) -> np.ndarray:
        """Atom index of every inner-grid boundary on the operation's processor."""
        key = (self.op(j, k).processor, w.start, w.end)
        if key not in self._ranges:
            self._ranges[key] = self.grids.atoms[key[0]].locate(self.slot_ticks(w))
        return self._ranges[key]

    def energy_table(self, j: int, k: int, w: Window) -> np.ndarray:
        """Energy of the operation using q = 1..K slots of window w."""
        op = self.op(j, k)
        alpha = self.alphas[op.processor]
        slot = float(w.end - w.start) / self.K
        q = np.arange(1, self.K + 1)
        return float(op.work) ** alpha / (q * slot) ** (alpha - 1)

    def plan_energy(self, j: int, k: int, plan: OperationPlan) -> float:
        return float(self.energy_table(j, k, plan.window)[len(plan.slots) - 1])

    def plan_speed(self, j: int, k: int, plan: OperationPlan) -> float:
        return float(self.op(j, k).work) / (len(plan.slots) * float(plan.window.end - plan.window.start) / self.K)

    def config_energy(self, c: JobShopConfiguration) -> float:
        return sum(self.plan_energy(c.job, k, p) for k, p in enumerate(c.plans))

    def plan_atoms(self, j: int, k: int, plan: OperationPlan) -> np.ndarray:
        r = self.slot_atom_ranges(j, k, plan.window)
        return np.concatenate([np.arange(r[s], r[s + 1]) for s in plan.slots])

    def config_atoms(self, c: JobShopConfiguration) -> list[tuple[int, int]]:
        """(processor, atom) pairs occupied by the configuration."""
        out = []
        for k, plan in enumerate(c.plans):
            i = self.op(c.job, k).processor
            out.extend((i, int(p)) for p in self.plan_atoms(c.job, k, plan))
        return out

    def guarantee_factor(self) -> float | None:
        mu = self.instance.mu
        eps = float(self.epsilon)
        if mu <= 2 or eps >= 1:
            return None
        a = max(self.alphas)
        return ((1 + eps) * (1 + 2 / (mu - 2)) * (1 + eps / (1 - eps))) ** a * generalized_bell(a)

    def energy_upper_bound(self) -> float:
        total = 0.0
        for j, chain in enumerate(self.instance.jobs):
            for k in range(len(chain)):
                total += max(float(self.energy_table(j, k, w)[0]) for w in self.grids.windows[(j, k)])
        return total


# ---------------------------------------------------------------------------
# pricing

def _run_costs(charges: np.ndarray, energy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For every run of slots [a, b) the cheapest energy(q) + sum of the q
    smallest charges inside the run, and the q achieving it."""
    K = charges.size
    idx = np.arange(K)
    a = idx[:, None, None]
    b = idx[None, :, None] + 1
    s = idx[None, None, :]
    M = np.where((s >= a) & (s < b), charges[None, None, :], np.inf)
    M.sort(axis=2)
    total = np.cumsum(M, axis=2) + energy[None, None, :]
    q = np.argmin(total, axis=2)
    cost = np.take_along_axis(total, q[..., None], axis=2)[..., 0]
    return cost, q + 1


@dataclass
class _Stage:
    ends: np.ndarray  # end tick of every (window, run) option, sorted
    best: np.ndarray  # prefix minimum of option values along ``ends``
    arg: np.ndarray  # option index attaining the prefix minimum
    options: np.ndarray  # rows (window index, first slot, end slot, q)


def _prefix_query(stage: _Stage | None, tick: int) -> tuple[float, int]:
    """Cheapest value among options ending by ``tick`` (0 for the empty prefix)."""
    if stage is None:
        return 0.0, -1
    pos = int(np.searchsorted(stage.ends, tick, side="right")) - 1
    if pos < 0:
        return math.inf, -1
    return float(stage.best[pos]), int(stage.arg[pos])


def slot_charges(model: JobShopModel, j: int, k: int, w: Window, kappa: list[np.ndarray]) -> np.ndarray:
    i = model.op(j, k).processor
    csum = np.concatenate([[0.0], np.cumsum(kappa[i])])
    r = model.slot_atom_ranges(j, k, w)
    return csum[r[1:]] - csum[r[:-1]]


def price_job(model: JobShopModel, j: int, lam: float, kappa: list[np.ndarray],
              tol: float = 1e-9) -> tuple[JobShopConfiguration | None, float]:
    """Minimize energy + charged capacity over the configurations of job j.

    ``kappa[i]`` holds a non-negative charge per atom of processor i.  Returns
    (configuration, reduced cost) when the reduced cost is below ``-tol`` and
    (None, reduced cost) otherwise.  An unschedulable chain gives (None, inf).
    """
    config, value = best_configuration(model, j, kappa)
    rc = value - lam
    if config is not None and rc < -tol:
        return config, rc
    return None, rc


def best_configuration(model: JobShopModel, j: int, kappa: list[np.ndarray]):
    chain = model.instance.jobs[j]
    stages: list[_Stage] = []
    prev = None
    a_idx, b_idx = np.triu_indices(model.K + 1, k=1)
    for k in range(len(chain)):
        windows = model.grids.windows[(j, k)]
        ends, vals, meta = [], [], []
        for wi, w in enumerate(windows):
            ticks = model.slot_ticks(w)
            cost, q = _run_costs(slot_charges(model, j, k, w, kappa), model.energy_table(j, k, w))
            if prev is None:
                before = np.zeros(model.K)
            else:
                pos = np.searchsorted(prev.ends, ticks[:-1], side="right") - 1
                before = np.where(pos >= 0, prev.best[np.maximum(pos, 0)], np.inf)
            v = before[a_idx] + cost[a_idx, b_idx - 1]
            keep = np.isfinite(v)
            a, b = a_idx[keep], b_idx[keep]
            ends.append(ticks[b])
            vals.append(v[keep])
            meta.append(np.stack([np.full(a.size, wi), a, b, q[a, b - 1]], axis=1))
        ends = np.concatenate(ends)
        if not ends.size:
            return None, math.inf
        vals = np.concatenate(vals)
        meta = np.concatenate(meta)
        order = np.lexsort((vals, ends))
        ends, vals, meta = ends[order], vals[order], meta[order]
        best = np.minimum.accumulate(vals)
        arg = np.maximum.accumulate(np.where(vals == best, np.arange(vals.size), 0))
        prev = _Stage(ends, best, arg, meta)
        stages.append(prev)
    plans = []
    t_idx = int(stages[-1].arg[-1])
    value = float(stages[-1].best[-1])
    for k in range(len(chain) - 1, -1, -1):
        wi, a, b, q = (int(x) for x in stages[k].options[t_idx])
        w = model.grids.windows[(j, k)][wi]
        charges = slot_charges(model, j, k, w, kappa)
        pick = a + np.argsort(charges[a:b], kind="stable")[:q]
        plans.append(OperationPlan(w, tuple(sorted(int(s) for s in pick))))
        if k:
            _, t_idx = _prefix_query(stages[k - 1], int(model.slot_ticks(w)[a]))
    return JobShopConfiguration(j, tuple(reversed(plans))), value


# ---------------------------------------------------------------------------
# master LP

@dataclass
class JobShopDistribution:
    model: JobShopModel
    choices: dict  # job -> list[(JobShopConfiguration, probability)]

    def lp_value(self) -> float:
        return sum(p * self.model.config_energy(c) for opts in self.choices.values() for c, p in opts)


@dataclass
class JobShopLpResult:
    distribution: JobShopDistribution
    objective: float
    bound: float
    iterations: int
    columns: int
    status: str


def _master(model: JobShopModel, columns: list[JobShopConfiguration], big: float,
            atoms_of: dict) -> lpmod.SparseProgram:
    sp = lpmod.SparseProgram()
    n = model.instance.n
    cap_row = {}
    for i, pa in enumerate(model.grids.atoms):
        for p in pa.covered_indices():
            cap_row[(i, int(p))] = sp.add_row(("cap", i, int(p)), lpmod.LE, 1.0, [])
    for j in range(n):
        sp.add_row(("assign", j), lpmod.EQ, 1.0, [])
    for j in range(n):
        col = sp.add_column(("artificial", j), big)
        sp.add_entries([sp.n_rows - n + j], [col], 1.0)
    for t, c in enumerate(columns):
        col = sp.add_column(("cfg", t), model.config_energy(c))
        if c not in atoms_of:
            atoms_of[c] = model.config_atoms(c)
        rows = [sp.n_rows - n + c.job] + [cap_row[a] for a in atoms_of[c]]
        sp.add_entries(rows, [col] * len(rows), 1.0)
    return sp


def _duals(model: JobShopModel, sol: lpmod.LpSolution) -> tuple[np.ndarray, list[np.ndarray]]:
    kappa = [np.zeros(pa.count) for pa in model.grids.atoms]
    lam = np.zeros(model.instance.n)
    for lab, y in zip(sol.row_labels, sol.duals):
        if lab[0] == "cap":
            kappa[lab[1]][lab[2]] = max(0.0, -y)
        else:
            lam[lab[1]] = y
    return lam, kappa


def lagrangian_bound(model: JobShopModel, kappa: list[np.ndarray]) -> tuple[float, list]:
    """Lower bound on the LP optimum for any non-negative atom charges, and the
    best configuration of every job under those charges."""
    best = [best_configuration(model, j, kappa) for j in range(model.instance.n)]
    return sum(v for _, v in best) - sum(float(k.sum()) for k in kappa), best


def solve_jobshop_lp(model: JobShopModel, tol: float = 1e-9, max_iters: int = 1000,
                     smoothing: float = 0.5) -> JobShopLpResult:
    """Column generation with dual smoothing: pricing happens at a convex
    combination of the current duals and the duals that gave the best
    Lagrangian bound so far; if that finds nothing useful the current duals are
    priced exactly."""
    n = model.instance.n
    zero = [np.zeros(pa.count) for pa in model.grids.atoms]
    columns, seen = [], set()
    for j in range(n):
        c, _ = best_configuration(model, j, zero)
        if c is None:
            raise RuntimeError(f"job {j} has no feasible configuration at this discretization")
        columns.append(c)
        seen.add(c)
    big = 10 * model.energy_upper_bound()
    status, bound, center, it = "cap", -math.inf, None, 0
    atoms_of: dict = {}

    def add_improving(found, lam, kappa) -> int:
        added = 0
        for j, (c, _) in enumerate(found):
            if c is None or c in seen:
                continue
            atoms_of[c] = model.config_atoms(c)
            rc = model.config_energy(c) + sum(kappa[i][p] for i, p in atoms_of[c]) - lam[j]
            if rc < -tol:
                columns.append(c)
                seen.add(c)
                added += 1
        return added

    for it in range(1, max_iters + 1):
        sol = lpmod.solve_sparse(_master(model, columns, big, atoms_of))
        if not sol.optimal:
            raise RuntimeError(f"job shop master LP {sol.status}")
        solved = len(columns)
        lam, kappa = _duals(model, sol)
        added = 0
        if center is not None and smoothing > 0:
            mixed = [smoothing * a + (1 - smoothing) * b for a, b in zip(center, kappa)]
            value, found = lagrangian_bound(model, mixed)
            if value > bound:
                bound, center = value, mixed
            added = add_improving(found, lam, kappa)
        if not added:
            value, found = lagrangian_bound(model, kappa)
            if value > bound:
                bound, center = value, kappa
            added = add_improving(found, lam, kappa)
        if not added or sol.objective - bound <= tol * max(1.0, abs(sol.objective)):
            status = "optimal"
            break
    if status != "optimal":
        sol = lpmod.solve_sparse(_master(model, columns, big, atoms_of))
        solved = len(columns)
    for j in range(n):
        if sol.value(("artificial", j)) > 1e-7:
            raise RuntimeError(f"job {j} cannot be scheduled at this discretization")
    choices: dict = {j: [] for j in range(n)}
    for t, c in enumerate(columns[:solved]):
        v = sol.value(("cfg", t))
        if v > 1e-12:
            choices[c.job].append((c, v))
    for j, opts in choices.items():
        s = sum(p for _, p in opts)
        choices[j] = [(c, p / s) for c, p in opts]
    return JobShopLpResult(JobShopDistribution(model, choices), sol.objective, bound, it, len(columns), status)


# ---------------------------------------------------------------------------
# rounding and assembly

class JobShopRounder:
    def __init__(self, dist: JobShopDistribution):
        m = dist.model
        self.model, self.n = m, m.instance.n
        total = int(m.atom_offset[-1])
        self.lengths = np.concatenate([pa.lengths for pa in m.grids.atoms]) if total else np.zeros(0)
        self.atom_alpha = np.concatenate([np.full(pa.count, m.alphas[i]) for i, pa in enumerate(m.grids.atoms)])
        self.configs, self.cum, self.vectors = [], [], []
        for j in range(self.n):
            opts = dist.choices[j]
            self.configs.append([c for c, _ in opts])
            cum = np.cumsum([p for _, p in opts])
            cum[-1] = 1.0
            self.cum.append(cum)
            V = np.zeros((len(opts), total))
            for r, (c, _) in enumerate(opts):
                for k, plan in enumerate(c.plans):
                    i = m.op(j, k).processor
                    V[r, m.atom_offset[i] + m.plan_atoms(j, k, plan)] = m.plan_speed(j, k, plan)
            self.vectors.append(V)

    def draws(self, seed: int, trials: int, prefix: tuple = ()) -> np.ndarray:
        out = np.zeros((trials, self.n), dtype=int)
        for t in range(trials):
            u = stream(seed, *prefix, t).random(self.n)
            out[t] = [np.searchsorted(self.cum[j], u[j], side="right") for j in range(self.n)]
        return out

    def energies(self, choices: np.ndarray) -> np.ndarray:
        S = np.zeros((choices.shape[0], self.lengths.size))
        for j in range(self.n):
            S += self.vectors[j][choices[:, j]]
        return (self.lengths * S ** self.atom_alpha).sum(axis=1)

    def assignment(self, choice) -> list[JobShopConfiguration]:
        return [self.configs[j][k] for j, k in enumerate(choice)]


def assemble_jobshop(model: JobShopModel, assignment: list[JobShopConfiguration]) -> Schedule:
    """Every atom runs at the summed speed of the operations covering it; the
    operations sharing an atom run back to back ordered by (chain position, job)."""
    pieces = []
    for i, pa in enumerate(model.grids.atoms):
        users = []  # (chain position, job, speed, atoms)
        for c in assignment:
            for k, plan in enumerate(c.plans):
                if model.op(c.job, k).processor == i:
                    users.append((k, c.job, model.plan_speed(c.job, k, plan), model.plan_atoms(c.job, k, plan)))
        if not users:
            continue
        users.sort(key=lambda u: (u[0], u[1]))
        speeds = np.zeros((len(users), pa.count))
        for r, (_, _, v, atoms) in enumerate(users):
            speeds[r, atoms] = v
        total = speeds.sum(axis=0)
        lengths = pa.lengths
        for p in np.flatnonzero(total > 0):
            start = float(pa.bounds[p]) / pa.denom
            for r, (k, j, _, _) in enumerate(users):
                v = speeds[r, p]
                if v <= 0:
                    continue
                dur = float(lengths[p] * v / total[p])
                pieces.append(Piece(i, j, start, start + dur, float(total[p]), k))
                start += dur
    return Schedule(model.alphas, merge_adjacent(pieces))


def jobshop_requirements(model: JobShopModel) -> dict:
    return {(j, k): Requirement(op.processor, float(op.release), float(op.deadline), float(op.work))
            for j, chain in enumerate(model.instance.jobs) for k, op in enumerate(chain)}


def check_jobshop(model: JobShopModel, schedule: Schedule) -> list[str]:
    chains = {j: len(chain) for j, chain in enumerate(model.instance.jobs)}
    return check_schedule(schedule, jobshop_requirements(model)) + check_precedence(schedule, chains)


@dataclass
class JobShopResult:
    model: JobShopModel
    lp: JobShopLpResult
    energies: np.ndarray
    choices: np.ndarray
    best_assignment: list
    schedule: Schedule
    report: RoundingReport
    window_cap_binding: bool = field(default=False)


def solve_jobshop(instance: JobShopInstance, epsilon=DEFAULT_EPSILON, seed: int = 0, trials: int = 100,
                  max_windows_per_op: int = DEFAULT_MAX_WINDOWS, prefix: tuple = ()) -> JobShopResult:
    model = JobShopModel(instance, epsilon, max_windows_per_op)
    lp = solve_jobshop_lp(model)
    rounder = JobShopRounder(lp.distribution)
    choices = rounder.draws(seed, trials, prefix)
    energies = rounder.energies(choices)
    best = int(np.argmin(energies))
    assignment = rounder.assignment(choices[best])
    schedule = assemble_jobshop(model, assignment)
    report = summarize(lp.distribution.lp_value(), energies, generalized_bell(max(model.alphas)),
                       model.guarantee_factor(), method="colgen", violations=check_jobshop(model, schedule))
    return JobShopResult(model, lp, energies, choices, assignment, schedule, report, model.window_cap_binding)


def single_job_energy(work, length, alpha: float) -> float:
    return float(Fraction(work)) ** alpha / float(Fraction(length)) ** (alpha - 1)
