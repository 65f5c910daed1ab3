"""Heterogeneous non-migratory scheduling: configuration LP, randomized
rounding and schedule assembly.

A configuration puts job j on processor i during q of its K equal slots at the
constant speed w / (q * slot length).  The LP over all configurations is
solved in one of three equivalent ways: the compact (count, slot) formulation
followed by configuration extraction, a smaller slot-marginal formulation, or
column generation with lazily added interval capacity rows.  All of them
produce a :class:`ConfigDistribution`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lp as lpmod
from .core_types import SchedulingInstance
from .discretize import DEFAULT_EPSILON, as_fraction, discretize_time
from .probability import generalized_bell
from .rng import stream
from .schedule import Piece, Requirement, Schedule, check_schedule, merge_adjacent

COMPACT_AUTO_LIMIT = 1500  # z-variables; above this "auto" switches to the slot-marginal LP


@dataclass(frozen=True)
class Configuration:
    job: int
    processor: int
    slots: tuple  # 0-based slot indices in the job's grid on that processor

    @property
    def q(self) -> int:
        return len(self.slots)


class NonMigratoryModel:
    """Discretized data for one instance: slot grids, atoms and energy constants."""

    def __init__(self, instance: SchedulingInstance, epsilon=DEFAULT_EPSILON):
        self.instance = instance
        self.epsilon = as_fraction(epsilon)
        self.td = discretize_time(instance, self.epsilon)
        self.K = self.td.slots
        self.pairs = instance.finite_pairs()
        self.alphas = tuple(p.alpha for p in instance.processors)
        self.work = {}
        self.slot_len = {}
        self.energy_table = {}
        qs = np.arange(1, self.K + 1, dtype=float)
        for (i, j) in self.pairs:
            e = instance.jobs[j][i]
            w = float(e.work)
            L = float(e.deadline - e.release) / self.K
            a = self.alphas[i]
            self.work[(i, j)] = w
            self.slot_len[(i, j)] = L
            self.energy_table[(i, j)] = w ** a / (qs * L) ** (a - 1)
        self.atom_lengths = [pa.lengths for pa in self.td.atoms]
        self.atom_offset = np.concatenate([[0], np.cumsum([pa.count for pa in self.td.atoms])]).astype(int)

    def energy(self, i: int, j: int, q: int) -> float:
        return float(self.energy_table[(i, j)][q - 1])

    def speed(self, i: int, j: int, q: int) -> float:
        return self.work[(i, j)] / (q * self.slot_len[(i, j)])

    def config_energy(self, c: Configuration) -> float:
        return self.energy(c.processor, c.job, c.q)

    def config_speed(self, c: Configuration) -> float:
        return self.speed(c.processor, c.job, c.q)

    def slot_atom_ranges(self, i: int, j: int) -> np.ndarray:
        """(K+1) atom indices: slot t covers atoms [r[t], r[t+1])."""
        return self.td.slot_atoms[(i, j)]

    def atoms_of(self, c: Configuration) -> np.ndarray:
        r = self.slot_atom_ranges(c.processor, c.job)
        if not c.slots:
            return np.zeros(0, dtype=int)
        return np.concatenate([np.arange(r[t], r[t + 1]) for t in c.slots])

    def guarantee_factor(self) -> float | None:
        n = self.instance.n
        if n <= 2:
            return None
        eps = float(self.epsilon)
        if eps >= 1:
            return math.inf
        alpha = max(self.alphas)
        return ((1 + eps / (1 - eps)) * (1 + 2 / (n - 2))) ** alpha * generalized_bell(alpha)


# ---------------------------------------------------------------------------
# distributions over configurations

@dataclass
class ConfigDistribution:
    model: NonMigratoryModel
    choices: dict  # job -> list[(Configuration, probability)]

    def lp_value(self) -> float:
        return sum(p * self.model.config_energy(c) for opts in self.choices.values() for c, p in opts)

    def energy_by_processor(self) -> list[float]:
        out = [0.0] * self.model.instance.m
        for opts in self.choices.values():
            for c, p in opts:
                out[c.processor] += p * self.model.config_energy(c)
        return out

    def validate(self, tol: float = 1e-6) -> list[str]:
        problems = []
        m = self.model
        for j in range(m.instance.n):
            total = sum(p for _, p in self.choices.get(j, []))
            if abs(total - 1) > tol:
                problems.append(f"job {j}: probabilities sum to {total}")
        loads = np.zeros(m.atom_offset[-1])
        for opts in self.choices.values():
            for c, p in opts:
                np.add.at(loads, m.atom_offset[c.processor] + m.atoms_of(c), p)
        worst = loads.max() if loads.size else 0.0
        if worst > 1 + tol:
            problems.append(f"interval load {worst} exceeds 1")
        return problems


def _normalized(choices: dict) -> dict:
    out = {}
    for j, opts in choices.items():
        merged: dict = {}
        for c, p in opts:
            merged[c] = merged.get(c, 0.0) + p
        total = sum(merged.values())
        out[j] = [(c, p / total) for c, p in sorted(merged.items(), key=lambda kv: (kv[0].processor, kv[0].slots))
                  if p / total > 1e-12]
    return out


# ---------------------------------------------------------------------------
# compact LP

@dataclass
class CompactVarIndex:
    y: dict  # (i, j, q) -> column
    z: dict  # (i, j, q, t) -> column
    link: bool


def build_compact_lp(model: NonMigratoryModel, link_z_to_y: bool = True):
    """The (count, slot) LP.  With ``link_z_to_y`` every z_{i,j,q,t} is also
    bounded by y_{i,j,q}; without it the relaxation can be strictly weaker than
    the configuration LP."""
    K = model.K
    y_index, z_index = {}, {}
    cols, costs = [], []
    for (i, j) in model.pairs:
        for q in range(1, K + 1):
            y_index[(i, j, q)] = len(cols)
            cols.append(("y", i, j, q))
            costs.append(model.energy(i, j, q))
    for (i, j) in model.pairs:
        for q in range(1, K + 1):
            for t in range(K):
                z_index[(i, j, q, t)] = len(cols)
                cols.append(("z", i, j, q, t))
                costs.append(0.0)
    rows, senses, rhs = [], [], []
    entries = []  # (row, col, value)

    def new_row(label, sense, b):
        rows.append(label)
        senses.append(sense)
        rhs.append(b)
        return len(rows) - 1

    for j in range(model.instance.n):
        r = new_row(("assign", j), lpmod.EQ, 1.0)
        for (i, jj) in model.pairs:
            if jj == j:
                entries += [(r, y_index[(i, j, q)], 1.0) for q in range(1, K + 1)]
    for (i, j) in model.pairs:
        for q in range(1, K + 1):
            r = new_row(("count", i, j, q), lpmod.EQ, 0.0)
            entries.append((r, y_index[(i, j, q)], -float(q)))
            entries += [(r, z_index[(i, j, q, t)], 1.0) for t in range(K)]
    for i, pa in enumerate(model.td.atoms):
        atom_row = {}
        for p in pa.covered_indices():
            atom_row[int(p)] = new_row(("cap", i, int(p)), lpmod.LE, 1.0)
        for (pi, j) in model.pairs:
            if pi != i:
                continue
            ranges = model.slot_atom_ranges(i, j)
            for t in range(K):
                for p in range(ranges[t], ranges[t + 1]):
                    r = atom_row[int(p)]
                    entries += [(r, z_index[(i, j, q, t)], 1.0) for q in range(1, K + 1)]
    if link_z_to_y:
        for (i, j, q, t), col in z_index.items():
            r = new_row(("link", i, j, q, t), lpmod.LE, 0.0)
            entries += [(r, col, 1.0), (r, y_index[(i, j, q)], -1.0)]
    A = np.zeros((len(rows), len(cols)))
    for r, c, v in entries:
        A[r, c] += v
    lp = lpmod.LinearProgram.from_dense(costs, A, senses, rhs, rows, cols)
    return lp, CompactVarIndex(y_index, z_index, link_z_to_y)


def _chain_edges(y: float, z: np.ndarray, q: int) -> dict:
    """Left node k takes slot mass in order until it holds exactly y."""
    edges = {}
    k, room = 0, y
    for t in np.flatnonzero(z > 0):
        mass = float(z[t])
        while mass > 1e-15:
            take = min(room, mass)
            edges[(k, int(t))] = edges.get((k, int(t)), 0.0) + take
            mass -= take
            room -= take
            if room <= 1e-15:
                if k + 1 == q:
                    break
                k, room = k + 1, y
    return edges


def extract_configurations(model: NonMigratoryModel, solution: lpmod.LpSolution, index: CompactVarIndex,
                           tol: float = 1e-9) -> ConfigDistribution:
    """Turn an optimal compact solution into a distribution over configurations
    with the same objective and the same y / z marginals."""
    x = solution.x
    choices: dict = {j: [] for j in range(model.instance.n)}
    K = model.K
    for (i, j) in model.pairs:
        for q in range(1, K + 1):
            y = float(x[index.y[(i, j, q)]])
            if y <= tol:
                continue
            z = np.array([max(0.0, float(x[index.z[(i, j, q, t)]])) for t in range(K)])
            z[z <= tol * 1e-3] = 0.0
            z *= q * y / z.sum()  # remove solver round-off so the degrees match exactly
            if np.any(z > y * (1 + 1e-6) + tol):
                raise ValueError(f"slot mass exceeds y for (i={i}, j={j}, q={q}); the compact LP needs z <= y")
            z = np.minimum(z, y)
            edges = _chain_edges(y, z, q)
            slots_used = sorted({t for _, t in edges})
            for matching, lam in lpmod.perfect_matching_decomposition(range(q), slots_used, edges, y, tol=1e-7):
                choices[j].append((Configuration(j, i, tuple(sorted(matching.values()))), lam))
    return ConfigDistribution(model, _normalized(choices))


def solve_compact(model: NonMigratoryModel, link_z_to_y: bool = True, tol: float = 1e-9):
    lp, index = build_compact_lp(model, link_z_to_y)
    sol = lpmod.solve(lp, tol)
    if not sol.optimal:
        raise RuntimeError(f"compact LP {sol.status}")
    return sol, index


# ---------------------------------------------------------------------------
# slot-marginal LP

def build_marginal_lp(model: NonMigratoryModel) -> lpmod.SparseProgram:
    """Configuration LP projected onto per-slot usage.

    Per pair (i, j): x = probability of using processor i, u_t = probability
    of using slot t (u_t <= x), U = sum u_t, and c >= the perspective of the
    piecewise-linear interpolation of q -> E(q), written as one tangent row per
    segment.  Because E is convex in q this has the configuration LP's optimum:
    any (x, u) splits into sizes floor(U/x) and floor(U/x)+1 with marginals u
    (see :func:`marginal_distribution`).
    """
    sp = lpmod.SparseProgram()
    K = model.K
    for (i, j) in model.pairs:
        sp.add_column(("x", i, j), 0.0, 0.0, 1.0)
        sp.add_column(("U", i, j), 0.0)
        sp.add_column(("c", i, j), 1.0)
        for t in range(K):
            sp.add_column(("u", i, j, t), 0.0, 0.0, 1.0)
    for j in range(model.instance.n):
        sp.add_row(("assign", j), lpmod.EQ, 1.0, [(("x", i, jj), 1.0) for (i, jj) in model.pairs if jj == j])
    for (i, j) in model.pairs:
        E = model.energy_table[(i, j)]
        x, U, c = ("x", i, j), ("U", i, j), ("c", i, j)
        sp.add_row(("total", i, j), lpmod.EQ, 0.0, [(U, 1.0)] + [(("u", i, j, t), -1.0) for t in range(K)])
        sp.add_row(("least", i, j), lpmod.GE, 0.0, [(U, 1.0), (x, -1.0)])
        if K == 1:
            sp.add_row(("cut", i, j, 1), lpmod.GE, 0.0, [(c, 1.0), (x, -float(E[0]))])
        for q in range(1, K):
            slope = float(E[q] - E[q - 1])
            sp.add_row(("cut", i, j, q), lpmod.GE, 0.0,
                       [(c, 1.0), (x, -(float(E[q - 1]) - q * slope)), (U, -slope)])
        for t in range(K):
            sp.add_row(("slot", i, j, t), lpmod.LE, 0.0, [(("u", i, j, t), 1.0), (x, -1.0)])
    for i, pa in enumerate(model.td.atoms):
        users: dict = {int(p): [] for p in pa.covered_indices()}
        for (pi, j) in model.pairs:
            if pi != i:
                continue
            r = model.slot_atom_ranges(i, j)
            for t in range(K):
                for p in range(r[t], r[t + 1]):
                    users[int(p)].append((("u", i, j, t), 1.0))
        for p, terms in users.items():
            sp.add_row(("cap", i, p), lpmod.LE, 1.0, terms)
    return sp


def systematic_sets(v: np.ndarray, tol: float = 1e-12) -> list[tuple[tuple, float]]:
    """Split marginals v in [0,1]^K into weighted index sets whose inclusion
    frequencies are exactly v (systematic sampling with a uniform offset).
    Set sizes are floor(sum v) or floor(sum v)+1."""
    C = np.concatenate([[0.0], np.cumsum(v)])
    cuts = np.unique(np.concatenate([[0.0, 1.0], np.mod(C, 1.0)]))
    out = []
    for a, b in zip(cuts, cuts[1:]):
        if b - a <= tol:
            continue
        tau = (a + b) / 2
        hits = np.ceil(C[1:] - tau) - np.ceil(C[:-1] - tau)
        out.append((tuple(int(t) for t in np.flatnonzero(hits > 0)), float(b - a)))
    return out


def marginal_distribution(model: NonMigratoryModel, sol: lpmod.LpSolution, tol: float = 1e-9) -> ConfigDistribution:
    choices: dict = {j: [] for j in range(model.instance.n)}
    K = model.K
    for (i, j) in model.pairs:
        x = sol.value(("x", i, j))
        if x <= tol:
            continue
        v = np.clip([sol.value(("u", i, j, t)) / x for t in range(K)], 0.0, 1.0)
        total = min(max(v.sum(), 1.0), float(K))
        v *= total / v.sum()  # solver round-off
        v = np.minimum(v, 1.0)
        for slots, w in systematic_sets(v):
            if slots:
                choices[j].append((Configuration(j, i, slots), w * x))
    return ConfigDistribution(model, _normalized(choices))


def solve_marginal(model: NonMigratoryModel) -> tuple[lpmod.LpSolution, ConfigDistribution]:
    sol = lpmod.solve_sparse(build_marginal_lp(model))
    if not sol.optimal:
        raise RuntimeError(f"slot-marginal LP {sol.status}")
    return sol, marginal_distribution(model, sol)


# ---------------------------------------------------------------------------
# configuration LP by column generation

def _column(model: NonMigratoryModel, c: Configuration) -> lpmod.Column:
    return lpmod.Column(("cfg", c.job, c.processor, c.slots), model.config_energy(c), {("assign", c.job): 1.0},
                        payload=(c, frozenset(model.atoms_of(c).tolist())))


def configuration_column(model: NonMigratoryModel, c: Configuration) -> lpmod.Column:
    return _column(model, c)


def price_configurations(model: NonMigratoryModel, duals: dict, tol: float = 1e-9,
                         per_pair: int = 4):
    """Cheapest configuration per (processor, job) and slot count q: the q
    slots with the smallest capacity charge.  Returns (up to ``per_pair``
    improving columns per pair, sum over jobs of the most negative reduced cost)."""
    kappa = []
    for i, pa in enumerate(model.td.atoms):
        k = np.zeros(pa.count)
        for p in range(pa.count):
            v = duals.get(("cap", i, p))
            if v:
                k[p] = max(0.0, -v)
        kappa.append(np.concatenate([[0.0], np.cumsum(k)]))
    best_per_job = {j: 0.0 for j in range(model.instance.n)}
    cols = []
    for (i, j) in model.pairs:
        ranges = model.slot_atom_ranges(i, j)
        charge = kappa[i][ranges[1:]] - kappa[i][ranges[:-1]]
        order = np.lexsort((np.arange(model.K), charge))
        cum = np.cumsum(charge[order])
        rc = model.energy_table[(i, j)] + cum - duals.get(("assign", j), 0.0)
        best_per_job[j] = min(best_per_job[j], float(rc.min()))
        for q in np.argsort(rc, kind="stable")[:per_pair] + 1:
            if rc[q - 1] < -tol:
                cols.append(_column(model, Configuration(j, i, tuple(sorted(int(t) for t in order[:q])))))
    return cols, sum(best_per_job.values())


def energy_upper_bound(model: NonMigratoryModel) -> float:
    return sum(max(model.energy(i, jj, 1) for (i, jj) in model.pairs if jj == j) for j in range(model.instance.n))


def solve_configuration_lp(model: NonMigratoryModel, tol: float = 1e-9, max_iters: int = 2000):
    """Column generation over configurations; capacity rows are added lazily."""
    master = lpmod.LinearProgram()
    for j in range(model.instance.n):
        master.add_row(("assign", j), lpmod.EQ, 1.0)
    big = 10 * energy_upper_bound(model)
    master.add_columns([(("artificial", j), big, {("assign", j): 1.0}) for j in range(model.instance.n)])
    # seed with each job's single best full-window configuration
    seeds = []
    for (i, j) in model.pairs:
        seeds.append(_column(model, Configuration(j, i, tuple(range(model.K)))))

    def pricer(duals):
        cols, gap = price_configurations(model, duals, tol)
        return lpmod.PricingResult(cols, gap)

    def separator(values, pool):
        loads = np.zeros(model.atom_offset[-1])
        for label, v in values.items():
            if v > 1e-12 and label in pool:
                c, atoms = pool[label].payload
                np.add.at(loads, model.atom_offset[c.processor] + model.atoms_of(c), v)
        rows = []
        for flat in np.flatnonzero(loads > 1 + 1e-9):
            i = int(np.searchsorted(model.atom_offset, flat, side="right") - 1)
            rows.append(lpmod.LazyRow(("cap", i, int(flat - model.atom_offset[i])), lpmod.LE, 1.0))
        return rows

    def coeff_of(col, label):
        if label[0] != "cap" or col.payload is None:
            return col.coeffs.get(label, 0.0)
        c, atoms = col.payload
        return 1.0 if (c.processor == label[1] and label[2] in atoms) else 0.0

    res = lpmod.column_generation(master, pricer, tol, max_iters, separator, seeds, coeff_of)
    if res.status not in ("optimal", "cap"):
        raise RuntimeError(f"configuration LP {res.status}")
    sol = res.solution
    for j in range(model.instance.n):
        if sol.value(("artificial", j)) > 1e-7:
            raise RuntimeError(f"job {j} cannot be scheduled at this discretization")
    choices: dict = {j: [] for j in range(model.instance.n)}
    for col, v in res.active_columns():
        c, _ = col.payload
        choices[c.job].append((c, v))
    return res, ConfigDistribution(model, _normalized(choices))


def configuration_lp(model: NonMigratoryModel, configurations) -> lpmod.LinearProgram:
    """Explicit configuration LP over the given configurations (every capacity row present)."""
    lp = lpmod.LinearProgram()
    for j in range(model.instance.n):
        lp.add_row(("assign", j), lpmod.EQ, 1.0)
    for i, pa in enumerate(model.td.atoms):
        for p in pa.covered_indices():
            lp.add_row(("cap", i, int(p)), lpmod.LE, 1.0)
    cols = []
    for c in configurations:
        coeffs = {("assign", c.job): 1.0}
        for p in model.atoms_of(c):
            coeffs[("cap", c.processor, int(p))] = 1.0
        cols.append((("cfg", c.job, c.processor, c.slots), model.config_energy(c), coeffs))
    lp.add_columns(cols)
    return lp


# ---------------------------------------------------------------------------
# rounding and assembly

class Rounder:
    """Precomputed per-configuration atom speed vectors for fast trial evaluation."""

    def __init__(self, dist: ConfigDistribution):
        self.dist = dist
        m = dist.model
        self.model = m
        self.n = m.instance.n
        total_atoms = int(m.atom_offset[-1])
        self.lengths = np.concatenate(m.atom_lengths) if total_atoms else np.zeros(0)
        self.atom_alpha = np.concatenate([np.full(pa.count, m.alphas[i]) for i, pa in enumerate(m.td.atoms)]) \
            if total_atoms else np.zeros(0)
        self.configs, self.cum, self.vectors = [], [], []
        for j in range(self.n):
            opts = dist.choices[j]
            self.configs.append([c for c, _ in opts])
            probs = np.array([p for _, p in opts])
            cum = np.cumsum(probs)
            cum[-1] = 1.0
            self.cum.append(cum)
            V = np.zeros((len(opts), total_atoms))
            for k, (c, _) in enumerate(opts):
                V[k, m.atom_offset[c.processor] + m.atoms_of(c)] = m.config_speed(c)
            self.vectors.append(V)

    def draw(self, rng: np.random.Generator) -> list[int]:
        u = rng.random(self.n)
        return [int(np.searchsorted(self.cum[j], u[j], side="right")) for j in range(self.n)]

    def draws(self, seed: int, trials: int, prefix: tuple = ()) -> np.ndarray:
        return np.array([self.draw(stream(seed, *prefix, t)) for t in range(trials)], dtype=int).reshape(trials, self.n)

    def energies(self, choices: np.ndarray) -> np.ndarray:
        S = np.zeros((choices.shape[0], self.lengths.size))
        for j in range(self.n):
            S += self.vectors[j][choices[:, j]]
        return (self.lengths * S ** self.atom_alpha).sum(axis=1)

    def assignment(self, choice) -> list[Configuration]:
        return [self.configs[j][k] for j, k in enumerate(choice)]


def round_configurations(dist: ConfigDistribution, seed: int, prefix: tuple = ()) -> list[Configuration]:
    """One independent categorical draw per job."""
    r = Rounder(dist)
    return r.assignment(r.draw(stream(seed, *prefix)))


def assemble_schedule(model: NonMigratoryModel, assignment: list[Configuration]) -> Schedule:
    """Each atom runs at the summed speed of the configurations covering it;
    colliding jobs run back to back inside the atom in job-index order."""
    pieces = []
    for i, pa in enumerate(model.td.atoms):
        mine = [c for c in assignment if c.processor == i]
        if not mine:
            continue
        speeds = np.zeros((len(mine), pa.count))
        for k, c in enumerate(mine):
            speeds[k, model.atoms_of(c)] = model.config_speed(c)
        order = np.argsort([c.job for c in mine], kind="stable")
        lengths = pa.lengths
        for p in np.flatnonzero(speeds.sum(axis=0) > 0):
            total = speeds[:, p].sum()
            start = float(pa.bounds[p]) / pa.denom
            for k in order:
                v = speeds[k, p]
                if v <= 0:
                    continue
                dur = float(lengths[p] * v / total)
                pieces.append(Piece(i, mine[k].job, start, start + dur, float(total)))
                start += dur
    return Schedule(model.alphas, merge_adjacent(pieces))


def requirements(model: NonMigratoryModel, assignment: list[Configuration]) -> dict:
    out = {}
    for c in assignment:
        e = model.instance.jobs[c.job][c.processor]
        out[(c.job, None)] = Requirement(c.processor, float(e.release), float(e.deadline), float(e.work))
    return out


def atom_energy(model: NonMigratoryModel, assignment: list[Configuration]) -> float:
    """Energy as sum over atoms of |I| * speed^alpha, independent of piece layout."""
    total = 0.0
    for i, pa in enumerate(model.td.atoms):
        s = np.zeros(pa.count)
        for c in assignment:
            if c.processor == i:
                s[model.atoms_of(c)] += model.config_speed(c)
        total += float((pa.lengths * s ** model.alphas[i]).sum())
    return total


# ---------------------------------------------------------------------------
# end to end

@dataclass
class RoundingReport:
    lp_value: float
    trials: int
    mean_energy: float
    stderr: float
    best_energy: float
    p50: float
    p90: float
    worst_energy: float
    ratio_mean: float
    ratio_best: float
    bell_alpha: float
    guarantee_factor: float | None
    refined_factor: float | None = None
    method: str = ""
    violations: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations


def summarize(lp_value: float, energies: np.ndarray, bell_alpha: float, guarantee: float | None,
              **extra) -> RoundingReport:
    T = energies.size
    mean = float(energies.mean())
    se = float(energies.std(ddof=1) / math.sqrt(T)) if T > 1 else 0.0
    best = float(energies.min())
    ratio = (lambda v: v / lp_value if lp_value > 0 else (1.0 if v <= 0 else math.inf))
    return RoundingReport(lp_value, T, mean, se, best, float(np.percentile(energies, 50)),
                          float(np.percentile(energies, 90)), float(energies.max()), ratio(mean), ratio(best),
                          bell_alpha, guarantee, **extra)


@dataclass
class NonMigratoryResult:
    model: NonMigratoryModel
    distribution: ConfigDistribution
    energies: np.ndarray
    choices: np.ndarray
    best_assignment: list
    schedule: Schedule
    report: RoundingReport


def solve_lp(model: NonMigratoryModel, method: str = "auto", tol: float = 1e-9) -> tuple[ConfigDistribution, str]:
    if method == "auto":
        method = "compact" if len(model.pairs) * model.K ** 2 <= COMPACT_AUTO_LIMIT else "marginal"
    if method == "marginal":
        return solve_marginal(model)[1], method
    if method == "compact":
        sol, index = solve_compact(model, True, tol)
        return extract_configurations(model, sol, index), method
    if method == "colgen":
        return solve_configuration_lp(model, tol)[1], method
    raise ValueError(f"unknown method {method!r}")


def solve_and_round(instance: SchedulingInstance, epsilon=DEFAULT_EPSILON, seed: int = 0, trials: int = 100,
                    method: str = "auto", prefix: tuple = ()) -> NonMigratoryResult:
    model = NonMigratoryModel(instance, epsilon)
    dist, used = solve_lp(model, method)
    lp_value = dist.lp_value()
    rounder = Rounder(dist)
    choices = rounder.draws(seed, trials, prefix)
    energies = rounder.energies(choices)
    best = int(np.argmin(energies))
    assignment = rounder.assignment(choices[best])
    schedule = assemble_schedule(model, assignment)
    violations = check_schedule(schedule, requirements(model, assignment)) + dist.validate()
    per_proc = dist.energy_by_processor()
    refined = (sum(generalized_bell(model.alphas[i]) * f for i, f in enumerate(per_proc)) / lp_value
               if lp_value > 0 else None)
    report = summarize(lp_value, energies, generalized_bell(max(model.alphas)), model.guarantee_factor(),
                       refined_factor=refined, method=used, violations=violations)
    return NonMigratoryResult(model, dist, energies, choices, assignment, schedule, report)
