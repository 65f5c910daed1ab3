"""Exact optima of tiny instances, used as ground truth by tests and experiments.

Each oracle declares a search limit and raises :class:`OracleRefusal` instead
of silently returning a partial answer.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

GOLDEN = (math.sqrt(5) - 1) / 2


class OracleRefusal(RuntimeError):
    """The instance exceeds the oracle's declared limits."""


@dataclass
class OracleResult:
    value: float
    solution: Any
    search_space: int
    elapsed: float


# ---------------------------------------------------------------------------
# continuous single processor, non-preemptive

def golden_section(f, lo: float, hi: float, xtol: float) -> tuple[float, float]:
    """Minimize a convex (unimodal) f on the open interval (lo, hi)."""
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > xtol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _order_optimum(jobs: list, alpha: float, tol: float) -> tuple[float, list]:
    """Best energy with jobs run in the given order.  Job k runs during
    (max(c_{k-1}, r_k), min(c_k, d_k)] for boundaries c_1 < c_2 < ...; the
    energy is jointly convex in the boundaries, so nested golden-section
    search is exact up to ``tol``."""
    n = len(jobs)

    def energy(w, length):
        return w ** alpha / length ** (alpha - 1) if length > 0 else math.inf

    def best(k, c_prev):
        r, d, w = jobs[k]
        start = r if c_prev is None else max(c_prev, r)
        if k == n - 1:
            return energy(w, d - start), []
        lo, hi = start, min(dd for _, dd, _ in jobs[k + 1:])
        if lo >= hi or d <= start:
            return math.inf, []

        def f(c):
            return energy(w, min(c, d) - start) + best(k + 1, c)[0]

        c, _ = golden_section(f, lo, hi, tol * max(1.0, hi - lo))
        rest_value, rest = best(k + 1, c)
        return energy(w, min(c, d) - start) + rest_value, [c] + rest

    return best(0, None)


def continuous_single_processor(jobs, alpha: float, tol: float = 1e-7, max_jobs: int = 3) -> OracleResult:
    """Non-preemptive optimum with free speeds on one processor, by enumerating
    job orders.  ``jobs`` are (release, deadline, work) triples."""
    t0 = time.perf_counter()
    jobs = [(float(r), float(d), float(w)) for r, d, w in jobs]
    if len(jobs) > max_jobs:
        raise OracleRefusal(f"continuous oracle handles at most {max_jobs} jobs, got {len(jobs)}")
    best_value, best_plan = math.inf, None
    count = 0
    for order in itertools.permutations(range(len(jobs))):
        count += 1
        value, cuts = _order_optimum([jobs[j] for j in order], alpha, tol * 1e-3)
        if value < best_value:
            best_value, best_plan = value, (order, cuts)
    if best_plan is None:
        raise ValueError("no feasible job order")
    return OracleResult(best_value, best_plan, count, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# discretized non-migratory IP

DEFAULT_MAX_STATES = 20_000_000


class _Budget:
    def __init__(self, limit: int, unit: str = "DP states"):
        self.limit = limit
        self.unit = unit
        self.used = 0

    def spend(self, n: int) -> None:
        self.used += n
        if self.used > self.limit:
            raise OracleRefusal(f"search exceeds {self.limit} {self.unit}")

    def affordable(self, n: int) -> None:
        """Refuse before allocating an array that would blow the budget."""
        if self.used + n > self.limit:
            raise OracleRefusal(f"search exceeds {self.limit} {self.unit}")


class _Sweep:
    """Cheapest way to give every job at least one of its own slots, with all
    chosen slots pairwise disjoint.

    ``grids[j]`` are job j's slot boundaries (integer ticks, equally spaced),
    ``energies[j][q]`` the cost of using q slots (index 0 is +inf).  The sweep
    visits every boundary once; its state is a dense array indexed by the slot
    counts of the jobs whose window contains the current boundary.  A job's
    cost is added when its window closes.  With ``keep=True`` the arrays are
    stored so that :meth:`slots` can walk back to one optimal choice."""

    def __init__(self, grids: dict, energies: dict, budget: _Budget, keep: bool = False):
        self.grids, self.energies, self.budget = grids, energies, budget
        self.jobs = sorted(grids)
        self.start = {j: int(grids[j][0]) for j in self.jobs}
        self.end = {j: int(grids[j][-1]) for j in self.jobs}
        self.step = {j: int(grids[j][1] - grids[j][0]) for j in self.jobs}
        self.K = {j: len(grids[j]) - 1 for j in self.jobs}
        self.positions = sorted({int(t) for j in self.jobs for t in grids[j]})
        self.stored: dict = {}
        self.value = self._run(keep)

    def frame(self, x: int) -> tuple:
        return tuple(j for j in self.jobs if self.start[j] <= x < self.end[j])

    def sizes(self, fr: tuple, x: int) -> tuple:
        return tuple(min(self.K[j], (x - self.start[j]) // self.step[j]) + 1 for j in fr)

    def _skipped(self, x_from: int, x_to: int) -> bool:
        return any(self.start[j] > x_from and self.end[j] <= x_to for j in self.jobs)

    def _convert(self, V, fr, x_from, x_to):
        to = self.frame(x_to)
        if self._skipped(x_from, x_to):
            return None
        want = self.sizes(to, x_to)
        self.budget.affordable(math.prod(want))
        for j in [j for j in fr if j not in to]:
            ax = fr.index(j)
            e = self.energies[j][: V.shape[ax]]
            shape = [1] * V.ndim
            shape[ax] = e.size
            V = (V + e.reshape(shape)).min(axis=ax)
            fr = tuple(k for k in fr if k != j)
        for j in [j for j in to if j not in fr]:
            V = V[..., None]
            fr = fr + (j,)
        order = [fr.index(j) for j in to]
        V = np.transpose(V, order) if order else V
        pad = [(0, w - s) for s, w in zip(V.shape, want)]
        if any(p for _, p in pad):
            V = np.pad(V, pad, constant_values=np.inf)
        return V

    def _run(self, keep: bool) -> float:
        pending: dict = {}

        def arrive(x_from, fr, V, x_to):
            V = self._convert(V, fr, x_from, x_to)
            if V is None:
                return
            pending[x_to] = np.minimum(pending[x_to], V) if x_to in pending else V

        first = self.positions[0]
        shape = self.sizes(self.frame(first), first)
        self.budget.affordable(math.prod(shape))
        V0 = np.full(shape, np.inf)
        V0[(0,) * len(shape)] = 0.0
        pending[first] = V0
        for k, x in enumerate(self.positions):
            V = pending.pop(x, None)
            if V is None:
                continue
            self.budget.spend(V.size)
            if keep:
                self.stored[x] = V
            fr = self.frame(x)
            if k + 1 == len(self.positions):
                return float(V)
            arrive(x, fr, V, self.positions[k + 1])
            for ax, j in enumerate(fr):
                if (x - self.start[j]) % self.step[j] == 0 and V.shape[ax] <= self.K[j]:
                    shifted = np.full(V.shape[:ax] + (V.shape[ax] + 1,) + V.shape[ax + 1:], np.inf)
                    idx = [slice(None)] * V.ndim
                    idx[ax] = slice(1, None)
                    shifted[tuple(idx)] = V
                    arrive(x, fr, shifted, x + self.step[j])
        return math.inf

    def _predecessor_counts(self, x_from, counts_to: dict, x_to, value, moved=None):
        """Counts at x_from that lead to ``counts_to`` at x_to with the same value,
        trying every count for jobs whose window closed in between."""
        V = self.stored.get(x_from)
        if V is None:
            return None
        fr = self.frame(x_from)
        closed = [j for j in fr if self.end[j] <= x_to]
        for j in counts_to:
            if j not in fr and counts_to[j] != 0:
                return None
        ranges = [range(1, min(V.shape[fr.index(j)] + (j == moved), self.K[j] + 1)) for j in closed]
        for qs in itertools.product(*ranges):
            fixed = dict(zip(closed, qs))
            extra = sum(self.energies[j][q] for j, q in fixed.items())
            idx = []
            for j in fr:
                c = fixed[j] if j in fixed else counts_to[j]
                if j == moved:
                    c -= 1
                if not 0 <= c < V.shape[len(idx)]:
                    break
                idx.append(c)
            else:
                prev = V[tuple(idx)]
                if np.isfinite(prev) and math.isclose(prev + extra, value, rel_tol=1e-12, abs_tol=1e-300):
                    return dict(zip(fr, idx)), prev
        return None

    def slots(self) -> dict:
        """One optimal choice: job -> sorted slot indices."""
        if not math.isfinite(self.value):
            raise ValueError("infeasible")
        chosen = {j: [] for j in self.jobs}
        x, counts, value = self.positions[-1], {}, self.value
        index = {x: k for k, x in enumerate(self.positions)}
        while True:
            if x == self.positions[0] and value == 0.0 and not any(counts.values()):
                break
            found = None
            k = index[x]
            if k > 0 and not self._skipped(self.positions[k - 1], x):
                found = self._predecessor_counts(self.positions[k - 1], counts, x, value)
                if found is not None:
                    x = self.positions[k - 1]
            if found is None:
                for j in self.jobs:
                    y = x - self.step[j]
                    if (y < self.start[j] or x > self.end[j] or (y - self.start[j]) % self.step[j]
                            or self._skipped(y, x)):
                        continue
                    found = self._predecessor_counts(y, counts, x, value, moved=j)
                    if found is not None:
                        chosen[j].append((y - self.start[j]) // self.step[j])
                        x = y
                        break
            if found is None:
                raise RuntimeError("backtracking lost the optimal path")
            counts, value = found
        return {j: tuple(sorted(v)) for j, v in chosen.items()}


def ip_nonmigratory(instance, epsilon, max_states: int = DEFAULT_MAX_STATES, with_solution: bool = True) -> OracleResult:
    """Exact optimum of the discretized integer program: every job gets one
    configuration (processor plus a set of its slots) and configurations on a
    processor never share an atomic interval."""
    from .nonmigratory import Configuration, NonMigratoryModel

    t0 = time.perf_counter()
    model = epsilon if isinstance(epsilon, NonMigratoryModel) else NonMigratoryModel(instance, epsilon)
    inst = model.instance
    budget = _Budget(max_states)
    denom = model.td.denom
    grid = {(i, j): model.td.grids[(i, j)].ticks(denom) for (i, j) in model.pairs}
    cost = {(i, j): np.concatenate([[np.inf], model.energy_table[(i, j)]]) for (i, j) in model.pairs}
    floor = {(i, j): float(model.energy_table[(i, j)][-1]) for (i, j) in model.pairs}
    memo: dict = {}

    def block(i, S):
        if (i, S) not in memo:
            memo[(i, S)] = _Sweep({j: grid[(i, j)] for j in S}, {j: cost[(i, j)] for j in S}, budget) if S else None
        return memo[(i, S)].value if S else 0.0

    options = [[i for i in range(inst.m) if inst.jobs[j][i].finite] for j in range(inst.n)]
    assignments = []
    for choice in itertools.product(*options):
        bound = sum(floor[(i, j)] for j, i in enumerate(choice))
        assignments.append((bound, choice))
    assignments.sort()
    best, best_choice = math.inf, None
    for bound, choice in assignments:
        if bound >= best:
            break
        total = 0.0
        for i in range(inst.m):
            total += block(i, tuple(j for j, ii in enumerate(choice) if ii == i))
            if total >= best:
                break
        if total < best:
            best, best_choice = total, choice
    if best_choice is None or not math.isfinite(best):
        raise ValueError("the discretized IP has no feasible solution")
    solution = None
    if with_solution:
        solution = {}
        for i in range(inst.m):
            S = tuple(j for j, ii in enumerate(best_choice) if ii == i)
            if not S:
                continue
            sweep = _Sweep({j: grid[(i, j)] for j in S}, {j: cost[(i, j)] for j in S}, budget, keep=True)
            for j, slots in sweep.slots().items():
                solution[j] = Configuration(j, i, slots)
    return OracleResult(best, solution, budget.used, time.perf_counter() - t0)


DEFAULT_MAX_COMBINATIONS = 10_000_000


def ip_jobshop(instance, epsilon, max_combinations: int = DEFAULT_MAX_COMBINATIONS,
               max_windows_per_op: int | None = None) -> OracleResult:
    """Exact optimum of the discretized job-shop integer program.

    Depth-first search over operations (job by job, along each chain): pick a
    window and slot count in order of increasing energy, then every slot set of
    that size that respects the chain order and avoids occupied atoms.  The
    energy of the remaining operations at their cheapest bounds the search.
    ``max_combinations`` caps the number of slot sets tried."""
    from .discretize import DEFAULT_MAX_WINDOWS
    from .jobshop import JobShopConfiguration, JobShopModel, OperationPlan

    t0 = time.perf_counter()
    model = epsilon if isinstance(epsilon, JobShopModel) else JobShopModel(
        instance, epsilon, max_windows_per_op or DEFAULT_MAX_WINDOWS)
    budget = _Budget(max_combinations, "slot sets")
    ops = [(j, k) for j, chain in enumerate(model.instance.jobs) for k in range(len(chain))]
    menus, cheapest = [], []
    for j, k in ops:
        items = []
        for w in model.grids.windows[(j, k)]:
            ticks = model.slot_ticks(w)
            r = model.slot_atom_ranges(j, k, w)
            masks = [((1 << int(r[s + 1])) - 1) ^ ((1 << int(r[s])) - 1) for s in range(model.K)]
            for q, e in enumerate(model.energy_table(j, k, w), start=1):
                items.append((float(e), q, w, ticks, masks))
        items.sort(key=lambda it: it[0])
        menus.append(items)
        cheapest.append(items[0][0])
    rest = np.concatenate([np.cumsum(cheapest[::-1])[::-1], [0.0]])
    best = [math.inf, None]
    chosen: list = []
    occupied = [0] * model.instance.m

    def rec(pos: int, total: float, chain_end: int):
        if pos == len(ops):
            if total < best[0]:
                best[0], best[1] = total, list(chosen)
            return
        j, k = ops[pos]
        if k == 0:
            chain_end = -1
        proc = model.op(j, k).processor
        for e, q, w, ticks, masks in menus[pos]:
            if total + e + rest[pos + 1] >= best[0]:
                break
            free = [s for s in range(model.K) if ticks[s] >= chain_end and not occupied[proc] & masks[s]]
            for subset in itertools.combinations(free, q):
                budget.spend(1)
                mask = 0
                for s in subset:
                    mask |= masks[s]
                occupied[proc] |= mask
                chosen.append(OperationPlan(w, subset))
                rec(pos + 1, total + e, int(ticks[subset[-1] + 1]))
                chosen.pop()
                occupied[proc] ^= mask
                if total + e + rest[pos + 1] >= best[0]:
                    break

    rec(0, 0.0, -1)
    if best[1] is None:
        raise ValueError("the discretized job-shop IP has no feasible solution")
    solution, it = {}, iter(best[1])
    for j, chain in enumerate(model.instance.jobs):
        solution[j] = JobShopConfiguration(j, tuple(next(it) for _ in chain))
    return OracleResult(best[0], solution, budget.used, time.perf_counter() - t0)


def count_migratory_configurations(model) -> int:
    """Number of columns of the full migratory configuration LP."""
    speeds = len(model.grid.speeds)
    total = 0
    for pairs in model.alive:
        for size in range(1, model.instance.m + 1):
            for chosen in itertools.combinations(pairs, size):
                if len({j for _, j in chosen}) == size and len({i for i, _ in chosen}) == size:
                    total += speeds ** size
    return total


def ip_migratory(instance, delta, max_combinations: int = 50_000) -> OracleResult:
    """Optimum of the migratory configuration LP with every column present."""
    from .migratory import MigratoryModel, enumerated_lp_value

    t0 = time.perf_counter()
    model = delta if isinstance(delta, MigratoryModel) else MigratoryModel(instance, delta)
    count = count_migratory_configurations(model)
    if count > max_combinations:
        raise OracleRefusal(f"{count} configurations exceed the limit {max_combinations}")
    return OracleResult(enumerated_lp_value(model), None, count, time.perf_counter() - t0)


def ip_routing(instance, max_combinations: int = DEFAULT_MAX_COMBINATIONS) -> OracleResult:
    """Exact min-power unsplittable routing by enumerating simple paths.

    Loads only grow as demands are added, so the energy of a partial choice
    bounds every completion of it."""
    from .routing import simple_paths

    t0 = time.perf_counter()
    arcs = instance.arcs()
    menus = []
    for dm in instance.demands:
        try:
            paths = simple_paths(instance, dm.source, dm.destination, limit=max_combinations)
        except OverflowError:
            raise OracleRefusal(f"more than {max_combinations} simple paths for one demand") from None
        menus.append([[arcs[a][0] for a in p] for p in paths])
        if not paths:
            raise ValueError("a demand has no path")
    size = math.prod(len(m) for m in menus)
    if size > max_combinations:
        raise OracleRefusal(f"{size} path combinations exceed the limit {max_combinations}")
    weight = [float(e.cost) * float(instance.bandwidth) ** e.alpha for e in instance.edges]
    alpha = [e.alpha for e in instance.edges]
    loads = [0] * len(instance.edges)
    best = [math.inf, None]
    chosen: list = []

    def energy_delta(edges) -> float:
        return sum(weight[e] * ((loads[e] + 1) ** alpha[e] - loads[e] ** alpha[e]) for e in edges)

    def rec(i: int, total: float):
        if total >= best[0]:
            return
        if i == len(menus):
            best[0], best[1] = total, list(chosen)
            return
        options = sorted(range(len(menus[i])), key=lambda k: energy_delta(menus[i][k]))
        for k in options:
            delta = energy_delta(menus[i][k])
            if total + delta >= best[0]:
                break
            for e in menus[i][k]:
                loads[e] += 1
            chosen.append(k)
            rec(i + 1, total + delta)
            chosen.pop()
            for e in menus[i][k]:
                loads[e] -= 1

    rec(0, 0.0)
    paths = [simple_paths(instance, dm.source, dm.destination)[k] for dm, k in zip(instance.demands, best[1])]
    return OracleResult(best[0], paths, size, time.perf_counter() - t0)
