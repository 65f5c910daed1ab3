"""Min-power routing with uniform demands.

Every demand sends ``bandwidth`` units along one path; an edge carrying n
demands costs c_e (bandwidth * n)^alpha_e.  The fractional relaxation charges
c_e d^alpha_e max{x_e, x_e^alpha_e} for a fractional load x_e and is solved by
outer approximation: a linear epigraph variable per edge plus tangent cuts
added where the current point violates the curve.  Fractional flows are
decomposed into paths and one path per demand is drawn independently.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import lp as lpmod
from .core_types import RoutingInstance
from .probability import generalized_bell
from .rng import stream

DEFAULT_MAX_ROUNDS = 500


def edge_weight(instance: RoutingInstance, e: int) -> float:
    """c_e d^alpha_e, the cost of one demand's worth of load on edge e."""
    edge = instance.edges[e]
    return float(edge.cost) * float(instance.bandwidth) ** edge.alpha


def relaxed_edge_cost(instance: RoutingInstance, e: int, x: float) -> float:
    a = instance.edges[e].alpha
    return edge_weight(instance, e) * max(x, x ** a)


@dataclass
class RelaxationSolution:
    instance: RoutingInstance
    y: np.ndarray  # (demands, arcs) flow of every demand on every directed arc
    x: np.ndarray  # load per edge
    lower_bound: float  # optimum of the final outer approximation
    objective: float  # true relaxed cost at x
    rounds: int
    violations: list  # largest curve violation after every round
    status: str

    @property
    def value(self) -> float:
        return self.lower_bound


def _tangent(alpha: float, at: float) -> tuple[float, float]:
    """(slope, intercept) of the tangent of t -> t^alpha at ``at``."""
    return alpha * at ** (alpha - 1), -(alpha - 1) * at ** alpha


def solve_relaxation(instance: RoutingInstance, tol: float = 1e-7,
                     max_rounds: int = DEFAULT_MAX_ROUNDS) -> RelaxationSolution:
    arcs = instance.arcs()
    D = len(instance.demands)
    E = len(instance.edges)
    cuts = {e: [1.0] for e in range(E) if instance.edges[e].alpha > 1}
    history: list[float] = []
    status = "cap"
    for rnd in range(1, max_rounds + 1):
        sp = lpmod.SparseProgram()
        ycol = np.array([[sp.add_column(("y", i, a), 0.0, 0.0, 1.0) for a in range(len(arcs))] for i in range(D)],
                        dtype=int).reshape(D, len(arcs))
        xcol = [sp.add_column(("x", e), 0.0, 0.0, float(D)) for e in range(E)]
        ucol = [sp.add_column(("u", e), edge_weight(instance, e)) for e in range(E)]
        for i, dm in enumerate(instance.demands):
            for v in instance.nodes:
                rhs = 1.0 if v == dm.source else (-1.0 if v == dm.destination else 0.0)
                coeffs = [(("y", i, a), 1.0) for a, (_, t, _) in enumerate(arcs) if t == v]
                coeffs += [(("y", i, a), -1.0) for a, (_, _, h) in enumerate(arcs) if h == v]
                sp.add_row(("flow", i, v), lpmod.EQ, rhs, coeffs)
        for e in range(E):
            coeffs = [(("x", e), 1.0)] + [(("y", i, a), -1.0) for i in range(D)
                                         for a, (k, _, _) in enumerate(arcs) if k == e]
            sp.add_row(("load", e), lpmod.EQ, 0.0, coeffs)
            sp.add_row(("lin", e), lpmod.GE, 0.0, [(("u", e), 1.0), (("x", e), -1.0)])
            for r, at in enumerate(cuts.get(e, [])):
                slope, icpt = _tangent(instance.edges[e].alpha, at)
                sp.add_row(("cut", e, r), lpmod.GE, icpt, [(("u", e), 1.0), (("x", e), -slope)])
        sol = lpmod.solve_sparse(sp)
        if not sol.optimal:
            raise RuntimeError(f"routing relaxation {sol.status}")
        y = sol.x[ycol] if D else np.zeros((0, len(arcs)))
        x = sol.x[xcol]
        u = sol.x[ucol]
        gaps = np.array([max(x[e], x[e] ** instance.edges[e].alpha) - u[e] for e in range(E)])
        history.append(float(gaps.max(initial=0.0)))
        if history[-1] < tol:
            status = "optimal"
            break
        fresh = [(int(e), float(x[e])) for e in np.flatnonzero(gaps >= tol)
                 if min(abs(c - x[e]) for c in cuts[int(e)]) > 1e-9 * max(1.0, x[e])]
        if not fresh:
            # every violated edge already has a cut at its load: the residue is solver tolerance
            status = "optimal"
            break
        for e, at in fresh:
            cuts[e].append(at)
    objective = sum(relaxed_edge_cost(instance, e, float(x[e])) for e in range(E))
    return RelaxationSolution(instance, np.clip(y, 0.0, 1.0), x, float(sol.objective), objective, rnd, history,
                              status)


# ---------------------------------------------------------------------------
# decomposition

@dataclass
class PathDistribution:
    instance: RoutingInstance
    paths: list  # per demand: list[(tuple of arc ids, probability)]
    discarded: list = field(default_factory=list)  # per demand: flow left on cycles

    def edges_of(self, path: tuple) -> list[int]:
        arcs = self.instance.arcs()
        return [arcs[a][0] for a in path]

    def marginals(self) -> np.ndarray:
        """Probability that each demand uses each arc."""
        out = np.zeros((len(self.paths), len(self.instance.arcs())))
        for i, opts in enumerate(self.paths):
            for p, z in opts:
                out[i, list(p)] += z
        return out

    def edge_loads(self) -> np.ndarray:
        """Expected number of demands on every edge."""
        arcs = self.instance.arcs()
        out = np.zeros(len(self.instance.edges))
        for a, z in enumerate(self.marginals().sum(axis=0)):
            out[arcs[a][0]] += z
        return out


def _find_path(arcs, residual: np.ndarray, source, target, thresh: float):
    out_arcs: dict = {}
    for a, (_, t, h) in enumerate(arcs):
        if residual[a] > thresh:
            out_arcs.setdefault(t, []).append(a)
    dead = set()

    def dfs(v, on_path, path):
        if v == target:
            return list(path)
        for a in out_arcs.get(v, []):
            h = arcs[a][2]
            if h in on_path or h in dead:
                continue
            on_path.add(h)
            path.append(a)
            found = dfs(h, on_path, path)
            if found is not None:
                return found
            path.pop()
            on_path.discard(h)
        dead.add(v)
        return None

    return dfs(source, {source}, [])


def flow_decompose(solution: RelaxationSolution, tol: float = 1e-7) -> PathDistribution:
    """Peel s-t paths off every demand's flow, smallest arc ids first."""
    inst = solution.instance
    arcs = inst.arcs()
    paths, discarded = [], []
    for i, dm in enumerate(inst.demands):
        residual = solution.y[i].copy()
        out_of_source = [a for a, (_, t, _) in enumerate(arcs) if t == dm.source]
        into_source = [a for a, (_, _, h) in enumerate(arcs) if h == dm.source]
        found: list = []
        while residual[out_of_source].sum() - residual[into_source].sum() >= tol:
            path = _find_path(arcs, residual, dm.source, dm.destination, tol * 1e-3)
            if path is None:
                break
            z = float(residual[path].min())
            residual[path] -= z
            found.append((tuple(path), z))
        left = float(residual.sum())
        if left > 1e-6:
            warnings.warn(f"demand {i}: {left:.3g} units of cycle flow discarded", stacklevel=2)
        total = sum(z for _, z in found)
        if not found or total <= 0:
            raise ValueError(f"demand {i} has no source-destination flow")
        paths.append([(p, z / total) for p, z in found])
        discarded.append(left)
    return PathDistribution(inst, paths, discarded)


# ---------------------------------------------------------------------------
# rounding

def routing_energy(instance: RoutingInstance, paths) -> float:
    """sum_e c_e (d n_e)^alpha_e for one path (tuple of arc ids) per demand."""
    arcs = instance.arcs()
    n = np.zeros(len(instance.edges))
    for p in paths:
        for a in p:
            n[arcs[a][0]] += 1
    return sum(float(e.cost) * (instance.bandwidth * n[k]) ** e.alpha for k, e in enumerate(instance.edges))


class PathRounder:
    def __init__(self, dist: PathDistribution):
        self.dist = dist
        inst = dist.instance
        arcs = inst.arcs()
        self.weights = np.array([edge_weight(inst, e) for e in range(len(inst.edges))])
        self.alphas = np.array([e.alpha for e in inst.edges])
        self.cum, self.incidence = [], []
        for opts in dist.paths:
            cum = np.cumsum([z for _, z in opts])
            cum[-1] = 1.0
            self.cum.append(cum)
            M = np.zeros((len(opts), len(inst.edges)))
            for r, (p, _) in enumerate(opts):
                for a in p:
                    M[r, arcs[a][0]] += 1
            self.incidence.append(M)

    def draws(self, seed: int, trials: int, prefix: tuple = ()) -> np.ndarray:
        D = len(self.cum)
        out = np.zeros((trials, D), dtype=int)
        for t in range(trials):
            u = stream(seed, *prefix, t).random(D)
            out[t] = [np.searchsorted(self.cum[i], u[i], side="right") for i in range(D)]
        return out

    def loads(self, choices: np.ndarray) -> np.ndarray:
        n = np.zeros((choices.shape[0], self.weights.size))
        for i, M in enumerate(self.incidence):
            n += M[choices[:, i]]
        return n

    def edge_energies(self, choices: np.ndarray) -> np.ndarray:
        return self.weights * self.loads(choices) ** self.alphas

    def energies(self, choices: np.ndarray) -> np.ndarray:
        return self.edge_energies(choices).sum(axis=1)

    def paths(self, choice) -> list[tuple]:
        return [self.dist.paths[i][k][0] for i, k in enumerate(choice)]


def round_paths(dist: PathDistribution, seed: int, prefix: tuple = ()) -> list[tuple]:
    r = PathRounder(dist)
    return r.paths(r.draws(seed, 1, prefix)[0])


def expected_energy(dist: PathDistribution, limit: int = 1_000_000) -> float:
    """Exact expectation of the rounded energy by enumerating every outcome."""
    sizes = [len(opts) for opts in dist.paths]
    if math.prod(sizes) > limit:
        raise ValueError("too many outcomes to enumerate")
    r = PathRounder(dist)
    choices = np.array(list(itertools.product(*[range(s) for s in sizes])), dtype=int).reshape(-1, len(sizes))
    probs = np.ones(choices.shape[0])
    for i, opts in enumerate(dist.paths):
        probs *= np.array([z for _, z in opts])[choices[:, i]]
    return float(probs @ r.energies(choices))


# ---------------------------------------------------------------------------
# end to end

@dataclass
class EdgeReport:
    edge: int
    load: float  # x_e of the relaxation
    marginal: float  # expected demands on the edge under the path distribution
    mean_energy: float
    stderr: float
    bound: float  # B_alpha_e c_e d^alpha_e max{lambda, lambda^alpha_e}
    bell: float

    @property
    def holds(self) -> bool:
        return self.mean_energy <= self.bound + 3 * self.stderr + 1e-12


@dataclass
class RoutingReport:
    relaxation: float
    relaxation_upper: float
    trials: int
    mean_energy: float
    stderr: float
    best_energy: float
    ratio_mean: float
    ratio_best: float
    bell_alpha: float
    edges: list
    status: str

    @property
    def per_edge_ok(self) -> bool:
        return all(e.holds for e in self.edges)


@dataclass
class RoutingResult:
    relaxation: RelaxationSolution
    distribution: PathDistribution
    energies: np.ndarray
    choices: np.ndarray
    best_paths: list
    report: RoutingReport


def solve_and_round_routing(instance: RoutingInstance, seed: int = 0, trials: int = 100, tol: float = 1e-7,
                            prefix: tuple = ()) -> RoutingResult:
    relax = solve_relaxation(instance, tol)
    dist = flow_decompose(relax)
    rounder = PathRounder(dist)
    choices = rounder.draws(seed, trials, prefix)
    per_edge = rounder.edge_energies(choices)
    energies = per_edge.sum(axis=1)
    lam = dist.edge_loads()
    edges = []
    for e, edge in enumerate(instance.edges):
        col = per_edge[:, e]
        se = float(col.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        b = generalized_bell(edge.alpha)
        bound = b * edge_weight(instance, e) * max(lam[e], lam[e] ** edge.alpha)
        edges.append(EdgeReport(e, float(relax.x[e]), float(lam[e]), float(col.mean()), se, bound, b))
    value = relax.lower_bound
    mean = float(energies.mean())
    best_k = int(np.argmin(energies))
    report = RoutingReport(value, relax.objective, trials, mean,
                           float(energies.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
                           float(energies[best_k]), mean / value if value > 0 else 1.0,
                           float(energies[best_k]) / value if value > 0 else 1.0,
                           generalized_bell(instance.alpha_max), edges, relax.status)
    return RoutingResult(relax, dist, energies, choices, rounder.paths(choices[best_k]), report)


def simple_paths(instance: RoutingInstance, source, target, limit: int | None = None) -> list[tuple]:
    """Every simple source-target path as a tuple of arc ids (DFS, arc-id order)."""
    arcs = instance.arcs()
    out_arcs: dict = {}
    for a, (_, t, _) in enumerate(arcs):
        out_arcs.setdefault(t, []).append(a)
    found: list = []

    def dfs(v, seen, path):
        if v == target:
            found.append(tuple(path))
            if limit is not None and len(found) > limit:
                raise OverflowError
            return
        for a in out_arcs.get(v, []):
            h = arcs[a][2]
            if h not in seen:
                seen.add(h)
                path.append(a)
                dfs(h, seen, path)
                path.pop()
                seen.discard(h)

    dfs(source, {source}, [])
    return found
