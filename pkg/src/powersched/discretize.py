"""Time grids, atomic intervals and speed grids.

Every slot boundary produced here is an integer multiple of a common tick
``1/denom``, so grids are stored as integer tick arrays (exact, and cheap to
sort and search) and converted to :class:`Fraction` only at the API surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core_types import JobShopInstance, SchedulingInstance

DEFAULT_EPSILON = Fraction(1, 4)
DEFAULT_MAX_WINDOWS = 200


def as_fraction(x) -> Fraction:
    """Exact rational for a user parameter; floats go through their shortest repr
    so that 0.1 means 1/10 rather than the nearest binary double."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _require_integer(value: Fraction, what: str) -> int:
    if Fraction(value).denominator != 1:
        raise ValueError(f"{what} must be an integer for the time discretization, got {value}")
    return int(value)


def _check_epsilon(eps: Fraction) -> None:
    if not 0 < eps <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {eps}")


@dataclass(frozen=True)
class SlotGrid:
    """``count`` equal slots tiling the window (start, end]."""

    owner: tuple
    start: Fraction
    end: Fraction
    count: int

    @property
    def length(self) -> Fraction:
        return (self.end - self.start) / self.count

    @property
    def boundaries(self) -> list[Fraction]:
        step = self.length
        return [self.start + k * step for k in range(self.count + 1)]

    def ticks(self, denom: int) -> np.ndarray:
        """Boundaries in units of 1/denom (must divide exactly)."""
        s, e = self.start * denom, self.end * denom
        span = (e - s) / self.count
        if s.denominator != 1 or span.denominator != 1:
            raise ValueError("grid does not align with the tick denominator")
        return int(s) + int(span) * np.arange(self.count + 1, dtype=np.int64)


def slot_count(n: int, eps) -> int:
    eps = as_fraction(eps)
    _check_epsilon(eps)
    return math.ceil(Fraction(n) ** 3 / eps)


def job_slots(instance: SchedulingInstance, i: int, j: int, epsilon=DEFAULT_EPSILON) -> SlotGrid:
    e = instance.jobs[j][i]
    if not e.finite:
        raise ValueError(f"job {j} cannot run on processor {i}")
    _require_integer(e.release, f"release of job {j} on processor {i}")
    _require_integer(e.deadline, f"deadline of job {j} on processor {i}")
    return SlotGrid((i, j), e.release, e.deadline, slot_count(instance.n, epsilon))


@dataclass
class ProcessorAtoms:
    """Atomic intervals of one processor.

    ``bounds`` holds every distinct slot boundary (in ticks); atom ``p`` is
    ``(bounds[p], bounds[p+1]]``.  Atoms lying in a gap between windows are
    kept for indexing but flagged ``covered=False``.
    """

    processor: int
    denom: int
    bounds: np.ndarray
    covered: np.ndarray

    @property
    def count(self) -> int:
        return max(len(self.bounds) - 1, 0)

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.bounds) / self.denom

    def atom(self, p: int) -> tuple[Fraction, Fraction]:
        return Fraction(int(self.bounds[p]), self.denom), Fraction(int(self.bounds[p + 1]), self.denom)

    def locate(self, ticks: np.ndarray) -> np.ndarray:
        """Index of each boundary tick in ``bounds`` (exact match required)."""
        idx = np.searchsorted(self.bounds, ticks)
        if np.any(idx >= len(self.bounds)) or np.any(self.bounds[np.minimum(idx, len(self.bounds) - 1)] != ticks):
            raise ValueError("tick is not an atom boundary")
        return idx

    def covered_indices(self) -> np.ndarray:
        return np.flatnonzero(self.covered)


def merge_intervals(grids: list[SlotGrid], denom: int, processor: int = 0,
                    windows: list[tuple[int, int]] | None = None) -> ProcessorAtoms:
    """Union of the grids' boundaries on one processor.

    ``windows`` optionally lists the (start, end) ticks that count as covered;
    by default each grid's own span is used.
    """
    if not grids:
        return ProcessorAtoms(processor, denom, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=bool))
    bounds = np.unique(np.concatenate([g.ticks(denom) for g in grids]))
    if windows is None:
        windows = [(int(g.start * denom), int(g.end * denom)) for g in grids]
    covered = np.zeros(max(len(bounds) - 1, 0), dtype=bool)
    diff = np.zeros(len(bounds) + 1, dtype=np.int64)
    for s, e in windows:
        a, b = np.searchsorted(bounds, [s, e])
        diff[a] += 1
        diff[b] -= 1
    covered[:] = np.cumsum(diff)[: len(covered)] > 0
    return ProcessorAtoms(processor, denom, bounds, covered)


@dataclass
class TimeDiscretization:
    """Slot grids for every finite (processor, job) pair."""

    epsilon: Fraction
    slots: int
    denom: int
    grids: dict  # (i, j) -> SlotGrid
    atoms: list  # per processor ProcessorAtoms
    slot_atoms: dict = field(default_factory=dict)  # (i, j) -> int array of slot boundary atom indices


def discretize_time(instance: SchedulingInstance, epsilon=DEFAULT_EPSILON) -> TimeDiscretization:
    eps = as_fraction(epsilon)
    K = slot_count(instance.n, eps)
    grids = {(i, j): job_slots(instance, i, j, eps) for (i, j) in instance.finite_pairs()}
    atoms = []
    slot_atoms = {}
    for i in range(instance.m):
        mine = [g for (pi, _), g in grids.items() if pi == i]
        pa = merge_intervals(mine, K, i)
        atoms.append(pa)
        for g in mine:
            slot_atoms[g.owner] = pa.locate(g.ticks(K))
    return TimeDiscretization(eps, K, K, grids, atoms, slot_atoms)


# ---------------------------------------------------------------------------
# speeds

@dataclass(frozen=True)
class SpeedGrid:
    s_lb: float
    s_ub: float
    delta: float
    speeds: np.ndarray

    def neighbours(self, v: float) -> tuple[float, ...]:
        """Grid speeds immediately below and above ``v`` (one if v is off the ends)."""
        k = int(np.searchsorted(self.speeds, v))
        out = []
        if k > 0:
            out.append(float(self.speeds[k - 1]))
        if k < len(self.speeds):
            out.append(float(self.speeds[k]))
        return tuple(out)


def speed_bounds(instance: SchedulingInstance, include_all_windows: bool = False) -> tuple[float, float]:
    lows = []
    for j, row in enumerate(instance.jobs):
        works = [e.work for e in row if e.finite and e.work > 0]
        if not works:
            continue
        span = sum((e.deadline - e.release) for e in row
                   if (e.finite or include_all_windows) and e.deadline > e.release)
        lows.append(min(works) / span)
    highs = []
    for i in range(instance.m):
        entries = [row[i] for row in instance.jobs if row[i].finite]
        if entries:
            highs.append(sum(e.work for e in entries) / min(e.deadline - e.release for e in entries))
    if not lows or not highs or max(highs) <= 0:
        raise ValueError("degenerate instance: no job with positive finite work")
    return float(min(lows)), float(max(highs))


def speed_grid(instance: SchedulingInstance, delta: float = 0.05, include_all_windows: bool = False) -> SpeedGrid:
    """Speeds (1+delta)^k * s_lb for k = 1, 2, ... up to the first one >= s_ub."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    s_lb, s_ub = speed_bounds(instance, include_all_windows)
    return geometric_grid(s_lb, s_ub, delta)


def geometric_grid(s_lb: float, s_ub: float, delta: float) -> SpeedGrid:
    k = max(1, math.ceil(math.log(s_ub / s_lb) / math.log1p(delta) - 1e-12))
    speeds = s_lb * (1 + delta) ** np.arange(1, k + 1, dtype=float)
    while speeds[-1] < s_ub:
        speeds = np.append(speeds, speeds[-1] * (1 + delta))
    return SpeedGrid(s_lb, s_ub, float(delta), speeds)


# ---------------------------------------------------------------------------
# job shop

@dataclass(frozen=True)
class Window:
    start: Fraction
    end: Fraction


@dataclass
class JobShopGrids:
    epsilon: Fraction
    steps_per_interval: int
    inner_slots: int
    denom: int
    breakpoints: list  # global t_l
    points: list  # sorted window endpoints (Fractions), all intervals merged
    windows: dict  # (j, k) -> list[Window]
    capped: dict  # (j, k) -> bool
    atoms: list  # per processor ProcessorAtoms

    def inner_grid(self, j: int, k: int, w: Window) -> SlotGrid:
        return SlotGrid((j, k, w.start, w.end), w.start, w.end, self.inner_slots)


def jobshop_grids(instance: JobShopInstance, epsilon=DEFAULT_EPSILON,
                  max_windows_per_op: int = DEFAULT_MAX_WINDOWS) -> JobShopGrids:
    eps = as_fraction(epsilon)
    _check_epsilon(eps)
    mu = instance.mu
    S = math.ceil(mu * (1 + eps) / eps)
    K_in = math.ceil(Fraction(mu) ** 3 / eps)
    denom = S * K_in
    times = set()
    for j, chain in enumerate(instance.jobs):
        for k, op in enumerate(chain):
            times.add(_require_integer(op.release, f"release of operation ({j},{k})"))
            times.add(_require_integer(op.deadline, f"deadline of operation ({j},{k})"))
    breakpoints = sorted(times)
    points = set()
    for a, b in zip(breakpoints, breakpoints[1:]):
        step = Fraction(b - a, S)
        points.update(a + s * step for s in range(S + 1))
    points = sorted(points)
    windows, capped = {}, {}
    for j, chain in enumerate(instance.jobs):
        for k, op in enumerate(chain):
            inside = [p for p in points if op.release <= p <= op.deadline]
            pairs = [(b, c) for x, b in enumerate(inside) for c in inside[x + 1:]]
            if not pairs:
                raise ValueError(f"window of operation ({j},{k}) holds no pair of grid points")
            capped[(j, k)] = len(pairs) > max_windows_per_op
            if capped[(j, k)]:
                pairs.sort(key=lambda bc: ((bc[0] - op.release) + (op.deadline - bc[1]), bc[0], bc[1]))
                pairs = sorted(pairs[:max_windows_per_op])
            windows[(j, k)] = [Window(b, c) for b, c in pairs]
    atoms = []
    for i in range(instance.m):
        tick_sets = []
        spans = []
        for j, chain in enumerate(instance.jobs):
            for k, op in enumerate(chain):
                if op.processor != i:
                    continue
                for w in windows[(j, k)]:
                    g = SlotGrid((j, k), w.start, w.end, K_in)
                    tick_sets.append(g.ticks(denom))
                spans.append((int(op.release * denom), int(op.deadline * denom)))
        if tick_sets:
            bounds = np.unique(np.concatenate(tick_sets))
            covered = np.zeros(len(bounds) - 1, dtype=bool)
            for s, e in spans:
                a, b = np.searchsorted(bounds, [s, e])
                covered[a:b] = True
            atoms.append(ProcessorAtoms(i, denom, bounds, covered))
        else:
            atoms.append(ProcessorAtoms(i, denom, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=bool)))
    return JobShopGrids(eps, S, K_in, denom, breakpoints, points, windows, capped, atoms)
