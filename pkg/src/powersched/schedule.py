"""Timed execution pieces, energy accounting and feasibility checks shared by
all schedulers.  Piece times are floats; the grids they come from are exact."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Piece:
    processor: int
    job: int
    start: float
    end: float
    speed: float
    operation: int | None = None

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def work(self) -> float:
        return self.speed * (self.end - self.start)

    @property
    def key(self) -> tuple:
        return (self.job, self.operation)


@dataclass
class Schedule:
    alphas: tuple
    pieces: list = field(default_factory=list)

    def energy_by_processor(self) -> list[float]:
        out = [0.0] * len(self.alphas)
        for p in self.pieces:
            out[p.processor] += p.duration * p.speed ** self.alphas[p.processor]
        return out

    def energy(self) -> float:
        return sum(self.energy_by_processor())

    def work_ledger(self) -> dict:
        ledger = defaultdict(float)
        for p in self.pieces:
            ledger[p.key] += p.work
        return dict(ledger)

    def pieces_of(self, job: int, operation: int | None = None) -> list[Piece]:
        return sorted((p for p in self.pieces if p.job == job and p.operation == operation),
                      key=lambda p: p.start)

    def shifted(self, offset: float, processor: int | None = None) -> "Schedule":
        moved = [Piece(p.processor if processor is None else processor, p.job, p.start + offset,
                       p.end + offset, p.speed, p.operation) for p in self.pieces]
        return Schedule(self.alphas, moved)

    def to_document(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "energy": self.energy(),
            "pieces": [{"processor": p.processor, "job": p.job, "operation": p.operation,
                        "start": p.start, "end": p.end, "speed": p.speed}
                       for p in sorted(self.pieces, key=lambda p: (p.processor, p.start, p.job))],
        }


def merge_adjacent(pieces: list[Piece], tol: float = 1e-12) -> list[Piece]:
    """Join back-to-back pieces of the same job/operation running at the same speed."""
    out: list[Piece] = []
    for p in sorted(pieces, key=lambda p: (p.processor, p.start, p.end)):
        if out:
            q = out[-1]
            if (q.processor == p.processor and q.key == p.key and abs(q.end - p.start) <= tol
                    and abs(q.speed - p.speed) <= tol * max(1.0, q.speed)):
                out[-1] = Piece(q.processor, q.job, q.start, p.end, q.speed, q.operation)
                continue
        out.append(p)
    return out


@dataclass(frozen=True)
class Requirement:
    """What a job (or operation) must receive: ``work`` units on ``processor``
    (None: any processor) inside (release, deadline]."""

    processor: int | None
    release: float
    deadline: float
    work: float


def check_schedule(schedule: Schedule, requirements: dict, tol: float = 1e-6) -> list[str]:
    """Return human-readable violations (empty when feasible)."""
    problems = []
    by_proc = defaultdict(list)
    for p in schedule.pieces:
        by_proc[p.processor].append(p)
        if p.end < p.start - tol:
            problems.append(f"piece {p} has negative duration")
        req = requirements.get(p.key)
        if req is None:
            problems.append(f"piece for unknown job {p.key}")
            continue
        if req.processor is not None and p.processor != req.processor:
            problems.append(f"job {p.key} runs on processor {p.processor}, expected {req.processor}")
        if p.start < req.release - tol or p.end > req.deadline + tol:
            problems.append(f"job {p.key} piece [{p.start}, {p.end}] outside ({req.release}, {req.deadline}]")
    for proc, pieces in by_proc.items():
        pieces = sorted(pieces, key=lambda p: (p.start, p.end))
        for a, b in zip(pieces, pieces[1:]):
            if b.start < a.end - tol:
                problems.append(f"processor {proc}: {a.key} and {b.key} overlap at {b.start}")
    ledger = schedule.work_ledger()
    for key, req in requirements.items():
        done = ledger.get(key, 0.0)
        if abs(done - req.work) > tol * max(1.0, req.work):
            problems.append(f"job {key} executed {done}, expected {req.work}")
    return problems


def check_non_preemptive(schedule: Schedule, tol: float = 1e-9) -> list[str]:
    """Each job must occupy one contiguous stretch of one processor."""
    problems = []
    groups = defaultdict(list)
    for p in schedule.pieces:
        groups[p.key].append(p)
    for key, pieces in groups.items():
        if len({p.processor for p in pieces}) > 1:
            problems.append(f"job {key} uses several processors")
        pieces.sort(key=lambda p: p.start)
        for a, b in zip(pieces, pieces[1:]):
            if b.start > a.end + tol:
                problems.append(f"job {key} is preempted between {a.end} and {b.start}")
    return problems


def check_precedence(schedule: Schedule, chains: dict, tol: float = 1e-9) -> list[str]:
    """``chains`` maps job -> number of operations; every piece of operation k
    must end before any piece of operation k+1 starts."""
    problems = []
    spans = {}
    for p in schedule.pieces:
        lo, hi = spans.get(p.key, (float("inf"), float("-inf")))
        spans[p.key] = (min(lo, p.start), max(hi, p.end))
    for job, count in chains.items():
        for k in range(count - 1):
            a, b = spans.get((job, k)), spans.get((job, k + 1))
            if a and b and b[0] < a[1] - tol:
                problems.append(f"job {job}: operation {k + 1} starts at {b[0]} before operation {k} ends at {a[1]}")
    return problems
