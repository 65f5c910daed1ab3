"""Dense LP solver, column generation and bipartite matching utilities.

``solve`` is a two-phase revised simplex with an explicit basis inverse,
product-form updates and periodic refactorization.  Dantzig pricing is used
until 50 consecutive degenerate pivots occur, after which Bland's rule takes
over for the rest of the solve.

Dual sign convention (minimization): duals of ``>=`` rows are non-negative,
duals of ``<=`` rows are non-positive, and at optimality every column has
reduced cost ``c_j - sum_r dual_r * A[r, j] >= 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog

LE, EQ, GE = "<=", "=", ">="
_SENSES = (LE, EQ, GE)


class LinearProgram:
    """min c.x subject to labelled rows ``a.x (<=|=|>=) b`` and bounds lb <= x <= ub."""

    def __init__(self):
        self.c = np.zeros(0)
        self.A = np.zeros((0, 0))
        self.senses: list[str] = []
        self.b = np.zeros(0)
        self.lb = np.zeros(0)
        self.ub = np.zeros(0)
        self.row_labels: list[Hashable] = []
        self.col_labels: list[Hashable] = []
        self._row_index: dict[Hashable, int] = {}
        self._col_index: dict[Hashable, int] = {}

    @property
    def n_rows(self) -> int:
        return len(self.row_labels)

    @property
    def n_cols(self) -> int:
        return len(self.col_labels)

    def row_index(self, label) -> int:
        return self._row_index[label]

    def col_index(self, label) -> int:
        return self._col_index[label]

    def has_row(self, label) -> bool:
        return label in self._row_index

    def has_col(self, label) -> bool:
        return label in self._col_index

    def add_row(self, label, sense: str, rhs: float, coeffs: dict | None = None) -> int:
        """Add a row; ``coeffs`` maps column labels to coefficients."""
        if sense not in _SENSES:
            raise ValueError(f"bad relation {sense!r}")
        if label in self._row_index:
            raise ValueError(f"duplicate row label {label!r}")
        row = np.zeros(self.n_cols)
        for col, v in (coeffs or {}).items():
            row[self._col_index[col]] += v
        self.A = np.vstack([self.A.reshape(self.n_rows, self.n_cols), row[None, :]])
        self.senses.append(sense)
        self.b = np.append(self.b, float(rhs))
        self._row_index[label] = len(self.row_labels)
        self.row_labels.append(label)
        return self._row_index[label]

    def add_columns(self, columns: Sequence[tuple]) -> None:
        """Add columns given as ``(label, cost, coeffs_by_row_label[, lb, ub])``.

        Coefficients for row labels that are not (yet) in the LP are ignored.
        """
        if not columns:
            return
        old_n = self.n_cols
        block = np.zeros((self.n_rows, len(columns)))
        costs, lbs, ubs = [], [], []
        for k, col in enumerate(columns):
            label, cost, coeffs = col[0], col[1], col[2]
            lb = col[3] if len(col) > 3 else 0.0
            ub = col[4] if len(col) > 4 else math.inf
            if label in self._col_index:
                raise ValueError(f"duplicate column label {label!r}")
            self._col_index[label] = self.n_cols + k
            for row, v in coeffs.items():
                r = self._row_index.get(row)
                if r is not None:
                    block[r, k] += v
            costs.append(float(cost))
            lbs.append(float(lb))
            ubs.append(float(ub))
        self.col_labels.extend(c[0] for c in columns)
        self.A = np.hstack([self.A.reshape(self.n_rows, old_n), block])
        self.c = np.append(self.c, costs)
        self.lb = np.append(self.lb, lbs)
        self.ub = np.append(self.ub, ubs)

    def add_column(self, label, cost: float, coeffs: dict, lb: float = 0.0, ub: float = math.inf) -> None:
        self.add_columns([(label, cost, coeffs, lb, ub)])

    def copy(self) -> "LinearProgram":
        other = LinearProgram()
        other.c, other.A, other.b = self.c.copy(), self.A.copy(), self.b.copy()
        other.lb, other.ub = self.lb.copy(), self.ub.copy()
        other.senses = list(self.senses)
        other.row_labels, other.col_labels = list(self.row_labels), list(self.col_labels)
        other._row_index, other._col_index = dict(self._row_index), dict(self._col_index)
        return other

    @classmethod
    def from_arrays(cls, c, A, senses, b, lb=None, ub=None) -> "LinearProgram":
        A = np.asarray(A, dtype=float)
        lp = cls()
        m, n = A.shape
        lb = np.zeros(n) if lb is None else lb
        ub = np.full(n, math.inf) if ub is None else ub
        lp.add_columns([(f"x{j}", c[j], {}, lb[j], ub[j]) for j in range(n)])
        for r in range(m):
            lp.add_row(f"r{r}", senses[r], b[r], {f"x{j}": A[r, j] for j in range(n) if A[r, j] != 0})
        return lp

    @classmethod
    def from_dense(cls, c, A, senses, b, row_labels, col_labels, lb=None, ub=None) -> "LinearProgram":
        """Build directly from arrays with explicit labels (no per-row dict work)."""
        lp = cls()
        A = np.asarray(A, dtype=float)
        n = A.shape[1]
        lp.c = np.asarray(c, dtype=float).copy()
        lp.A = A.copy()
        lp.senses = list(senses)
        lp.b = np.asarray(b, dtype=float).copy()
        lp.lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float).copy()
        lp.ub = np.full(n, math.inf) if ub is None else np.asarray(ub, dtype=float).copy()
        lp.row_labels, lp.col_labels = list(row_labels), list(col_labels)
        lp._row_index = {lab: k for k, lab in enumerate(lp.row_labels)}
        lp._col_index = {lab: k for k, lab in enumerate(lp.col_labels)}
        if len(lp._row_index) != len(lp.row_labels) or len(lp._col_index) != len(lp.col_labels):
            raise ValueError("duplicate labels")
        return lp

    def dump(self) -> str:
        """Plain-text form, one declaration per line::

            min
            var <label> <cost> <lb> <ub>
            row <label> <relation> <rhs> | <col label>:<coef> ...
        """
        lines = ["min"]
        for j, lab in enumerate(self.col_labels):
            lines.append(f"var {lab} {float(self.c[j])!r} {float(self.lb[j])!r} {float(self.ub[j])!r}")
        for r, lab in enumerate(self.row_labels):
            terms = " ".join(f"{self.col_labels[j]}:{float(self.A[r, j])!r}" for j in np.flatnonzero(self.A[r]))
            lines.append(f"row {lab} {self.senses[r]} {float(self.b[r])!r} | {terms}")
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    x: np.ndarray
    duals: np.ndarray
    objective: float
    dual_objective: float
    basis: list = field(default_factory=list)
    iterations: int = 0
    col_labels: list = field(default_factory=list)
    row_labels: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def value(self, col_label) -> float:
        if "_col_pos" not in self.__dict__:
            self._col_pos = {lab: k for k, lab in enumerate(self.col_labels)}
        return float(self.x[self._col_pos[col_label]])

    def dual(self, row_label) -> float:
        if "_row_pos" not in self.__dict__:
            self._row_pos = {lab: k for k, lab in enumerate(self.row_labels)}
        return float(self.duals[self._row_pos[row_label]])

    def values_by_label(self) -> dict:
        return dict(zip(self.col_labels, self.x.tolist()))

    def duals_by_label(self) -> dict:
        return dict(zip(self.row_labels, self.duals.tolist()))


# ---------------------------------------------------------------------------
# simplex

REFACTOR_EVERY = 100
DEGENERATE_SWITCH = 50


class _Standard:
    """The LP in the form  M z = rhs, z >= 0, with bookkeeping to map back."""

    def __init__(self, lp: LinearProgram):
        n = lp.n_cols
        if np.any(~np.isfinite(lp.lb)):
            raise ValueError("variable lower bounds must be finite")
        shift = lp.A @ lp.lb if n else np.zeros(lp.n_rows)
        bounded = [j for j in range(n) if math.isfinite(lp.ub[j])]
        rows = [(lp.A[r], lp.senses[r], lp.b[r] - shift[r], ("s", lp.row_labels[r])) for r in range(lp.n_rows)]
        for j in bounded:
            e = np.zeros(n)
            e[j] = 1.0
            rows.append((e, LE, lp.ub[j] - lp.lb[j], ("u", lp.col_labels[j])))
        m = len(rows)
        self.m, self.n = m, n
        self.n_orig_rows = lp.n_rows
        self.flip = np.ones(m)
        senses = []
        rhs = np.zeros(m)
        for r, (_, sense, b, _) in enumerate(rows):
            if b < 0:
                self.flip[r] = -1.0
                sense = {LE: GE, GE: LE, EQ: EQ}[sense]
            senses.append(sense)
            rhs[r] = abs(b)
        n_slack = sum(1 for s in senses if s != EQ)
        n_art = sum(1 for s in senses if s != LE)
        N = n + n_slack + n_art
        M = np.zeros((m, N))
        keys: list[tuple] = [("x", lab) for lab in lp.col_labels]
        art_mask = np.zeros(N, dtype=bool)
        init_basis = [0] * m
        col = n
        for r, (a, _, _, skey) in enumerate(rows):
            M[r, :n] = a * self.flip[r]
            if senses[r] != EQ:
                M[r, col] = 1.0 if senses[r] == LE else -1.0
                keys.append(skey)
                if senses[r] == LE:
                    init_basis[r] = col
                col += 1
        for r in range(m):
            if senses[r] != LE:
                M[r, col] = 1.0
                keys.append(("a", rows[r][3][1]))
                art_mask[col] = True
                init_basis[r] = col
                col += 1
        self.M, self.rhs, self.keys, self.art_mask = M, rhs, keys, art_mask
        self.key_index = {k: i for i, k in enumerate(keys)}
        self.init_basis = init_basis
        self.cost = np.zeros(N)
        self.cost[:n] = lp.c
        self.shift_obj = float(lp.c @ lp.lb) if n else 0.0
        self.row_rhs_shifted = np.array([b for (_, _, b, _) in rows])


class _SingularBasis(Exception):
    pass


class _Simplex:
    def __init__(self, std: _Standard, basis: list[int], tol: float, max_iter: int):
        self.s = std
        self.tol = tol
        self.max_iter = max_iter
        self.basis = list(basis)
        self.iterations = 0
        self.bland = False
        self.degenerate_run = 0
        self._refactor()

    def _refactor(self) -> None:
        B = self.s.M[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise _SingularBasis() from None
        self.xB = self.Binv @ self.s.rhs
        self.since_refactor = 0

    def run(self, cost: np.ndarray, allow_art: bool) -> str:
        s = self.s
        tol = self.tol
        M = s.M
        while True:
            if self.iterations >= self.max_iter:
                return "iteration_limit"
            y = cost[self.basis] @ self.Binv
            d = cost - y @ M
            d[self.basis] = 0.0
            if not allow_art:
                d[s.art_mask] = 0.0
            candidates = np.flatnonzero(d < -tol)
            if candidates.size == 0:
                return "optimal"
            if self.bland:
                q = int(candidates[0])
            else:
                q = int(candidates[np.argmin(d[candidates])])
            u = self.Binv @ M[:, q]
            # ratio test; basic artificials must stay at zero once phase 1 is over
            ratios = np.full(s.m, np.inf)
            pos = u > tol
            ratios[pos] = np.maximum(self.xB[pos], 0.0) / u[pos]
            if not allow_art:
                basis_arr = np.asarray(self.basis)
                blocked = s.art_mask[basis_arr] & (np.abs(u) > tol)
                ratios[blocked] = 0.0
            theta = ratios.min()
            if not np.isfinite(theta):
                return "unbounded"
            ties = np.flatnonzero(ratios <= theta + 1e-12 * max(1.0, theta))
            if self.bland:
                # smallest basic index among the ties, skipping tiny pivots when possible
                big = ties[np.abs(u[ties]) >= 1e-3 * np.abs(u[ties]).max()]
                r = int(min(big, key=lambda i: self.basis[i]))
            else:
                r = int(ties[np.argmax(np.abs(u[ties]))])
            self._pivot(r, q, u, theta)
            # Bland's rule only while stalled: it cannot cycle within a run of
            # degenerate pivots, and each progressing pivot lowers the objective.
            if theta <= tol:
                self.degenerate_run += 1
                if self.degenerate_run >= DEGENERATE_SWITCH:
                    self.bland = True
            else:
                self.degenerate_run = 0
                self.bland = False

    def _pivot(self, r: int, q: int, u: np.ndarray, theta: float) -> None:
        self.iterations += 1
        self.xB -= theta * u
        self.xB[r] = theta
        row = self.Binv[r] / u[r]
        u = u.copy()
        u[r] = 0.0
        nz = np.flatnonzero(u)
        if nz.size:
            self.Binv[nz] -= u[nz, None] * row
        self.Binv[r] = row
        self.basis[r] = q
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self._refactor()
        self.xB[np.abs(self.xB) < 1e-13] = 0.0


def _try_warm(std: _Standard, warm: Sequence, tol: float) -> list[int] | None:
    if warm is None:
        return None
    basis = []
    used_rows = set()
    for key in warm:
        idx = std.key_index.get(key)
        if idx is None:
            continue
        basis.append(idx)
    # rows added since the warm basis was recorded (always the last original
    # rows) get their own slack or artificial
    order = list(range(std.n_orig_rows - 1, -1, -1)) + list(range(std.n_orig_rows, std.m))
    for r in order:
        if len(basis) >= std.m:
            break
        if std.init_basis[r] not in basis:
            basis.append(std.init_basis[r])
    if len(basis) != std.m or len(set(basis)) != std.m:
        return None
    B = std.M[:, basis]
    try:
        if np.linalg.cond(B) > 1e12:
            return None
        xB = np.linalg.solve(B, std.rhs)
    except np.linalg.LinAlgError:
        return None
    if np.any(xB < -1e-9):
        return None
    if np.any(std.art_mask[basis] & (np.abs(xB) > 1e-9)):
        return None
    return basis


def solve(lp: LinearProgram, tol: float = 1e-9, warm_basis: Sequence | None = None,
          max_iter: int | None = None) -> LpSolution:
    """Solve ``lp`` to optimality, or report infeasible / unbounded."""
    std = _Standard(lp)
    if max_iter is None:
        max_iter = 50 * (std.m + std.M.shape[1]) + 1000
    n = std.n

    def result(status, simplex=None):
        x = np.full(n, np.nan)
        duals = np.full(lp.n_rows, np.nan)
        obj = dual_obj = math.nan
        basis_keys = []
        its = 0
        if simplex is not None:
            its = simplex.iterations
            basis_keys = [std.keys[i] for i in simplex.basis]
            if status == "optimal":
                z = np.zeros(std.M.shape[1])
                z[simplex.basis] = simplex.xB
                x = z[:n] + lp.lb
                y = std.cost[simplex.basis] @ simplex.Binv
                y_orig = y * std.flip
                duals = y_orig[: lp.n_rows]
                obj = float(lp.c @ x) if n else 0.0
                dual_obj = float(y_orig @ std.row_rhs_shifted) + std.shift_obj
        return LpSolution(status, x, duals, obj, dual_obj, basis_keys, its,
                          list(lp.col_labels), list(lp.row_labels))

    if std.m == 0:
        if n and np.any(lp.c < -tol):
            return result("unbounded")
        x = lp.lb.copy()
        return LpSolution("optimal", x, np.zeros(0), float(lp.c @ x) if n else 0.0,
                          float(lp.c @ x) if n else 0.0, [], 0, list(lp.col_labels), [])

    basis = _try_warm(std, warm_basis, tol)
    attempts = ([basis] if basis is not None else []) + [None, None]
    for k, start in enumerate(attempts):
        try:
            status, simplex = _run_phases(std, start, tol, max_iter, bland=k == len(attempts) - 1)
        except _SingularBasis:
            continue
        return result(status, simplex)
    raise np.linalg.LinAlgError("simplex basis became singular; the LP is numerically ill-conditioned")


def _run_phases(std: _Standard, basis, tol: float, max_iter: int, bland: bool):
    if basis is not None:
        simplex = _Simplex(std, basis, tol, max_iter)
    else:
        simplex = _Simplex(std, std.init_basis, tol, max_iter)
        simplex.bland = bland
        if std.art_mask.any():
            phase1 = std.art_mask.astype(float)
            status = simplex.run(phase1, allow_art=True)
            if status == "iteration_limit":
                return status, simplex
            simplex._refactor()
            infeas = float(phase1[simplex.basis] @ simplex.xB)
            if infeas > 1e-7 * max(1.0, float(np.abs(std.rhs).max())):
                return "infeasible", simplex
    status = simplex.run(std.cost, allow_art=False)
    if status == "optimal":
        simplex._refactor()
    return status, simplex


def reduced_costs(lp: LinearProgram, duals: np.ndarray) -> np.ndarray:
    return lp.c - duals @ lp.A


# ---------------------------------------------------------------------------
# sparse programs

class SparseProgram:
    """Row-wise sparse LP for models too large for the dense simplex; solved
    with HiGHS.  Rows and columns carry hashable labels like LinearProgram."""

    def __init__(self):
        self.col_labels: list = []
        self.c: list[float] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.row_labels: list = []
        self.senses: list[str] = []
        self.b: list[float] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._bulk: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self._col_pos: dict = {}

    @property
    def n_rows(self) -> int:
        return len(self.row_labels)

    @property
    def n_cols(self) -> int:
        return len(self.col_labels)

    def add_column(self, label, cost: float, lb: float = 0.0, ub: float = math.inf) -> int:
        if label in self._col_pos:
            raise ValueError(f"duplicate column {label!r}")
        self._col_pos[label] = len(self.col_labels)
        self.col_labels.append(label)
        self.c.append(float(cost))
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        return self._col_pos[label]

    def col_index(self, label) -> int:
        return self._col_pos[label]

    def add_entries(self, rows, cols, vals) -> None:
        """Bulk coefficients by row and column index (duplicates are summed)."""
        rows, cols = np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape)
        self._bulk.append((rows, cols, vals))

    def add_row(self, label, sense: str, rhs: float, coeffs) -> int:
        """``coeffs``: mapping or iterable of (column label, value)."""
        if sense not in (LE, EQ, GE):
            raise ValueError(f"bad sense {sense!r}")
        r = len(self.row_labels)
        self.row_labels.append(label)
        self.senses.append(sense)
        self.b.append(float(rhs))
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        for lab, v in items:
            if v:
                self._rows.append(r)
                self._cols.append(self._col_pos[lab])
                self._vals.append(float(v))
        return r

    def matrix(self) -> sparse.csr_matrix:
        rows = np.concatenate([np.asarray(self._rows, dtype=np.int64)] + [r for r, _, _ in self._bulk])
        cols = np.concatenate([np.asarray(self._cols, dtype=np.int64)] + [c for _, c, _ in self._bulk])
        vals = np.concatenate([np.asarray(self._vals, dtype=float)] + [v for _, _, v in self._bulk])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_cols))

    def to_dense(self) -> LinearProgram:
        return LinearProgram.from_dense(self.c, self.matrix().toarray(), self.senses, self.b,
                                        self.row_labels, self.col_labels, self.lb, self.ub)


_HIGHS_STATUS = {0: "optimal", 1: "iteration_limit", 2: "infeasible", 3: "unbounded"}


def solve_sparse(sp: SparseProgram) -> LpSolution:
    """Solve with the HiGHS dual simplex.  Duals follow the same sign
    convention as :func:`solve`."""
    A = sp.matrix()
    senses = np.array(sp.senses)
    b = np.array(sp.b, dtype=float)
    le, ge, eq = (np.flatnonzero(senses == s) for s in (LE, GE, EQ))
    ineq = np.concatenate([le, ge])
    sign = np.concatenate([np.ones(le.size), -np.ones(ge.size)])
    A_ub = sparse.diags(sign) @ A[ineq] if ineq.size else None
    b_ub = sign * b[ineq] if ineq.size else None
    A_eq = A[eq] if eq.size else None
    b_eq = b[eq] if eq.size else None
    ub = [None if math.isinf(u) else u for u in sp.ub]
    res = linprog(np.array(sp.c), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=list(zip(sp.lb, ub)), method="highs-ds")
    status = _HIGHS_STATUS.get(res.status)
    if status is None:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    n, m = sp.n_cols, sp.n_rows
    if status != "optimal":
        return LpSolution(status, np.full(n, np.nan), np.full(m, np.nan), math.nan, math.nan,
                          [], int(res.nit), list(sp.col_labels), list(sp.row_labels))
    duals = np.zeros(m)
    if ineq.size:
        duals[ineq] = sign * res.ineqlin.marginals
    if eq.size:
        duals[eq] = res.eqlin.marginals
    lb = np.array(sp.lb)
    ubv = np.array(sp.ub)
    dual_obj = float(duals @ b)
    dual_obj += float(res.lower.marginals @ lb)
    finite = np.isfinite(ubv)
    dual_obj += float(res.upper.marginals[finite] @ ubv[finite])
    return LpSolution(status, np.asarray(res.x), duals, float(res.fun), dual_obj, [], int(res.nit),
                      list(sp.col_labels), list(sp.row_labels))


# ---------------------------------------------------------------------------
# column generation

@dataclass
class Column:
    """A candidate column.  ``coeffs`` is keyed by row label and may mention
    rows that are only added later as lazy constraints."""

    label: Hashable
    cost: float
    coeffs: dict
    payload: Any = None


@dataclass
class PricingResult:
    columns: list
    # Sum over convexity blocks of the most negative reduced cost (<= 0), when
    # the pricer can certify it; used for the Lagrangian lower bound.
    bound_gap: float | None = None


@dataclass(frozen=True)
class LazyRow:
    label: Hashable
    sense: str
    rhs: float


@dataclass
class ColumnGenerationResult:
    status: str  # optimal | infeasible | unbounded | cap
    solution: LpSolution
    master: LinearProgram
    pool: dict  # label -> Column
    iterations: int
    bounds: tuple[float, float]  # (lower, upper) on the full LP optimum

    @property
    def objective(self) -> float:
        return self.solution.objective

    def active_columns(self, tol: float = 1e-12) -> list[tuple[Column, float]]:
        out = []
        for label, val in zip(self.solution.col_labels, self.solution.x):
            if val > tol and label in self.pool:
                out.append((self.pool[label], float(val)))
        return out


def column_generation(master: LinearProgram, pricer: Callable[[dict], Any], tol: float = 1e-9,
                      max_iters: int = 500, separator: Callable | None = None,
                      initial_columns: Iterable[Column] = (),
                      coeff_of: Callable[[Column, Hashable], float] | None = None) -> ColumnGenerationResult:
    """Solve an LP with exponentially many columns (and optionally lazily added rows).

    ``pricer(duals_by_row_label)`` returns columns with negative reduced cost
    (a list or a :class:`PricingResult`); an empty answer certifies optimality.
    ``separator(values_by_col_label, pool)`` returns violated :class:`LazyRow`
    objects.  A pooled column's coefficient in a lazy row is
    ``coeff_of(column, row_label)``, by default ``column.coeffs.get(label, 0)``.
    """
    if coeff_of is None:
        def coeff_of(col, label):
            return col.coeffs.get(label, 0.0)
    master = master.copy()
    pool: dict = {}
    lazy_labels: list = []

    def add(cols):
        fresh = []
        for c in cols:
            if c.label in pool or master.has_col(c.label) or any(f.label == c.label for f in fresh):
                continue
            fresh.append(c)
        entries = []
        for c in fresh:
            pool[c.label] = c
            coeffs = dict(c.coeffs)
            for lab in lazy_labels:
                v = coeff_of(c, lab)
                if v:
                    coeffs[lab] = v
            entries.append((c.label, c.cost, coeffs))
        master.add_columns(entries)
        return len(fresh)

    add(list(initial_columns))
    basis = None
    lower = -math.inf
    sol = None
    for it in range(1, max_iters + 1):
        sol = solve(master, tol, warm_basis=basis)
        if sol.status != "optimal":
            return ColumnGenerationResult(sol.status, sol, master, pool, it, (math.nan, math.nan))
        basis = sol.basis
        priced = pricer(sol.duals_by_label())
        if isinstance(priced, PricingResult):
            cols, gap = priced.columns, priced.bound_gap
        else:
            cols, gap = list(priced or []), None
        if gap is not None:
            lower = max(lower, sol.objective + min(gap, 0.0))
        if cols and add(cols):
            continue
        if separator is not None:
            rows = [r for r in separator(sol.values_by_label(), pool) if not master.has_row(r.label)]
            if rows:
                for row in rows:
                    coeffs = {}
                    for lab, col in pool.items():
                        v = coeff_of(col, row.label)
                        if v:
                            coeffs[lab] = v
                    master.add_row(row.label, row.sense, row.rhs, coeffs)
                    lazy_labels.append(row.label)
                basis = None
                continue
        return ColumnGenerationResult("optimal", sol, master, pool, it, (sol.objective, sol.objective))
    return ColumnGenerationResult("cap", sol, master, pool, max_iters, (lower, sol.objective))


# ---------------------------------------------------------------------------
# matchings

def max_weight_bipartite_matching(weights, tol: float = 1e-12) -> tuple[list[tuple[int, int]], float]:
    """Maximum-weight matching where vertices may stay unmatched.

    Ties are broken towards the lexicographically smallest pair list: pairs
    are fixed greedily in (row, col) order whenever an optimal matching
    containing all fixed pairs still exists.
    """
    W = np.asarray(weights, dtype=float)
    if W.size == 0:
        return [], 0.0
    P = np.where(W > 0, W, 0.0)

    def best(rows, cols):
        if not rows or not cols:
            return 0.0
        sub = P[np.ix_(rows, cols)]
        r, c = linear_sum_assignment(sub, maximize=True)
        return float(sub[r, c].sum())

    rows = list(range(W.shape[0]))
    cols = list(range(W.shape[1]))
    target = best(rows, cols)
    scale = tol * max(1.0, abs(target))
    fixed: list[tuple[int, int]] = []
    fixed_weight = 0.0
    for i in range(W.shape[0]):
        for j in range(W.shape[1]):
            if P[i, j] <= 0 or i not in rows or j not in cols:
                continue
            r2 = [x for x in rows if x != i]
            c2 = [x for x in cols if x != j]
            if fixed_weight + P[i, j] + best(r2, c2) >= target - scale:
                fixed.append((i, j))
                fixed_weight += P[i, j]
                rows, cols = r2, c2
    return fixed, float(sum(W[i, j] for i, j in fixed))


def perfect_matching_decomposition(left, right, edge_weights: dict, total: float,
                                   tol: float = 1e-9) -> list[tuple[dict, float]]:
    """Write a bipartite edge weighting as a combination of left-perfect matchings.

    Every left vertex must have weighted degree ``total`` and every right
    vertex at most ``total``.  Returns ``[(matching, coefficient), ...]``
    where each matching maps every left vertex to a right vertex, the
    coefficients sum to ``total``, and summing coefficients of matchings
    using an edge recovers its weight.
    """
    left, right = list(left), list(right)
    li = {a: k for k, a in enumerate(left)}
    ri = {b: k for k, b in enumerate(right)}
    nA, nB = len(left), len(right)
    if nA > nB:
        raise ValueError("more left vertices than right vertices")
    X = np.zeros((nB, nB))
    for (a, b), w in edge_weights.items():
        X[li[a], ri[b]] += w / total
    row_sums = X[:nA].sum(axis=1)
    col_sums = X[:nA].sum(axis=0)
    if np.any(np.abs(row_sums - 1) > tol):
        raise ValueError("left vertex degree differs from the total")
    if np.any(col_sums > 1 + tol):
        raise ValueError("right vertex degree exceeds the total")
    # dummy rows absorb the right-side slack (north-west corner fill) so the
    # matrix becomes doubly stochastic
    slack = np.clip(1 - col_sums, 0, None)
    col = 0
    for r in range(nA, nB):
        need = 1.0
        while need > tol and col < nB:
            take = min(need, slack[col])
            X[r, col] += take
            slack[col] -= take
            need -= take
            if slack[col] <= tol:
                col += 1
    X[X < tol * 1e-3] = 0.0
    merged: dict[tuple, float] = {}
    order: list[tuple] = []
    remaining = 1.0
    for _ in range(nB * nB + 1):
        if remaining <= tol:
            break
        support = X > tol * 1e-3
        cost = np.where(support, 0.0, 1.0)
        r, c = linear_sum_assignment(cost)
        if cost[r, c].sum() > 0:
            break  # numerical residue only
        lam = float(X[r, c].min())
        X[r, c] -= lam
        X[X < tol * 1e-3] = 0.0
        remaining -= lam
        key = tuple(int(c[k]) for k in range(nA))
        if key not in merged:
            order.append(key)
            merged[key] = 0.0
        merged[key] += lam
    return [({left[k]: right[key[k]] for k in range(nA)}, merged[key] * total) for key in order]
