"""Self-contained dense simplex for inequality-form linear programs.

Problems are stated as: minimize c.y subject to A y <= b with y free.  The
solver runs the two-phase tableau simplex on the dual equality form
(min b.mu, A^T mu = -c, mu >= 0), which keeps the tableau skinny for the
Fermat-Weber programs here (few variables, many rows).  The primal solution
is recovered from the simplex multipliers read off the artificial columns.

Two arithmetic modes share one code path: float64 with 1e-9 tolerances, and
exact Fraction arithmetic (object arrays) with zero tolerance.  Pivoting is
deterministic: largest-violation entering with lowest-index tie breaks,
switching permanently to Bland's rule after a run of degenerate pivots.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

FLOAT_TOL = 1e-9
STALL_SWITCH = 64
OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED_OR_INFEASIBLE = "unbounded_or_infeasible"


@dataclass
class LinearProgram:
    """minimize c.y  subject to  A y <= b, with every y_i free."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.A.ndim != 2:
            raise ValueError("A must be a matrix")
        rows, cols = self.A.shape
        if len(self.c) != cols or len(self.b) != rows:
            raise ValueError("inconsistent LP dimensions")
        if cols < 1:
            raise ValueError("need at least one variable")


@dataclass
class LPResult:
    status: str
    y: np.ndarray | None
    value: object | None


def _fraction_array(a) -> np.ndarray:
    arr = np.asarray(a)
    out = np.empty(arr.shape, dtype=object)
    flat = out.reshape(-1)
    for i, v in enumerate(np.asarray(arr).reshape(-1)):
        flat[i] = v if isinstance(v, Fraction) else Fraction(v)
    return out


class _Tableau:
    def __init__(self, lp: LinearProgram, exact: bool):
        self.exact = exact
        self.tol = Fraction(0) if exact else FLOAT_TOL
        if exact:
            a_t = _fraction_array(lp.A).T.copy()
            rhs = -_fraction_array(lp.c)
            self.cost_mu = _fraction_array(lp.b)
            self.zero = Fraction(0)
            self.one = Fraction(1)
        else:
            a_t = np.asarray(lp.A, dtype=float).T.copy()
            rhs = -np.asarray(lp.c, dtype=float)
            self.cost_mu = np.asarray(lp.b, dtype=float)
            self.zero = 0.0
            self.one = 1.0
        self.m, self.n_mu = a_t.shape
        self.signs = []
        for j in range(self.m):
            if rhs[j] < self.zero:
                a_t[j] = -a_t[j]
                rhs[j] = -rhs[j]
                self.signs.append(-1)
            else:
                self.signs.append(1)
        total = self.n_mu + self.m + 1
        dtype = object if exact else float
        t = np.zeros((self.m + 1, total), dtype=dtype)
        if exact:
            t[...] = Fraction(0)
        t[: self.m, : self.n_mu] = a_t
        for j in range(self.m):
            t[j, self.n_mu + j] = self.one
        t[: self.m, -1] = rhs
        self.t = t
        self.basis = [self.n_mu + j for j in range(self.m)]
        self._art_rows = set(range(self.m))
        self.bland = False
        self.stall = 0

    def _set_cost_row(self, costs):
        t = self.t
        row = t[self.m]
        row[:] = self.zero
        row[: len(costs)] = costs
        for i, var in enumerate(self.basis):
            cb = costs[var] if var < len(costs) else self.zero
            if cb != self.zero:
                row -= cb * t[i]

    def _pivot(self, row: int, col: int):
        t = self.t
        piv = t[row, col]
        t[row] = t[row] / piv
        column = t[:, col].copy()
        column[row] = self.zero
        t -= np.outer(column, t[row])
        t[:, col] = self.zero
        t[row, col] = self.one
        self.basis[row] = col
        self._art_rows.discard(row)

    def _entering(self):
        if self.n_mu == 0:
            return None
        rc = self.t[self.m, : self.n_mu]
        if self.bland:
            hits = np.flatnonzero(rc < -self.tol)
            return int(hits[0]) if hits.size else None
        j = int(np.argmin(rc))
        return j if rc[j] < -self.tol else None

    def _leaving(self, col: int):
        t = self.t
        coeffs = t[: self.m, col]
        eligible = np.flatnonzero(coeffs > self.tol)
        if eligible.size == 0:
            return None
        ratios = t[eligible, -1] / coeffs[eligible]
        best = ratios.min()
        ties = eligible[np.flatnonzero(ratios == best)]
        if self.bland and ties.size > 1:
            return int(min(ties, key=lambda i: self.basis[i]))
        return int(ties[0])

    def _iterate(self, drive_out_artificials: bool):
        max_iter = 2000 + 200 * (self.m + self.n_mu)
        for _ in range(max_iter):
            col = self._entering()
            if col is None:
                return OPTIMAL
            if drive_out_artificials and self._art_rows:
                forced = None
                for i in sorted(self._art_rows):
                    coeff = self.t[i, col]
                    if coeff > self.tol or coeff < -self.tol:
                        forced = i
                        break
                if forced is not None:
                    self._pivot(forced, col)
                    continue
            row = self._leaving(col)
            if row is None:
                return "unbounded"
            degenerate = self.t[row, -1] <= self.tol
            self._pivot(row, col)
            if degenerate:
                self.stall += 1
                if self.stall > STALL_SWITCH:
                    self.bland = True
            else:
                self.stall = 0
        raise RuntimeError("simplex iteration limit exceeded")

    def phase1(self) -> bool:
        costs = np.zeros(self.n_mu + self.m, dtype=object if self.exact else float)
        if self.exact:
            costs[...] = Fraction(0)
        costs[self.n_mu :] = self.one
        self._set_cost_row(costs)
        status = self._iterate(drive_out_artificials=False)
        if status != OPTIMAL:
            raise RuntimeError("phase 1 cannot be unbounded")
        infeasibility = -self.t[self.m, -1]
        return infeasibility <= (self.tol if not self.exact else self.zero)

    def phase2(self):
        costs = np.zeros(self.n_mu + self.m, dtype=object if self.exact else float)
        if self.exact:
            costs[...] = Fraction(0)
        costs[: self.n_mu] = self.cost_mu
        self._set_cost_row(costs)
        self.stall = 0
        return self._iterate(drive_out_artificials=True)

    def primal_solution(self):
        multipliers = -self.t[self.m, self.n_mu : self.n_mu + self.m]
        y = np.array(
            [s * pi for s, pi in zip(self.signs, multipliers)],
            dtype=object if self.exact else float,
        )
        dual_value = -self.t[self.m, -1]
        return y, -dual_value


def solve_inequality_form(lp: LinearProgram, exact: bool = False) -> LPResult:
    """Solve min c.y, A y <= b (y free); status is 'optimal', 'infeasible'
    (primal has no feasible point) or 'unbounded_or_infeasible'."""
    tab = _Tableau(lp, exact)
    if not tab.phase1():
        return LPResult(UNBOUNDED_OR_INFEASIBLE, None, None)
    status = tab.phase2()
    if status != OPTIMAL:
        return LPResult(INFEASIBLE, None, None)
    y, value = tab.primal_solution()
    return LPResult(OPTIMAL, y, value)
