"""Fermat-Weber points under the three tropical distances, via linear programming.

Each solver minimizes the mean distance from a free point x (last coordinate
pinned to zero to kill the all-ones direction) to the sample.  The symmetric
program introduces per-sample epigraph variables for the max and min of
x - v_i, so every program has n*q or 2*n*q rows; the shared simplex engine
solves them in float or exact rational mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CapacityExceeded
from .matroid import Matroid, is_m_ultrametric
from .projection import project_bergman
from .simplex import OPTIMAL, LinearProgram, solve_inequality_form
from .tropical import (
    TropicalPoint,
    as_vector,
    d_tr,
    fw_objective,
    trop_norm,
)

OBJECTIVE_TOL = 1e-9


@dataclass(frozen=True)
class FWSolution:
    """One deterministic Fermat-Weber optimizer and its objective value."""

    point: TropicalPoint
    objective: object
    metric: str
    certificate: str


def _sample_matrix(S) -> np.ndarray:
    rows = [as_vector(v) for v in S]
    if not rows:
        raise ValueError("sample must be nonempty")
    q = rows[0].shape[0]
    if q < 2:
        raise ValueError("points need at least two coordinates")
    if any(r.shape[0] != q for r in rows):
        raise ValueError("sample points have inconsistent dimensions")
    exact = any(r.dtype == object for r in rows)
    return np.array([list(r) for r in rows], dtype=object if exact else float)


def _zeros(shape, exact):
    arr = np.zeros(shape, dtype=object if exact else float)
    if exact:
        arr[...] = Fraction(0)
    return arr


def _solve(c, A, b, exact):
    result = solve_inequality_form(LinearProgram(c=c, A=A, b=b), exact=exact)
    if result.status != OPTIMAL:
        raise RuntimeError(f"Fermat-Weber LP reported {result.status}; this cannot happen for finite samples")
    return result


def _finish(S, x_free, metric, exact) -> FWSolution:
    one = Fraction(1) if exact else 1.0
    coords = tuple(x_free) + (one * 0,)
    point = TropicalPoint(coords)
    objective = fw_objective(list(S), point, metric)
    return FWSolution(point=point, objective=objective, metric=metric, certificate=OPTIMAL)


def fw_symmetric(S, exact: bool = False) -> FWSolution:
    """Minimizer of the mean symmetric tropical distance to the sample.

    LP variables (x_1..x_{q-1}, M_1..M_n, m_1..m_n) with x_q = 0; rows force
    M_i >= x_j - v_ij and m_i <= x_j - v_ij, and the objective sum(M_i - m_i)
    equals the sum of distances at the optimum.
    """
    V = _sample_matrix(S)
    exact = exact or V.dtype == object
    n, q = V.shape
    nvars = (q - 1) + 2 * n
    c = _zeros(nvars, exact)
    c[q - 1 : q - 1 + n] = Fraction(1) if exact else 1.0
    c[q - 1 + n :] = Fraction(-1) if exact else -1.0
    A = _zeros((2 * n * q, nvars), exact)
    b = _zeros(2 * n * q, exact)
    one = Fraction(1) if exact else 1.0
    row = 0
    for i in range(n):
        for j in range(q):
            # x_j - M_i <= v_ij
            if j < q - 1:
                A[row, j] = one
            A[row, q - 1 + i] = -one
            b[row] = V[i, j]
            # m_i - x_j <= -v_ij
            if j < q - 1:
                A[row + 1, j] = -one
            A[row + 1, q - 1 + n + i] = one
            b[row + 1] = -V[i, j]
            row += 2
    result = _solve(c, A, b, exact)
    return _finish(V, result.y[: q - 1], "sym", exact)


def fw_min_plus(S, exact: bool = False) -> FWSolution:
    """Minimizer of the mean min-plus asymmetric distance to the sample.

    With m_i <= v_ij - x_j for all j, the total distance is
    sum_ij v_ij - n*sum_j x_j - q*sum_i m_i, linear in the variables.
    """
    V = _sample_matrix(S)
    exact = exact or V.dtype == object
    n, q = V.shape
    nvars = (q - 1) + n
    one = Fraction(1) if exact else 1.0
    c = _zeros(nvars, exact)
    c[: q - 1] = -one * n
    c[q - 1 :] = -one * q
    A = _zeros((n * q, nvars), exact)
    b = _zeros(n * q, exact)
    row = 0
    for i in range(n):
        for j in range(q):
            # m_i + x_j <= v_ij
            if j < q - 1:
                A[row, j] = one
            A[row, q - 1 + i] = one
            b[row] = V[i, j]
            row += 1
    result = _solve(c, A, b, exact)
    return _finish(V, result.y[: q - 1], "min_plus", exact)


def fw_max_plus(S, exact: bool = False) -> FWSolution:
    """Minimizer of the mean max-plus asymmetric distance to the sample."""
    V = _sample_matrix(S)
    exact = exact or V.dtype == object
    n, q = V.shape
    nvars = (q - 1) + n
    one = Fraction(1) if exact else 1.0
    c = _zeros(nvars, exact)
    c[: q - 1] = one * n
    c[q - 1 :] = one * q
    A = _zeros((n * q, nvars), exact)
    b = _zeros(n * q, exact)
    row = 0
    for i in range(n):
        for j in range(q):
            # -M_i - x_j <= -v_ij
            if j < q - 1:
                A[row, j] = -one
            A[row, q - 1 + i] = -one
            b[row] = -V[i, j]
            row += 1
    result = _solve(c, A, b, exact)
    return _finish(V, result.y[: q - 1], "max_plus", exact)


_SOLVERS = {"sym": fw_symmetric, "min_plus": fw_min_plus, "max_plus": fw_max_plus}


def fw_point(S, metric: str = "sym", exact: bool = False) -> FWSolution:
    try:
        solver = _SOLVERS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}") from None
    return solver(S, exact=exact)


def fw_m_ultrametric(m: Matroid, S, metric: str = "sym", exact: bool = False) -> FWSolution:
    """Projected Fermat-Weber point: solve in the torus, then project to the fan.

    When the sample already lies in the fan and the metric is symmetric, the
    projected point is itself a Fermat-Weber point, so the objective must not
    move; that postcondition is asserted here.
    """
    sol = fw_point(S, metric=metric, exact=exact)
    projected = project_bergman(m, sol.point)
    objective = fw_objective(list(S), projected, metric)
    if metric == "sym" and all(is_m_ultrametric(m, v) for v in S):
        drift = objective - sol.objective
        if drift > OBJECTIVE_TOL:
            raise RuntimeError(
                f"projection moved the optimal objective by {drift}; "
                "the sample was in the fan so this breaks the median theorem"
            )
    return FWSolution(
        point=TropicalPoint(tuple(projected)),
        objective=objective,
        metric=metric,
        certificate=f"{sol.certificate};projected",
    )


def directional_derivative(S, y, u, tol: float = 1e-9) -> Fraction:
    """One-sided derivative of the symmetric Fermat-Weber function at y along a 0/1 vector.

    Computed combinatorially: each sample contributes +1 when the support of
    u meets argmax(y - v) without covering argmin(y - v), -1 in the opposite
    arrangement, 0 otherwise.  The result is exact as a multiple of 1/n.
    """
    yv = as_vector(y)
    uv = as_vector(u)
    if uv.shape != yv.shape:
        raise ValueError("direction and point must have the same length")
    support = frozenset(int(i) for i in np.flatnonzero(uv != 0))
    if any(c not in (0, 1) for c in uv):
        raise ValueError("direction must be a zero-one vector")
    if not support or len(support) == len(uv):
        raise ValueError("direction must be a proper nonempty 0/1 vector")
    total = 0
    points = [as_vector(v) for v in S]
    if not points:
        raise ValueError("sample must be nonempty")
    for v in points:
        diff = yv - v
        top = diff.max()
        bottom = diff.min()
        argmax = {int(i) for i in np.flatnonzero(top - diff <= tol)}
        argmin = {int(i) for i in np.flatnonzero(diff - bottom <= tol)}
        meets_max = bool(argmax & support)
        covers_min = argmin <= support
        if meets_max and not covers_min:
            total += 1
        elif not meets_max and covers_min:
            total -= 1
    return Fraction(total, len(points))


def fw_set_oracle(S, resolution, padding_tol: float = OBJECTIVE_TOL):
    """Brute-force the symmetric Fermat-Weber set on a canonical grid.

    Returns every grid point whose objective is within padding_tol plus twice
    the grid step of the LP optimum; guarded to q <= 4 and n <= 6.
    """
    V = _sample_matrix(S)
    n, q = V.shape
    if q > 4 or n > 6:
        raise CapacityExceeded("oracle is guarded to q <= 4 and n <= 6")
    V = V.astype(float)
    canon = V - V[:, -1:]
    diameter = max(
        (d_tr(canon[i], canon[j]) for i in range(n) for j in range(i + 1, n)),
        default=0.0,
    )
    step = float(resolution)
    axes = []
    for j in range(q - 1):
        lo = canon[:, j].min() - diameter
        hi = canon[:, j].max() + diameter
        axes.append(np.arange(lo, hi + step / 2, step))
    grids = np.meshgrid(*axes, indexing="ij") if axes else []
    flat = [g.reshape(-1) for g in grids]
    count = flat[0].size if flat else 1
    if count > 5_000_000:
        raise CapacityExceeded(f"grid of {count} points exceeds the oracle budget")
    points = np.zeros((count, q))
    for j, col in enumerate(flat):
        points[:, j] = col
    best = fw_symmetric([row for row in V]).objective
    threshold = best + padding_tol + 2 * step
    kept = []
    chunk = max(1, 2_000_000 // max(1, n * q))
    for start in range(0, count, chunk):
        block = points[start : start + chunk]
        diffs = block[:, None, :] - canon[None, :, :]
        objective = (diffs.max(axis=2) - diffs.min(axis=2)).mean(axis=1)
        kept.extend(TropicalPoint(tuple(p)) for p in block[objective <= threshold])
    return kept


def hausdorff_shift(S, eps) -> float:
    """Scaled Fermat-Weber shift: d_tr between the deterministic LP optimizers
    of S and S+eps, divided by the summed tropical norms of the perturbations."""
    V = [as_vector(v) for v in S]
    E = [as_vector(e) for e in eps]
    if len(V) != len(E):
        raise ValueError("need one perturbation per sample point")
    total = sum(trop_norm(e) for e in E)
    if total == 0:
        raise ValueError("total perturbation has zero tropical norm")
    theta = fw_symmetric(V).point
    theta_eps = fw_symmetric([v + e for v, e in zip(V, E)]).point
    return d_tr(theta, theta_eps) / total
