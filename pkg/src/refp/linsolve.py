"""Dense two-phase simplex for small linear programs.

Problems are stated as ``maximize c.x`` subject to rows ``a.x (<=|>=|=) b`` and
per-variable lower bounds. Bland's rule (lowest-index entering and leaving
variables) keeps the method finite and makes the returned vertex a
deterministic function of the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

EPS = 1e-7
_PIVOT_EPS = 1e-9

LE, GE, EQ = "<=", ">=", "="


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[float, ...]
    relation: str
    bound: float


@dataclass
class LpProblem:
    objective: Sequence[float]
    constraints: list[Constraint] = field(default_factory=list)
    lower_bounds: Optional[Sequence[float]] = None

    def __post_init__(self):
        self.objective = tuple(float(c) for c in self.objective)
        k = len(self.objective)
        if self.lower_bounds is None:
            self.lower_bounds = (0.0,) * k
        self.lower_bounds = tuple(float(v) for v in self.lower_bounds)
        if len(self.lower_bounds) != k:
            raise ValueError("lower_bounds arity differs from objective")
        if not np.all(np.isfinite(self.lower_bounds)):
            raise ValueError("lower bounds must be finite")
        for row in self.constraints:
            if len(row.coeffs) != k:
                raise ValueError(f"constraint arity {len(row.coeffs)} differs from objective arity {k}")
            if row.relation not in (LE, GE, EQ):
                raise ValueError(f"unknown relation {row.relation!r}")
            if not np.isfinite(row.bound):
                raise ValueError("constraint bounds must be finite")

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def add(self, coeffs, relation: str, bound: float) -> None:
        """Append a constraint row (re-validated on next construction only)."""
        coeffs = tuple(float(c) for c in coeffs)
        if len(coeffs) != self.num_vars:
            raise ValueError("constraint arity differs from objective")
        if relation not in (LE, GE, EQ):
            raise ValueError(f"unknown relation {relation!r}")
        self.constraints.append(Constraint(coeffs, relation, float(bound)))


@dataclass(frozen=True)
class LpSolution:
    status: Status
    x: np.ndarray
    objective_value: float

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    nz = np.nonzero(np.abs(col_vals) > 0)[0]
    if nz.size:
        T[nz] -= np.outer(col_vals[nz], T[row])
    basis[row] = col


def _run_simplex(T: np.ndarray, basis: list[int], allowed: np.ndarray) -> bool:
    """Maximise the objective stored in the last row as reduced costs.

    The last row holds ``-c`` (so a negative entry means improvable). Returns
    ``False`` on unboundedness. ``allowed`` masks columns eligible to enter.
    """
    rows = T.shape[0] - 1
    while True:
        z = T[-1, :-1]
        candidates = np.nonzero((z < -_PIVOT_EPS) & allowed)[0]
        if candidates.size == 0:
            return True
        col = int(candidates[0])
        column = T[:rows, col]
        pos = np.nonzero(column > _PIVOT_EPS)[0]
        if pos.size == 0:
            return False
        ratios = T[pos, -1] / column[pos]
        best = ratios.min()
        tied = pos[ratios <= best + _PIVOT_EPS * max(1.0, abs(best))]
        # Bland: among tied rows leave the one whose basic variable has lowest index
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(T, basis, row, col)


def solve(problem: LpProblem) -> LpSolution:
    k = problem.num_vars
    lb = np.array(problem.lower_bounds, dtype=float)
    c = np.array(problem.objective, dtype=float)

    # shift x = lb + y so every variable is y >= 0
    rows_a, rows_b, rels = [], [], []
    for con in problem.constraints:
        a = np.array(con.coeffs, dtype=float)
        b = con.bound - float(a @ lb)
        rel = con.relation
        if b < 0:
            a, b = -a, -b
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        rows_a.append(a)
        rows_b.append(b)
        rels.append(rel)

    r = len(rows_a)
    n_slack = sum(1 for rel in rels if rel != EQ)
    n_art = sum(1 for rel in rels if rel != LE)
    width = k + n_slack + n_art
    T = np.zeros((r + 1, width + 1))
    basis: list[int] = [0] * r
    art_cols = []
    s_idx, a_idx = k, k + n_slack
    for row, (a, b, rel) in enumerate(zip(rows_a, rows_b, rels)):
        T[row, :k] = a
        T[row, -1] = b
        if rel == LE:
            T[row, s_idx] = 1.0
            basis[row] = s_idx
            s_idx += 1
        else:
            if rel == GE:
                T[row, s_idx] = -1.0
                s_idx += 1
            T[row, a_idx] = 1.0
            basis[row] = a_idx
            art_cols.append(a_idx)
            a_idx += 1

    allowed = np.ones(width, dtype=bool)
    if art_cols:
        # phase one: maximise -sum(artificials)
        T[-1, :] = 0.0
        for row in range(r):
            if basis[row] >= k + n_slack:
                T[-1, :] -= T[row, :]
        for col in art_cols:
            T[-1, col] = 0.0
        _run_simplex(T, basis, allowed)
        if -T[-1, -1] > EPS * max(1.0, np.abs(rows_b).max(initial=0.0)):
            return LpSolution(Status.INFEASIBLE, np.full(k, np.nan), float("nan"))
        # drive remaining artificials out of the basis
        keep = []
        for row in range(r):
            if basis[row] >= k + n_slack:
                nonart = np.nonzero(np.abs(T[row, : k + n_slack]) > _PIVOT_EPS)[0]
                if nonart.size:
                    _pivot(T, basis, row, int(nonart[0]))
                    keep.append(row)
                # otherwise the row is redundant and is dropped
            else:
                keep.append(row)
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[row] for row in keep]
        allowed[k + n_slack :] = False

    # phase two objective row: -c in reduced form
    T[-1, :] = 0.0
    T[-1, :k] = -c
    for row, bcol in enumerate(basis):
        if T[-1, bcol] != 0.0:
            T[-1, :] -= T[-1, bcol] * T[row, :]
    if not _run_simplex(T, basis, allowed):
        return LpSolution(Status.UNBOUNDED, np.full(k, np.nan), float("inf"))

    y = np.zeros(width)
    for row, bcol in enumerate(basis):
        y[bcol] = T[row, -1]
    x = lb + y[:k]
    # clean tiny negatives produced by round-off
    x = np.where(np.abs(x - lb) < _PIVOT_EPS, lb, x)
    return LpSolution(Status.OPTIMAL, x, float(c @ x))


def max_violation(problem: LpProblem, x: np.ndarray) -> float:
    """Largest constraint or bound violation of ``x`` (0 when feasible)."""
    worst = float(np.max(np.array(problem.lower_bounds) - x, initial=0.0))
    for con in problem.constraints:
        lhs = float(np.dot(con.coeffs, x))
        if con.relation == LE:
            worst = max(worst, lhs - con.bound)
        elif con.relation == GE:
            worst = max(worst, con.bound - lhs)
        else:
            worst = max(worst, abs(lhs - con.bound))
    return worst
