"""Dense two-phase simplex solver.

Problems here are tiny (tens to a few hundred variables), so the solver keeps
a full tableau in a numpy array and favours determinism over speed: the same
input always produces the same pivot sequence and the same vertex.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

LE, EQ, GE = "<=", "==", ">="
_SENSES = {LE, EQ, GE, "<", "=", ">"}

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ILL_CONDITIONED = "ill-conditioned"

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-8


@dataclass(frozen=True)
class LinearProgram:
    """``min`` (or ``max``) ``c @ x`` subject to ``A[k] @ x  senses[k]  b[k]`` and bounds.

    ``bounds`` holds one ``(lower, upper)`` pair per variable; ``None`` or an
    infinite value means unbounded on that side.  Default bounds are ``(0, inf)``.
    """

    c: np.ndarray
    A: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray
    bounds: tuple[tuple[float, float], ...] | None = None
    maximize: bool = False

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = c.size
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[1] != n or A.shape[0] != b.size:
            raise ValueError(f"inconsistent LP dimensions: c={n}, A={A.shape}, b={b.size}")
        if len(self.senses) != b.size:
            raise ValueError("one sense per constraint row is required")
        senses = tuple(_normalize_sense(s) for s in self.senses)
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("LP coefficients must be finite")
        bounds = self.bounds
        if bounds is None:
            bounds = tuple((0.0, math.inf) for _ in range(n))
        else:
            if len(bounds) != n:
                raise ValueError("one (lower, upper) bound pair per variable is required")
            bounds = tuple(
                (-math.inf if lo is None else float(lo), math.inf if hi is None else float(hi))
                for lo, hi in bounds
            )
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "bounds", bounds)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    iterations: int = 0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class LpError(RuntimeError):
    """Raised by :func:`solve_or_raise` when a program has no optimal solution."""

    def __init__(self, solution: LpSolution):
        super().__init__(f"LP {solution.status}: {solution.message}".rstrip(": "))
        self.solution = solution


def _normalize_sense(s: str) -> str:
    if s not in _SENSES:
        raise ValueError(f"unknown constraint sense {s!r}")
    return {"<": LE, "=": EQ, ">": GE}.get(s, s)


@dataclass
class _Standard:
    """``min c@y, M@y = r, y >= 0`` plus the map back to the user's variables."""

    M: np.ndarray
    r: np.ndarray
    cost: np.ndarray
    offset: float
    # x = shift + T @ y
    T: np.ndarray
    shift: np.ndarray
    row_sign: np.ndarray  # sign applied to original row k (standard row k)
    n_orig_rows: int
    slack_cols: list[int] = field(default_factory=list)


def _standardize(lp: LinearProgram) -> _Standard:
    n = lp.n_vars
    sign = -1.0 if lp.maximize else 1.0
    cols: list[np.ndarray] = []  # column of T per standard var
    shift = np.zeros(n)
    extra_rows: list[tuple[np.ndarray, float]] = []  # finite upper bounds become <= rows
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo > hi:
            raise ValueError(f"variable {j}: lower bound {lo} exceeds upper bound {hi}")
        if math.isfinite(lo):
            shift[j] = lo
            cols.append(_unit(n, j, 1.0))
            if math.isfinite(hi):
                extra_rows.append((np.array([len(cols) - 1]), hi - lo))
        elif math.isfinite(hi):
            shift[j] = hi
            cols.append(_unit(n, j, -1.0))
        else:
            cols.append(_unit(n, j, 1.0))
            cols.append(_unit(n, j, -1.0))
    T = np.column_stack(cols) if cols else np.zeros((n, 0))
    n_struct = T.shape[1]

    A = lp.A @ T
    b = lp.b - lp.A @ shift
    senses = list(lp.senses)
    rows = [A[k] for k in range(A.shape[0])]
    rhs = list(b)
    for idx, ub in extra_rows:
        row = np.zeros(n_struct)
        row[idx] = 1.0
        rows.append(row)
        rhs.append(ub)
        senses.append(LE)

    m = len(rows)
    n_slack = sum(1 for s in senses if s != EQ)
    M = np.zeros((m, n_struct + n_slack))
    r = np.zeros(m)
    row_sign = np.ones(m)
    slack_cols = []
    k_slack = n_struct
    for k in range(m):
        M[k, :n_struct] = rows[k]
        r[k] = rhs[k]
        if senses[k] == LE:
            M[k, k_slack] = 1.0
            slack_cols.append(k_slack)
            k_slack += 1
        elif senses[k] == GE:
            M[k, k_slack] = -1.0
            slack_cols.append(k_slack)
            k_slack += 1
        if r[k] < 0:
            M[k] *= -1.0
            r[k] *= -1.0
            row_sign[k] = -1.0

    cost = np.zeros(M.shape[1])
    cost[:n_struct] = sign * (lp.c @ T)
    offset = sign * float(lp.c @ shift)
    return _Standard(M, r, cost, offset, T, shift, row_sign, lp.n_rows, slack_cols)


def _unit(n: int, j: int, v: float) -> np.ndarray:
    e = np.zeros(n)
    e[j] = v
    return e


class _Tableau:
    def __init__(self, M: np.ndarray, r: np.ndarray, basis: list[int], pivot_rule: str, max_iter: int):
        self.T = np.column_stack([M, r]).astype(float)
        self.basis = list(basis)
        self.rows = list(range(M.shape[0]))  # standard-form row behind each tableau row
        self.pivot_rule = pivot_rule
        self.max_iter = max_iter
        self.iterations = 0

    def optimize(self, cost: np.ndarray, allowed: np.ndarray) -> str:
        """Run primal simplex on ``cost`` restricted to columns in ``allowed``."""
        degenerate_run = 0
        use_bland = self.pivot_rule == "bland"
        while True:
            if self.iterations >= self.max_iter:
                return ILL_CONDITIONED
            T = self.T
            reduced = cost - cost[self.basis] @ T[:, :-1]
            reduced[~allowed] = 0.0
            reduced[self.basis] = 0.0
            candidates = np.flatnonzero(reduced < -1e-9)
            if candidates.size == 0:
                return OPTIMAL
            if use_bland:
                enter = int(candidates[0])
            else:
                # most negative reduced cost, lowest index on ties
                enter = int(candidates[np.argmin(reduced[candidates])])
            col = T[:, enter]
            pos = np.flatnonzero(col > PIVOT_TOL)
            if pos.size == 0:
                return UNBOUNDED
            ratios = T[pos, -1] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
            leave_row = int(min(ties, key=lambda k: self.basis[k]))
            if best <= 1e-12:
                degenerate_run += 1
                if degenerate_run > 50:
                    use_bland = True
            else:
                degenerate_run = 0
            self.pivot(leave_row, enter)
            self.iterations += 1

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        for k in np.flatnonzero(T[:, col] != 0.0):
            if k != row:
                T[k] -= T[k, col] * T[row]
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col

    def drop_row(self, row: int) -> None:
        self.T = np.delete(self.T, row, axis=0)
        del self.basis[row]
        del self.rows[row]


def solve(lp: LinearProgram, pivot_rule: str = "dantzig", max_iter: int = 50_000) -> LpSolution:
    """Solve ``lp`` with a two-phase dense simplex.

    ``pivot_rule`` is ``"dantzig"`` (most negative reduced cost, switching to
    Bland's rule after a long run of degenerate pivots) or ``"bland"``
    throughout.  Row duals are returned in the user's sign convention:
    ``duals[k]`` is the derivative of the optimal objective with respect to
    ``b[k]``.
    """
    if pivot_rule not in ("dantzig", "bland"):
        raise ValueError(f"unknown pivot rule {pivot_rule!r}")
    std = _standardize(lp)
    m, n_std = std.M.shape

    # phase 1: an artificial per row, except rows whose slack can start basic
    basis: list[int] = []
    art_rows: list[int] = []
    for k in range(m):
        slack = next((j for j in std.slack_cols if std.M[k, j] == 1.0), None)
        if slack is not None:
            basis.append(slack)
        else:
            basis.append(n_std + len(art_rows))
            art_rows.append(k)
    n_art = len(art_rows)
    A_art = np.zeros((m, n_art))
    for idx, k in enumerate(art_rows):
        A_art[k, idx] = 1.0
    tab = _Tableau(np.hstack([std.M, A_art]), std.r, basis, pivot_rule, max_iter)
    n_tot = n_std + n_art
    if n_art:
        c1 = np.zeros(n_tot)
        c1[n_std:] = 1.0
        status = tab.optimize(c1, np.ones(n_tot, dtype=bool))
        if status == ILL_CONDITIONED:
            return LpSolution(ILL_CONDITIONED, iterations=tab.iterations, message="iteration limit in phase 1")
        infeas = float(c1[tab.basis] @ tab.T[:, -1])
        if infeas > FEAS_TOL * max(1.0, float(np.abs(std.r).max(initial=0.0))):
            return LpSolution(INFEASIBLE, iterations=tab.iterations, message=f"phase-1 residual {infeas:.3g}")
        _drive_out_artificials(tab, n_std)

    allowed = np.zeros(n_tot, dtype=bool)
    allowed[:n_std] = True
    c2 = np.zeros(n_tot)
    c2[:n_std] = std.cost
    status = tab.optimize(c2, allowed)
    if status != OPTIMAL:
        return LpSolution(status, iterations=tab.iterations)

    y = np.zeros(n_tot)
    for k, j in enumerate(tab.basis):
        y[j] = tab.T[k, -1]
    y_std = np.maximum(y[:n_std], 0.0)
    x = std.shift + std.T @ y_std[: std.T.shape[1]]
    obj_min = float(std.cost @ y_std) + std.offset
    objective = -obj_min if lp.maximize else obj_min

    duals = _row_duals(std, tab)
    sol = LpSolution(OPTIMAL, x=x, objective=objective, duals=duals, iterations=tab.iterations)
    return _verify(lp, sol)


def _drive_out_artificials(tab: _Tableau, n_std: int) -> None:
    k = 0
    while k < len(tab.basis):
        if tab.basis[k] >= n_std:
            nz = np.flatnonzero(np.abs(tab.T[k, :n_std]) > 1e-9)
            if nz.size:
                tab.pivot(k, int(nz[0]))
            else:
                tab.drop_row(k)  # redundant equality
                continue
        k += 1


def _row_duals(std: _Standard, tab: _Tableau) -> np.ndarray:
    m = std.M.shape[0]
    y = np.zeros(m)
    if tab.rows:
        B = std.M[np.ix_(tab.rows, tab.basis)]
        cb = std.cost[tab.basis]
        try:
            y[tab.rows] = np.linalg.solve(B.T, cb)
        except np.linalg.LinAlgError:
            y[tab.rows], *_ = np.linalg.lstsq(B.T, cb, rcond=None)
    return (y * std.row_sign)[: std.n_orig_rows]


def _verify(lp: LinearProgram, sol: LpSolution) -> LpSolution:
    x = sol.x
    scale = 1.0 + float(np.abs(lp.b).max(initial=0.0)) + float(np.abs(lp.A).max(initial=0.0)) * float(np.abs(x).max(initial=0.0))
    tol = FEAS_TOL * scale
    lhs = lp.A @ x
    for k, s in enumerate(lp.senses):
        bad = (s == LE and lhs[k] > lp.b[k] + tol) or (s == GE and lhs[k] < lp.b[k] - tol) or (
            s == EQ and abs(lhs[k] - lp.b[k]) > tol
        )
        if bad:
            return LpSolution(ILL_CONDITIONED, iterations=sol.iterations, message=f"row {k} violated after solve")
    for j, (lo, hi) in enumerate(lp.bounds):
        if x[j] < lo - tol or x[j] > hi + tol:
            return LpSolution(ILL_CONDITIONED, iterations=sol.iterations, message=f"bound {j} violated after solve")
    if lp.maximize and sol.duals is not None:
        sol.duals = -sol.duals
    return sol


def solve_or_raise(lp: LinearProgram, **kwargs) -> LpSolution:
    sol = solve(lp, **kwargs)
    if not sol.ok:
        raise LpError(sol)
    return sol


def build(
    c: Sequence[float],
    rows: Sequence[tuple[Sequence[float], str, float]] = (),
    bounds: Sequence[tuple[float | None, float | None]] | None = None,
    maximize: bool = False,
) -> LinearProgram:
    """Convenience constructor from ``(coefficients, sense, rhs)`` triples."""
    n = len(c)
    A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), n)
    return LinearProgram(
        c=np.asarray(c, dtype=float),
        A=A,
        senses=tuple(r[1] for r in rows),
        b=np.array([r[2] for r in rows], dtype=float),
        bounds=None if bounds is None else tuple(bounds),
        maximize=maximize,
    )
