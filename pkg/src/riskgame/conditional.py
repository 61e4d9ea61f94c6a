"""Interim risk revision: conditional duals, revised levels, conditional evaluation.

A conditional dual ``z`` assigns one weight per own type; lifted to type
profiles it is an ``F_tau``-measurable density.  The revised interim measure of
a type with weight ``z`` maximizes ``E[L Z' | cell]`` over densities ``Z'`` with
unit mean on every cell whose product ``z * Z'`` stays in the ex ante dual set.
For AV@R sources this is AV@R at level ``1 - (1 - alpha) z`` on the cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .game import (
    InformationPartition,
    RandomLoss,
    UnconditionableTypeError,
    restrict_loss,
)
from .lp import EQ, GE, LE, LinearProgram, solve_or_raise
from .risk import (
    DUAL_TOL,
    AVaR,
    EssentialSup,
    Expectation,
    Level,
    PolytopeDual,
    RiskMeasureSpec,
    ambiguity_set,
    avar_of_values,
    cap,
    dual_of_values,
    evaluate,
    evaluate_avar,
    is_dual_feasible,
    optimal_dual,
    spec_name,
)

EXACT_DENOMINATOR = 1 << 20


class InfeasibleConditionalDual(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ConditionalDual:
    owner: str
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if np.any(w < -DUAL_TOL):
            raise InfeasibleConditionalDual(f"conditional dual of {self.owner} has negative weights")
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))

    def lifted(self, partition: InformationPartition) -> np.ndarray:
        return self.weights[partition.cell_of()]

    @classmethod
    def unrevised(cls, partition: InformationPartition) -> ConditionalDual:
        return cls(partition.owner, np.ones(len(partition.cells)))


@dataclass(frozen=True)
class RevisedInterimMeasure:
    owner: str
    own_type: str
    source: RiskMeasureSpec
    weight: float
    level: Level | None  # AV@R level after revision, for AV@R-type sources

    def describe(self) -> str:
        if self.level is None:
            return f"{spec_name(self.source)} revised with z={self.weight:g}"
        return f"AV@R_{format_level(self.level)}"


def format_level(a: Level) -> str:
    if isinstance(a, Fraction) and a.denominator <= 1000:
        return str(a)
    return f"{float(a):.6g}"


def project_dual(Z: np.ndarray, partition: InformationPartition, probs: np.ndarray) -> ConditionalDual:
    """Cell-wise conditional expectation of a density."""
    Z = np.asarray(Z, dtype=float)
    p = np.asarray(probs, dtype=float)
    w = np.empty(len(partition.cells))
    for k, cell in enumerate(partition.cells):
        mass = p[cell].sum()
        if mass <= 0:
            raise UnconditionableTypeError(f"cell {k} of player {partition.owner} has zero mass")
        w[k] = float(p[cell] @ Z[cell]) / mass
    return ConditionalDual(partition.owner, w)


def revised_level(alpha: Level, z: float) -> Level:
    """``1 - (1 - alpha) z``.

    Exact when ``alpha`` is a Fraction and ``z`` is a float with a short
    binary expansion (such as 5/4); other weights give a float level, since
    exact arithmetic on 52-bit denominators is slow and buys nothing.
    """
    if alpha == 1:
        return alpha
    if not 0 <= alpha < 1:
        raise ValueError(f"AVaR level must lie in [0, 1), got {alpha}")
    c = cap(alpha)
    if z < -DUAL_TOL or z > c * (1 + DUAL_TOL):
        raise InfeasibleConditionalDual(f"infeasible conditional dual: z={z} outside [0, {c}]")
    z = min(max(float(z), 0.0), c)
    fz = Fraction(z)
    if isinstance(alpha, Fraction) and fz.denominator <= EXACT_DENOMINATOR:
        out = 1 - (1 - alpha) * fz
        return max(out, Fraction(0))
    return max(1.0 - (1.0 - float(alpha)) * z, 0.0)


def is_conditional_feasible(spec, cond: ConditionalDual, partition: InformationPartition, probs) -> bool:
    return is_dual_feasible(spec, cond.lifted(partition), probs)


def revise(spec: RiskMeasureSpec, cond: ConditionalDual, partition: InformationPartition, type_labels=None) -> list[RevisedInterimMeasure]:
    out = []
    for k, z in enumerate(cond.weights):
        label = type_labels[k] if type_labels is not None else str(k)
        level = None
        if isinstance(spec, AVaR):
            level = revised_level(spec.alpha, z)
        elif isinstance(spec, EssentialSup):
            level = 1
        elif isinstance(spec, Expectation):
            level = 0
        out.append(RevisedInterimMeasure(partition.owner, label, spec, float(z), level))
    return out


# --- evaluation ------------------------------------------------------------------


def conditional_evaluate(
    spec: RiskMeasureSpec,
    cond: ConditionalDual,
    loss: RandomLoss,
    partition: InformationPartition,
    own_type: int,
    method: str = "auto",
) -> float:
    """Revised interim risk of ``loss`` for the owner's type ``own_type``.

    ``method="auto"`` uses closed forms for expectation, AV@R and essential
    supremum sources and the LP otherwise; ``method="lp"`` forces the LP.
    A zero weight on the cell imposes no cap, so the result is the essential
    supremum on the cell.
    """
    z = float(cond.weights[own_type])
    if method == "lp" or isinstance(spec, PolytopeDual) or not isinstance(spec, (AVaR, EssentialSup, Expectation)):
        return _conditional_lp_value(spec, cond, loss, partition, own_type)
    cell_loss = restrict_loss(loss, partition, own_type)
    if isinstance(spec, Expectation):
        if abs(z - 1.0) > DUAL_TOL:
            raise InfeasibleConditionalDual("expectation only admits the unit conditional dual")
        return cell_loss.mean()
    if isinstance(spec, EssentialSup):
        return evaluate_avar(cell_loss, 1)
    return evaluate_avar(cell_loss, revised_level(spec.alpha, z))


def unrevised_evaluate(spec: RiskMeasureSpec, loss: RandomLoss, partition: InformationPartition, own_type: int) -> float:
    """The usual conditional risk: the same measure applied to the cell's conditional law."""
    return conditional_evaluate(spec, ConditionalDual.unrevised(partition), loss, partition, own_type)


@dataclass
class _InnerLP:
    """``max g @ v`` s.t. ``A_eq v = b_eq``, ``A_le v <= b_le``, ``v >= 0``.

    ``v = [Z' (n atoms), aux]``; ``cell`` lists the atoms that carry the
    objective and ``cond_probs`` their conditional probabilities.
    """

    A_eq: np.ndarray
    b_eq: np.ndarray
    A_le: np.ndarray
    b_le: np.ndarray
    n_vars: int
    cell: np.ndarray
    cond_probs: np.ndarray


def conditional_dual_set(
    spec: RiskMeasureSpec, cond: ConditionalDual, probs: np.ndarray, partition: InformationPartition, own_type: int
) -> _InnerLP:
    """Constraints on ``Z'`` (and auxiliaries) defining the revised dual set."""
    p = np.asarray(probs, dtype=float)
    n = p.size
    zt = cond.lifted(partition)
    amb = ambiguity_set(spec, p)
    n_aux = amb.n_aux
    nv = n + n_aux
    eq_rows, eq_rhs, le_rows, le_rhs = [], [], [], []

    def row():
        return np.zeros(nv)

    for k, cell in enumerate(partition.cells):
        mass = p[cell].sum()
        if mass <= 0:
            continue
        r = row()
        r[cell] = p[cell] / mass
        eq_rows.append(r)
        eq_rhs.append(1.0)
    for t in range(n):
        lo, hi = amb.lo[t], amb.hi[t]
        if zt[t] <= 0:
            if lo > 0:
                raise InfeasibleConditionalDual("zero conditional weight is infeasible for this measure")
            continue
        if np.isfinite(hi):
            r = row()
            r[t] = 1.0
            le_rows.append(r)
            le_rhs.append(hi / zt[t])
        if lo > 0:
            r = row()
            r[t] = -1.0
            le_rows.append(r)
            le_rhs.append(-lo / zt[t])
    A_wz = amb.A_w * zt[None, :]
    for k, s in enumerate(amb.senses):
        r = row()
        r[:n] = A_wz[k]
        r[n:] = amb.A_u[k]
        if s == EQ:
            eq_rows.append(r)
            eq_rhs.append(amb.rhs[k])
        elif s == LE:
            le_rows.append(r)
            le_rhs.append(amb.rhs[k])
        else:
            le_rows.append(-r)
            le_rhs.append(-amb.rhs[k])
    for j, h in enumerate(amb.aux_hi):
        if np.isfinite(h):
            r = row()
            r[n + j] = 1.0
            le_rows.append(r)
            le_rhs.append(h)
    cell = partition.cells[own_type]
    mass = p[cell].sum()
    if mass <= 0:
        raise UnconditionableTypeError(f"cell {own_type} of player {partition.owner} has zero mass")
    return _InnerLP(
        np.array(eq_rows).reshape(-1, nv),
        np.array(eq_rhs),
        np.array(le_rows).reshape(-1, nv),
        np.array(le_rhs),
        nv,
        cell,
        p[cell] / mass,
    )


def _conditional_lp_value(spec, cond, loss, partition, own_type) -> float:
    inner = conditional_dual_set(spec, cond, loss.probs, partition, own_type)
    g = np.zeros(inner.n_vars)
    g[inner.cell] = inner.cond_probs * loss.values[inner.cell]
    A = np.vstack([inner.A_eq, inner.A_le])
    senses = (EQ,) * len(inner.b_eq) + (LE,) * len(inner.b_le)
    lp = LinearProgram(g, A, senses, np.concatenate([inner.b_eq, inner.b_le]), maximize=True)
    return solve_or_raise(lp).objective


def min_conditional_risk(
    spec: RiskMeasureSpec,
    cond: ConditionalDual,
    action_losses: np.ndarray,
    probs: np.ndarray,
    partition: InformationPartition,
    own_type: int,
) -> tuple[float, np.ndarray]:
    """Best mixed action for one type under its revised interim measure.

    ``action_losses`` has shape ``(|T|, |A_i|)`` (only rows in the type's cell
    matter).  The inner maximization over the revised dual set is replaced by
    its LP dual, giving a single minimization over the action distribution.
    """
    inner = conditional_dual_set(spec, cond, probs, partition, own_type)
    n_a = action_losses.shape[1]
    m_eq, m_le = len(inner.b_eq), len(inner.b_le)
    # variables: x (n_a, >=0), y (m_eq, free), u (m_le, >=0)
    c = np.concatenate([np.zeros(n_a), inner.b_eq, inner.b_le])
    G = np.zeros((inner.n_vars, n_a))
    G[inner.cell] = inner.cond_probs[:, None] * action_losses[inner.cell]
    A_dual = np.hstack([-G, inner.A_eq.T, inner.A_le.T])
    simplex = np.concatenate([np.ones(n_a), np.zeros(m_eq + m_le)])[None, :]
    A = np.vstack([A_dual, simplex])
    senses = (GE,) * inner.n_vars + (EQ,)
    b = np.concatenate([np.zeros(inner.n_vars), [1.0]])
    bounds = [(0.0, None)] * n_a + [(None, None)] * m_eq + [(0.0, None)] * m_le
    lp = LinearProgram(c, A, senses, b, bounds=tuple(bounds))
    sol = solve_or_raise(lp)
    x = np.clip(sol.x[:n_a], 0.0, None)
    return sol.objective, x / x.sum()


# --- decomposition -----------------------------------------------------------------


@dataclass
class DecompositionReport:
    ex_ante: float
    attained: float
    max_sampled: float
    gap: float
    passed: bool
    samples: int = 0
    skipped: int = 0

    def to_dict(self) -> dict:
        return {"ex_ante": self.ex_ante, "attained": self.attained, "max_sampled": self.max_sampled, "gap": self.gap, "pass": self.passed}


def weighted_interim(spec, cond: ConditionalDual, loss: RandomLoss, partition: InformationPartition, method: str = "auto") -> float:
    """``E[z * rho_z(L | cell)]``; cells with zero weight contribute nothing."""
    fast = method == "auto" and isinstance(spec, (AVaR, EssentialSup))
    total = 0.0
    for k, cell in enumerate(partition.cells):
        mass = loss.probs[cell].sum()
        z = cond.weights[k]
        if mass <= 0 or z <= 0:
            continue
        if fast:
            # same closed form as conditional_evaluate, on raw arrays
            level = 1 if isinstance(spec, EssentialSup) else revised_level(float(spec.alpha), z)
            v, q = loss.values[cell], loss.probs[cell] / mass
            value = avar_of_values(v, q, level)
        else:
            value = conditional_evaluate(spec, cond, loss, partition, k, method)
        total += mass * z * value
    return total


def sample_conditional_duals(spec, probs, partition: InformationPartition, n: int, rng: np.random.Generator):
    """Feasible conditional duals obtained by projecting random feasible ex ante densities.

    Returns the feasible ones and the number discarded.
    """
    p = np.asarray(probs, dtype=float)
    M = np.zeros((len(partition.cells), p.size))
    for k, cell in enumerate(partition.cells):
        M[k, cell] = 1.0
    mass = M @ p
    if np.any(mass <= 0):
        raise UnconditionableTypeError(f"a cell of player {partition.owner} has zero mass")
    Zs = np.empty((n, p.size))
    for s in range(n):
        weights = rng.dirichlet(np.ones(int(rng.integers(1, 4))))
        Zs[s] = sum(w * dual_of_values(spec, rng.normal(0, 1, p.size), p) for w in weights)
    W = (Zs * p) @ M.T / mass
    if isinstance(spec, (AVaR, EssentialSup)):
        lifted = W[:, partition.cell_of()]
        c = cap(spec.alpha if isinstance(spec, AVaR) else 1)
        ok = (
            np.all(lifted >= -DUAL_TOL, axis=1)
            & np.all(lifted <= c + DUAL_TOL, axis=1)
            & (np.abs(lifted @ p - 1.0) <= DUAL_TOL)
        )
        conds = [ConditionalDual(partition.owner, w) for w in W[ok]]
        return conds, int(n - ok.sum())
    out, skipped = [], 0
    for w in W:
        cond = ConditionalDual(partition.owner, w)
        if is_conditional_feasible(spec, cond, partition, p):
            out.append(cond)
        else:
            skipped += 1
    return out, skipped


def verify_decomposition(
    spec: RiskMeasureSpec,
    loss: RandomLoss,
    partition: InformationPartition,
    n_samples: int = 200,
    seed: int = 0,
    tol: float = 1e-9,
) -> DecompositionReport:
    """Check ``rho(L) = max_z E[z rho_z(L | F_tau)]`` with attainment at the projected optimal dual.

    The upper bound over sampled ``z`` relies on per-cell worst cases being
    jointly feasible, which holds for box-shaped dual sets (expectation, AV@R,
    essential supremum).  For mixtures and polytopes the per-cell suprema can
    overshoot ``rho(L)`` and the report then fails honestly.
    """
    if np.any(loss.probs <= 0):
        raise UnconditionableTypeError("decomposition check requires a fully supported measure")
    ex_ante = evaluate(spec, loss)
    cond_star = project_dual(optimal_dual(spec, loss), partition, loss.probs)
    attained = weighted_interim(spec, cond_star, loss, partition)
    rng = np.random.default_rng(seed)
    samples, skipped = sample_conditional_duals(spec, loss.probs, partition, n_samples, rng)
    sampled = [weighted_interim(spec, c, loss, partition) for c in samples]
    max_sampled = max(sampled) if sampled else -np.inf
    gap = max(abs(attained - ex_ante), max_sampled - ex_ante, 0.0)
    scale = tol * max(1.0, abs(ex_ante))
    ok = abs(attained - ex_ante) <= scale and max_sampled <= ex_ante + scale
    return DecompositionReport(ex_ante, attained, float(max_sampled), float(gap), bool(ok), len(samples), skipped)
