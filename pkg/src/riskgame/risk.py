"""Law-invariant coherent risk measures on finite probability spaces.

Every measure is represented through its dual set: ``rho(L) = max E[L Z]``
over densities ``Z >= 0`` with ``E[Z] = 1`` in an ambiguity set.  AV@R is
evaluated in closed form (sort and average the worst tail mass); the other
variants reduce to AV@R mixtures or to a finite list of dual vertices.

Levels may be given as :class:`fractions.Fraction`; caps ``1/(1-alpha)`` are
then computed exactly before conversion to float, which keeps densities like
``[3/2, 1, 3/2, 0]`` bit-exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .game import RandomLoss
from .lp import LinearProgram, solve

Level = float | Fraction

DUAL_TOL = 1e-9


class RiskSpecError(ValueError):
    pass


@dataclass(frozen=True)
class Expectation:
    kind = "expectation"


@dataclass(frozen=True)
class AVaR:
    """Average value-at-risk at level ``alpha``: the mean of the worst ``1 - alpha`` mass."""

    alpha: Level
    kind = "avar"

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise RiskSpecError(f"AVaR level must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class EssentialSup:
    kind = "esssup"


@dataclass(frozen=True)
class SpectralMixture:
    """``sum_k w_k AVaR(alpha_k)``."""

    components: tuple[tuple[float, Level], ...]
    kind = "spectral"

    def __post_init__(self):
        comps = tuple((float(w), a) for w, a in self.components)
        if not comps:
            raise RiskSpecError("spectral mixture needs at least one component")
        for w, a in comps:
            if w < 0:
                raise RiskSpecError("mixture weights must be nonnegative")
            if not 0 <= a <= 1:
                raise RiskSpecError(f"AVaR level must lie in [0, 1], got {a}")
        if abs(sum(w for w, _ in comps) - 1.0) > 1e-12:
            raise RiskSpecError("mixture weights must sum to 1")
        object.__setattr__(self, "components", comps)


@dataclass(frozen=True, eq=False)
class PolytopeDual:
    """Dual set given as the convex hull of explicit density vertices.

    Vertices are densities with respect to the measure the risk is evaluated
    against, so they only make sense on that atom set.
    """

    vertices: np.ndarray
    probs: np.ndarray | None = None
    kind = "polytope"

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.shape[0] == 0:
            raise RiskSpecError("polytope needs at least one vertex")
        if np.any(V < -DUAL_TOL):
            raise RiskSpecError("polytope vertices must be nonnegative")
        if self.probs is not None:
            p = np.asarray(self.probs, dtype=float)
            if p.size != V.shape[1]:
                raise RiskSpecError("polytope vertices and measure differ in size")
            means = V @ p
            if np.any(np.abs(means - 1.0) > DUAL_TOL):
                raise RiskSpecError("every polytope vertex must have prior-weighted mean 1")
            object.__setattr__(self, "probs", p)
        object.__setattr__(self, "vertices", V)

    def __eq__(self, other):
        return isinstance(other, PolytopeDual) and np.array_equal(self.vertices, other.vertices)

    __hash__ = None

    def validate_for(self, probs: np.ndarray) -> None:
        if self.vertices.shape[1] != probs.size:
            raise RiskSpecError(f"polytope is over {self.vertices.shape[1]} atoms, loss has {probs.size}")
        means = self.vertices @ probs
        if np.any(np.abs(means - 1.0) > DUAL_TOL):
            raise RiskSpecError("every polytope vertex must have prior-weighted mean 1")


RiskMeasureSpec = Expectation | AVaR | EssentialSup | SpectralMixture | PolytopeDual


def cap(alpha: Level) -> float:
    """Density cap ``1/(1-alpha)``; infinite at ``alpha = 1``."""
    if isinstance(alpha, Fraction):
        num, den = alpha.numerator, alpha.denominator
        return np.inf if num == den else den / (den - num)  # int division rounds correctly
    if alpha == 1:
        return np.inf
    return 1.0 / (1.0 - float(alpha))


def avar_components(spec: RiskMeasureSpec) -> list[tuple[float, Level]] | None:
    """The measure as a list of ``(weight, level)`` AV@R terms, or None for polytopes."""
    if isinstance(spec, Expectation):
        return [(1.0, 0)]
    if isinstance(spec, AVaR):
        return [(1.0, spec.alpha)]
    if isinstance(spec, EssentialSup):
        return [(1.0, 1)]
    if isinstance(spec, SpectralMixture):
        return list(spec.components)
    if isinstance(spec, PolytopeDual):
        return None
    raise RiskSpecError(f"unknown risk spec {spec!r}")


# --- evaluation --------------------------------------------------------------


def _support(loss: RandomLoss) -> np.ndarray:
    p = loss.probs
    if p.size == 0 or not np.any(p > 0):
        raise RiskSpecError("loss has empty support")
    return p


def _greedy(vals: list, ps: list, alpha: Level) -> list:
    n = len(vals)
    Z = [0.0] * n
    order = sorted(range(n), key=lambda k: (-vals[k], k))
    c = cap(alpha)
    if c == np.inf:
        # essential supremum: all mass on the first maximal atom with P > 0
        k = next(k for k in order if ps[k] > 0)
        Z[k] = 1.0 / ps[k]
        return Z
    budget = 1.0
    for k in order:
        if ps[k] <= 0:
            continue
        take = min(c * ps[k], budget)
        Z[k] = c if take == c * ps[k] else take / ps[k]
        budget -= take
        if budget <= 1e-15:
            break
    return Z


def avar_dual(values: np.ndarray, probs: np.ndarray, alpha: Level) -> np.ndarray:
    """Greedy optimal AV@R density.

    Atoms are visited by loss descending (canonical index ascending on ties)
    and filled to the cap until the unit budget of ``E[Z]`` is used up; at
    most one atom gets a fractional weight.
    """
    # plain lists: these arrays have a handful of atoms and numpy call overhead dominates
    return np.array(_greedy(values.tolist(), probs.tolist(), alpha))


def avar_of_values(values: np.ndarray, probs: np.ndarray, alpha: Level) -> float:
    """AV@R of raw arrays; ``probs`` must have positive total mass."""
    vals, ps = values.tolist(), probs.tolist()
    return float(sum(p * z * v for p, z, v in zip(ps, _greedy(vals, ps, alpha), vals)))


def dual_of_values(spec: RiskMeasureSpec, values: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """:func:`optimal_dual` on raw arrays, without support or polytope validation."""
    if isinstance(spec, PolytopeDual):
        return spec.vertices[int(np.argmax(spec.vertices @ (probs * values)))].copy()
    if isinstance(spec, Expectation):
        return np.ones(values.size)
    comps = avar_components(spec)
    if len(comps) == 1:
        return avar_dual(values, probs, comps[0][1])
    return sum(w * avar_dual(values, probs, a) for w, a in comps if w > 0)


def evaluate_avar(loss: RandomLoss, alpha: Level) -> float:
    _support(loss)
    return avar_of_values(loss.values, loss.probs, alpha)


def evaluate(spec: RiskMeasureSpec, loss: RandomLoss) -> float:
    """``rho(L)`` for the given spec."""
    _support(loss)
    if isinstance(spec, PolytopeDual):
        spec.validate_for(loss.probs)
        return float(np.max(spec.vertices @ (loss.probs * loss.values)))
    if isinstance(spec, Expectation):
        return loss.mean()
    return float(sum(w * evaluate_avar(loss, a) for w, a in avar_components(spec) if w > 0))


def optimal_dual(spec: RiskMeasureSpec, loss: RandomLoss) -> np.ndarray:
    """A density in the dual set of ``spec`` attaining ``evaluate(spec, loss)``."""
    _support(loss)
    if isinstance(spec, PolytopeDual):
        spec.validate_for(loss.probs)
    return dual_of_values(spec, loss.values, loss.probs)


# --- dual sets -----------------------------------------------------------------


@dataclass
class AmbiguitySet:
    """Linear description of a dual set.

    A density ``W`` over ``n`` atoms belongs to the set iff there are auxiliary
    variables ``u >= 0`` with ``lo <= W <= hi`` and
    ``A_w @ W + A_u @ u  (senses)  rhs``.
    """

    n: int
    lo: np.ndarray
    hi: np.ndarray
    A_w: np.ndarray
    A_u: np.ndarray
    senses: tuple[str, ...]
    rhs: np.ndarray
    aux_hi: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_aux(self) -> int:
        return self.A_u.shape[1]

    def contains(self, W: np.ndarray, tol: float = DUAL_TOL) -> bool:
        W = np.asarray(W, dtype=float)
        if W.size != self.n:
            raise RiskSpecError(f"density has {W.size} atoms, dual set has {self.n}")
        if np.any(W < self.lo - tol) or np.any(W > self.hi + tol):
            return False
        resid = self.rhs - self.A_w @ W
        if self.n_aux == 0:
            return _rows_hold(np.zeros(len(self.senses)), self.senses, resid, tol)
        # feasibility of the auxiliary system; loosen equalities by tol
        rows_A, rows_s, rows_b = [], [], []
        for k, s in enumerate(self.senses):
            if s == "==":
                rows_A += [self.A_u[k], self.A_u[k]]
                rows_s += ["<=", ">="]
                rows_b += [resid[k] + tol, resid[k] - tol]
            else:
                rows_A.append(self.A_u[k])
                rows_s.append(s)
                rows_b.append(resid[k] + (tol if s == "<=" else -tol))
        lp = LinearProgram(
            c=np.zeros(self.n_aux),
            A=np.array(rows_A),
            senses=tuple(rows_s),
            b=np.array(rows_b),
            bounds=tuple((0.0, h) for h in self.aux_hi),
        )
        return solve(lp).ok


def _rows_hold(lhs, senses, rhs, tol) -> bool:
    for v, s, r in zip(lhs, senses, rhs):
        if s == "==" and abs(v - r) > tol:
            return False
        if s == "<=" and v > r + tol:
            return False
        if s == ">=" and v < r - tol:
            return False
    return True


def ambiguity_set(spec: RiskMeasureSpec, probs: np.ndarray) -> AmbiguitySet:
    p = np.asarray(probs, dtype=float)
    n = p.size
    if isinstance(spec, Expectation):
        return AmbiguitySet(n, np.ones(n), np.ones(n), np.zeros((0, n)), np.zeros((0, 0)), (), np.zeros(0))
    if isinstance(spec, (AVaR, EssentialSup)):
        alpha = spec.alpha if isinstance(spec, AVaR) else 1
        return AmbiguitySet(
            n, np.zeros(n), np.full(n, cap(alpha)), p[None, :], np.zeros((1, 0)), ("==",), np.ones(1)
        )
    if isinstance(spec, SpectralMixture):
        K = len(spec.components)
        # rows: W - sum_k w_k W_k = 0 (n rows); E[W_k] = 1 (K rows)
        A_w = np.vstack([np.eye(n), np.zeros((K, n))])
        A_u = np.zeros((n + K, K * n))
        for k, (w, _) in enumerate(spec.components):
            A_u[:n, k * n : (k + 1) * n] = -w * np.eye(n)
            A_u[n + k, k * n : (k + 1) * n] = p
        aux_hi = np.concatenate([np.full(n, cap(a)) for _, a in spec.components])
        return AmbiguitySet(
            n, np.zeros(n), np.full(n, np.inf), A_w, A_u, ("==",) * (n + K), np.concatenate([np.zeros(n), np.ones(K)]), aux_hi
        )
    if isinstance(spec, PolytopeDual):
        spec.validate_for(p)
        V = spec.vertices
        J = V.shape[0]
        A_w = np.vstack([np.eye(n), np.zeros((1, n))])
        A_u = np.vstack([-V.T, np.ones((1, J))])
        return AmbiguitySet(
            n, np.zeros(n), np.full(n, np.inf), A_w, A_u, ("==",) * (n + 1), np.concatenate([np.zeros(n), [1.0]]), np.full(J, np.inf)
        )
    raise RiskSpecError(f"unknown risk spec {spec!r}")


def is_dual_feasible(spec: RiskMeasureSpec, Z: np.ndarray, probs: np.ndarray, tol: float = DUAL_TOL) -> bool:
    Z = np.asarray(Z, dtype=float)
    p = np.asarray(probs, dtype=float)
    if Z.size != p.size:
        raise RiskSpecError(f"density has {Z.size} atoms, measure has {p.size}")
    if np.any(Z < -tol) or abs(float(p @ Z) - 1.0) > tol:
        return False
    if isinstance(spec, (AVaR, EssentialSup)):
        return bool(np.all(Z <= cap(spec.alpha if isinstance(spec, AVaR) else 1) + tol))
    return ambiguity_set(spec, p).contains(Z, tol)


def is_dual_optimal(spec: RiskMeasureSpec, loss: RandomLoss, Z: np.ndarray, tol: float = DUAL_TOL) -> bool:
    if not is_dual_feasible(spec, Z, loss.probs, tol):
        return False
    return abs(dual_value(loss, Z) - evaluate(spec, loss)) <= tol * max(1.0, abs(evaluate(spec, loss)))


def dual_value(loss: RandomLoss, Z: np.ndarray) -> float:
    return float(np.sum(loss.probs * np.asarray(Z, dtype=float) * loss.values))


def optimality_gap(spec: RiskMeasureSpec, loss: RandomLoss, Z: np.ndarray) -> float:
    return evaluate(spec, loss) - dual_value(loss, Z)


# --- brute-force oracle ----------------------------------------------------------


def avar_dual_vertices(probs: np.ndarray, alpha: Level) -> list[np.ndarray]:
    """All vertices of ``{0 <= Z <= cap, E[Z] = 1}``.

    A vertex has every atom at 0 or at the cap except at most one atom, whose
    value is fixed by the budget.  Exponential in the atom count; meant for
    cross-checking on at most a handful of atoms.
    """
    p = np.asarray(probs, dtype=float)
    n = p.size
    c = cap(alpha)
    out = []
    for free in [None, *range(n)]:
        others = [k for k in range(n) if k != free]
        for pattern in itertools.product((0.0, 1.0), repeat=len(others)):
            Z = np.zeros(n)
            for k, on in zip(others, pattern):
                Z[k] = c * on if np.isfinite(c) else 0.0
            rest = 1.0 - float(p @ Z)
            if free is None:
                if abs(rest) <= 1e-12:
                    out.append(Z)
                continue
            if p[free] <= 0:
                continue
            z = rest / p[free]
            if -1e-12 <= z <= c + 1e-12:
                Z[free] = min(max(z, 0.0), c)
                out.append(Z)
    return out


# --- coherence harness -------------------------------------------------------------


@dataclass
class CoherenceReport:
    spec: str
    trials: int
    passed: dict
    counterexamples: dict

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def check_coherence(spec, trials: int = 1000, seed: int = 0, n_atoms: int = 6, evaluator=None, tol: float = 1e-9) -> CoherenceReport:
    """Randomized test of monotonicity, convexity, translation invariance,
    positive homogeneity and invariance under permuting equal-probability atoms.

    ``evaluator`` defaults to :func:`evaluate`; pass another callable
    ``f(spec, loss)`` to audit an alternative implementation.
    """
    f = evaluator or evaluate
    rng = np.random.default_rng(seed)
    names = ("monotonicity", "convexity", "translation", "homogeneity", "law_invariance")
    passed = {k: True for k in names}
    cex: dict = {}

    def fail(name, **info):
        passed[name] = False
        cex.setdefault(name, info)

    for _ in range(trials):
        n = n_atoms if isinstance(spec, PolytopeDual) else int(rng.integers(2, n_atoms + 1))
        if isinstance(spec, PolytopeDual):
            p = spec.probs if spec.probs is not None else np.full(n, 1.0 / n)
        else:
            # equal-probability atoms half the time so permutations are meaningful
            p = np.full(n, 1.0 / n) if rng.random() < 0.5 else rng.dirichlet(np.ones(n))
        L1 = RandomLoss(np.round(rng.normal(0, 10, n), 3), p)
        L2 = RandomLoss(np.round(rng.normal(0, 10, n), 3), p)
        r1, r2 = f(spec, L1), f(spec, L2)
        scale = tol * (1 + abs(r1) + abs(r2))

        hi = RandomLoss(L1.values + np.abs(np.round(rng.normal(0, 5, n), 3)), p)
        if f(spec, L1) > f(spec, hi) + scale:
            fail("monotonicity", L1=L1.values.tolist(), L2=hi.values.tolist(), probs=p.tolist())
        a = float(rng.random())
        mix = RandomLoss(a * L1.values + (1 - a) * L2.values, p)
        if f(spec, mix) > a * r1 + (1 - a) * r2 + scale:
            fail("convexity", L1=L1.values.tolist(), L2=L2.values.tolist(), a=a, probs=p.tolist())
        c = float(np.round(rng.normal(0, 20), 3))
        if abs(f(spec, L1 + c) - (r1 + c)) > scale + tol * abs(c):
            fail("translation", L=L1.values.tolist(), c=c, probs=p.tolist())
        s = float(rng.uniform(0.01, 10))
        if abs(f(spec, L1.scaled(s)) - s * r1) > scale * (1 + s):
            fail("homogeneity", L=L1.values.tolist(), s=s, probs=p.tolist())
        # permute atoms within groups of equal probability
        perm = np.arange(n)
        for val in np.unique(p):
            idx = np.flatnonzero(p == val)
            perm[idx] = rng.permutation(idx)
        if not isinstance(spec, PolytopeDual) and abs(f(spec, RandomLoss(L1.values[perm], p)) - r1) > scale:
            fail("law_invariance", L=L1.values.tolist(), perm=perm.tolist(), probs=p.tolist())
    return CoherenceReport(spec_name(spec), trials, passed, cex)


def avar_without_boundary_atom(spec, loss: RandomLoss) -> float:
    """AV@R that drops the fractional boundary atom; deliberately incoherent."""
    alpha = spec.alpha
    c = cap(alpha)
    order = sorted(range(len(loss)), key=lambda k: (-loss.values[k], k))
    budget, acc, used = 1.0, 0.0, 0.0
    for k in order:
        take = c * loss.probs[k]
        if take > budget + 1e-15:
            break
        acc += take * loss.values[k]
        used += take
        budget -= take
    return acc / used if used > 0 else float(loss.values.max())


# --- naming and JSON ---------------------------------------------------------------


def _level_str(a: Level) -> str:
    return str(a) if isinstance(a, Fraction) else f"{a:g}"


def spec_name(spec: RiskMeasureSpec) -> str:
    if isinstance(spec, Expectation):
        return "E"
    if isinstance(spec, AVaR):
        return f"AV@R_{_level_str(spec.alpha)}"
    if isinstance(spec, EssentialSup):
        return "esssup"
    if isinstance(spec, SpectralMixture):
        return " + ".join(f"{w:g}*AV@R_{_level_str(a)}" for w, a in spec.components)
    if isinstance(spec, PolytopeDual):
        return f"polytope[{spec.vertices.shape[0]} vertices]"
    return repr(spec)


def parse_level(obj) -> Level:
    if isinstance(obj, dict):
        if set(obj) != {"num", "den"}:
            raise RiskSpecError(f"rational level needs exactly 'num' and 'den': {obj}")
        return Fraction(int(obj["num"]), int(obj["den"]))
    if isinstance(obj, str):
        return Fraction(obj)
    if isinstance(obj, (int, float)):
        return float(obj)
    raise RiskSpecError(f"cannot read level {obj!r}")


def level_to_json(a: Level):
    if isinstance(a, Fraction):
        return {"num": a.numerator, "den": a.denominator}
    return a


def spec_from_json(obj) -> RiskMeasureSpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise RiskSpecError(f"risk spec must be an object with a 'kind': {obj!r}")
    kind = obj["kind"]
    if kind == "expectation":
        return Expectation()
    if kind == "avar":
        return AVaR(parse_level(obj["alpha"]))
    if kind == "esssup":
        return EssentialSup()
    if kind == "spectral":
        return SpectralMixture(tuple((float(w), parse_level(a)) for w, a in obj["components"]))
    if kind == "polytope":
        return PolytopeDual(np.asarray(obj["vertices"], dtype=float))
    raise RiskSpecError(f"unknown risk spec kind {kind!r}")


def spec_to_json(spec: RiskMeasureSpec) -> dict:
    if isinstance(spec, Expectation):
        return {"kind": "expectation"}
    if isinstance(spec, AVaR):
        return {"kind": "avar", "alpha": level_to_json(spec.alpha)}
    if isinstance(spec, EssentialSup):
        return {"kind": "esssup"}
    if isinstance(spec, SpectralMixture):
        return {"kind": "spectral", "components": [[w, level_to_json(a)] for w, a in spec.components]}
    if isinstance(spec, PolytopeDual):
        return {"kind": "polytope", "vertices": spec.vertices.tolist()}
    raise RiskSpecError(f"unknown risk spec {spec!r}")
