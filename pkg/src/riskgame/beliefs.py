"""Interim belief systems: common-prior consistency and commonization.

A belief system gives, for every player and own type, a distribution over
the other players' type profiles (canonical order, other players in player
order).  ``commonize`` rewrites a belief system, possibly without any common
prior, as risk-averse play under a fully supported common prior: each type
evaluates losses by the worst case over a segment of beliefs that contains
its own belief and only better alternatives.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .game import Game, StrategyProfile, average_loss, check_profile, deviation_losses
from .lp import EQ, GE, LinearProgram, solve

CONSISTENCY_MARGIN = 1e-9


class BeliefError(ValueError):
    pass


def _others_index(shape: Sequence[int], i: int) -> np.ndarray:
    """For each type profile (flat canonical index), the flat index of the others' sub-profile."""
    other_shape = tuple(s for j, s in enumerate(shape) if j != i)
    out = np.empty(int(np.prod(shape)), dtype=int)
    for flat, t in enumerate(itertools.product(*map(range, shape))):
        rest = tuple(x for j, x in enumerate(t) if j != i)
        out[flat] = np.ravel_multi_index(rest, other_shape) if other_shape else 0
    return out


def _own_index(shape: Sequence[int], i: int) -> np.ndarray:
    return np.array([t[i] for t in itertools.product(*map(range, shape))], dtype=int)


@dataclass(frozen=True)
class BeliefSystem:
    """``beliefs[i][k]`` is player ``i``'s belief over others' type profiles at own type ``k``."""

    type_shape: tuple[int, ...]
    beliefs: tuple[np.ndarray, ...]

    def __post_init__(self):
        shape = tuple(int(s) for s in self.type_shape)
        if len(self.beliefs) != len(shape):
            raise BeliefError("one belief table per player")
        rows = []
        for i, b in enumerate(self.beliefs):
            arr = np.asarray(b, dtype=float)
            n_other = int(np.prod([s for j, s in enumerate(shape) if j != i]))
            if arr.shape != (shape[i], n_other):
                raise BeliefError(f"player {i}: belief table has shape {arr.shape}, expected {(shape[i], n_other)}")
            if np.any(arr < 0) or np.any(np.abs(arr.sum(axis=1) - 1.0) > 1e-12):
                raise BeliefError(f"player {i}: every belief must be a probability vector")
            arr.setflags(write=False)
            rows.append(arr)
        object.__setattr__(self, "type_shape", shape)
        object.__setattr__(self, "beliefs", tuple(rows))

    @classmethod
    def from_prior(cls, type_shape: Sequence[int], prior: np.ndarray) -> BeliefSystem:
        """Conditionals of a prior; every type must have positive marginal."""
        shape = tuple(type_shape)
        P = np.asarray(prior, dtype=float).reshape(-1)
        out = []
        for i in range(len(shape)):
            own, oth = _own_index(shape, i), _others_index(shape, i)
            n_other = int(np.prod(shape)) // shape[i]
            tab = np.zeros((shape[i], n_other))
            np.add.at(tab, (own, oth), P)
            m = tab.sum(axis=1, keepdims=True)
            if np.any(m <= 0):
                raise BeliefError(f"player {i}: a type has zero prior mass")
            out.append(tab / m)
        return cls(shape, tuple(out))


@dataclass
class ConsistencyResult:
    consistent: bool
    prior: np.ndarray | None
    margin: float
    max_residual: float | None

    def to_dict(self) -> dict:
        return {
            "verdict": "consistent" if self.consistent else "inconsistent",
            "prior": None if self.prior is None else self.prior.tolist(),
            "min_live_marginal": self.margin,
            "max_residual": self.max_residual,
        }


def conditional_residual(beliefs: BeliefSystem, prior: np.ndarray) -> float:
    """Largest deviation between the prior's conditionals and the beliefs (over types with mass)."""
    shape = beliefs.type_shape
    worst = 0.0
    for i, b in enumerate(beliefs.beliefs):
        own, oth = _own_index(shape, i), _others_index(shape, i)
        tab = np.zeros_like(b)
        np.add.at(tab, (own, oth), prior)
        m = tab.sum(axis=1)
        for k in np.flatnonzero(m > 0):
            worst = max(worst, float(np.max(np.abs(tab[k] / m[k] - b[k]))))
    return worst


def check_belief_consistency(beliefs: BeliefSystem, live: Sequence[Sequence[bool]] | None = None) -> ConsistencyResult:
    """Search for a common prior whose conditionals are the given beliefs.

    The LP maximizes the smallest marginal among live types (all types by
    default); the system is consistent iff that optimum is positive.
    """
    shape = beliefs.type_shape
    n = int(np.prod(shape))
    nv = n + 1  # prior entries, then the margin
    A, senses, b = [], [], []
    row = np.zeros(nv)
    row[:n] = 1.0
    A.append(row)
    senses.append(EQ)
    b.append(1.0)
    for i, bel in enumerate(beliefs.beliefs):
        own, oth = _own_index(shape, i), _others_index(shape, i)
        for k in range(shape[i]):
            cell = np.flatnonzero(own == k)
            for t in cell:
                r = np.zeros(nv)
                r[cell] -= bel[k, oth[t]]
                r[t] += 1.0
                A.append(r)
                senses.append(EQ)
                b.append(0.0)
            if live is None or live[i][k]:
                r = np.zeros(nv)
                r[cell] = 1.0
                r[n] = -1.0
                A.append(r)
                senses.append(GE)
                b.append(0.0)
    c = np.zeros(nv)
    c[n] = 1.0
    bounds = [(0.0, None)] * n + [(0.0, 1.0)]
    sol = solve(LinearProgram(c, np.array(A), tuple(senses), np.array(b), bounds=tuple(bounds), maximize=True))
    if not sol.ok or sol.objective <= CONSISTENCY_MARGIN:
        margin = max(float(sol.objective), 0.0) if sol.ok else 0.0
        return ConsistencyResult(False, None, margin, None)
    P = np.clip(sol.x[:n], 0.0, None)
    P /= P.sum()
    return ConsistencyResult(True, P, float(sol.objective), conditional_residual(beliefs, P))


# --- commonization -----------------------------------------------------------------


@dataclass
class TypeCommonization:
    player: int
    own_type: int
    belief: np.ndarray
    alternative: np.ndarray | None
    losses: np.ndarray
    sup_value: float
    attained_at_belief: bool
    support_ok: bool

    @property
    def segment(self) -> list[np.ndarray]:
        """Vertices of the belief set (one vertex when degenerate)."""
        return [self.belief] if self.alternative is None else [self.belief, self.alternative]

    def to_dict(self) -> dict:
        return {
            "player": self.player,
            "type": self.own_type,
            "belief": self.belief.tolist(),
            "alternative": None if self.alternative is None else self.alternative.tolist(),
            "set": "singleton" if self.alternative is None else "segment",
            "conditional_losses": self.losses.tolist(),
            "sup_value": self.sup_value,
            "attained_at_belief": self.attained_at_belief,
            "support_ok": self.support_ok,
        }


@dataclass
class Commonization:
    prior: np.ndarray
    types: list[TypeCommonization]
    bne_under_beliefs: bool
    rabne_under_common_prior: bool

    @property
    def certified(self) -> bool:
        return all(t.attained_at_belief and t.support_ok for t in self.types)

    def to_dict(self) -> dict:
        return {
            "prior": self.prior.tolist(),
            "certified": self.certified,
            "bne_under_beliefs": self.bne_under_beliefs,
            "rabne_under_common_prior": self.rabne_under_common_prior,
            "types": [t.to_dict() for t in self.types],
        }


def _loss_by_other(game: Game, values: np.ndarray, i: int, k: int) -> np.ndarray:
    """Values over type profiles restricted to own type ``k``, indexed by others' sub-profile."""
    shape = game.type_shape
    own, oth = _own_index(shape, i), _others_index(shape, i)
    out = np.zeros(len(own) // shape[i])
    cell = np.flatnonzero(own == k)
    out[oth[cell]] = values[cell]
    return out


def commonize(
    game: Game,
    beliefs: BeliefSystem,
    profile: StrategyProfile,
    prior: np.ndarray | None = None,
    tol: float = 1e-9,
) -> Commonization:
    """Common-prior representation of ``beliefs`` for the play ``profile``.

    Only the game's players, types, actions and losses are used; its prior is
    ignored.  Per type, the belief set is the segment between the belief and
    the point mass on the smallest conditional loss, or just the belief when
    no strictly better alternative exists.
    """
    check_profile(game, profile)
    if tuple(beliefs.type_shape) != tuple(game.type_shape):
        raise BeliefError("belief system does not match the game's type sets")
    n = game.n_type_profiles
    P = np.full(n, 1.0 / n) if prior is None else np.asarray(prior, dtype=float)
    if P.shape != (n,) or np.any(P <= 0) or abs(P.sum() - 1.0) > 1e-12:
        raise BeliefError("commonizing prior must be a fully supported distribution")
    types = []
    for i in range(game.n_players):
        L = average_loss(game, profile, i).values
        own, oth = _own_index(game.type_shape, i), _others_index(game.type_shape, i)
        for k in range(game.type_shape[i]):
            b = beliefs.beliefs[i][k]
            lv = _loss_by_other(game, L, i, k)
            base = float(b @ lv)
            j = int(np.argmin(lv))
            alt = None
            if lv[j] < base - tol:
                alt = np.zeros_like(b)
                alt[j] = 1.0
            verts = [b] if alt is None else [b, alt]
            sup = max(float(v @ lv) for v in verts)
            cell = np.flatnonzero(own == k)
            cond = np.zeros_like(b)
            cond[oth[cell]] = P[cell] / P[cell].sum()
            support_ok = bool(np.all(cond[b > 0] > 0))
            types.append(TypeCommonization(i, k, np.array(b), alt, lv, sup, abs(sup - base) <= tol, support_ok))
    bne = _interim_check(game, beliefs, profile, None, tol)
    rabne = _interim_check(game, beliefs, profile, types, tol)
    return Commonization(P, types, bne, rabne)


def _interim_check(game: Game, beliefs: BeliefSystem, profile, sets, tol) -> bool:
    """No type gains by a pure action switch, evaluating by ``beliefs`` or by worst case over ``sets``."""
    lookup = {(t.player, t.own_type): t for t in sets} if sets is not None else None
    for i in range(game.n_players):
        L = average_loss(game, profile, i).values
        C = deviation_losses(game, profile, i)
        for k in range(game.type_shape[i]):
            verts = [beliefs.beliefs[i][k]] if lookup is None else lookup[(i, k)].segment
            inc = max(float(v @ _loss_by_other(game, L, i, k)) for v in verts)
            for a in range(game.action_shape[i]):
                dev = max(float(v @ _loss_by_other(game, C[:, a], i, k)) for v in verts)
                if dev < inc - tol:
                    return False
    return True


def contradictory_example() -> BeliefSystem:
    """Two players with two types each whose beliefs admit no common prior with all types live."""
    return BeliefSystem((2, 2), (np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([[0.0, 1.0], [0.0, 1.0]])))


__all__ = [
    "BeliefError",
    "BeliefSystem",
    "Commonization",
    "ConsistencyResult",
    "TypeCommonization",
    "check_belief_consistency",
    "commonize",
    "conditional_residual",
    "contradictory_example",
]
