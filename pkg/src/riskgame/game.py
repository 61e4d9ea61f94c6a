"""Finite games with incomplete information: types, strategies, average losses.

Type profiles and action profiles are enumerated lexicographically by
per-player index (player 1 outermost), so for two players with types
``(G, H)`` the type-profile order is ``GG, GH, HG, HH``.  Every loss vector,
dual density and prior in the package uses this order.
"""

from __future__ import annotations

import itertools
import math
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

PROB_TOL = 1e-12
CMP_TOL = 1e-9


class GameError(ValueError):
    """Invalid game data or an operation that the game cannot support."""


class UnconditionableTypeError(GameError):
    """Conditioning on a type (or cell) that has zero prior probability."""


@dataclass(frozen=True, eq=False)
class Game:
    """A finite game with a common prior.

    ``losses[i]`` has shape ``(|T_1|, ..., |T_I|, |A_1|, ..., |A_I|)``;
    ``prior`` is flat over type profiles in canonical order.
    """

    players: tuple[str, ...]
    type_sets: tuple[tuple[str, ...], ...]
    action_sets: tuple[tuple[str, ...], ...]
    losses: tuple[np.ndarray, ...]
    prior: np.ndarray
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        players = tuple(str(p) for p in self.players)
        if len(players) < 2:
            raise GameError("a game needs at least two players")
        if len(set(players)) != len(players):
            raise GameError("player ids must be unique")
        type_sets = tuple(tuple(str(t) for t in ts) for ts in self.type_sets)
        action_sets = tuple(tuple(str(a) for a in acts) for acts in self.action_sets)
        if len(type_sets) != len(players) or len(action_sets) != len(players):
            raise GameError("one type set and one action set per player")
        for p, ts, acts in zip(players, type_sets, action_sets):
            if not ts:
                raise GameError(f"player {p}: empty type set")
            if not acts:
                raise GameError(f"player {p}: empty action set")
        tshape = tuple(len(ts) for ts in type_sets)
        ashape = tuple(len(a) for a in action_sets)
        prior = np.asarray(self.prior, dtype=float).reshape(-1)
        if prior.size != math.prod(tshape):
            raise GameError(f"prior has {prior.size} entries, expected {math.prod(tshape)}")
        if not np.all(np.isfinite(prior)) or np.any(prior < 0):
            raise GameError("prior entries must be finite and nonnegative")
        if abs(prior.sum() - 1.0) > PROB_TOL:
            raise GameError(f"prior not normalized (sums to {prior.sum():.15g})")
        if len(self.losses) != len(players):
            raise GameError("one loss table per player")
        losses = []
        for p, tab in zip(players, self.losses):
            arr = np.asarray(tab, dtype=float)
            if arr.size != math.prod(tshape) * math.prod(ashape):
                raise GameError(f"player {p}: loss table has {arr.size} entries")
            arr = arr.reshape(tshape + ashape)
            if not np.all(np.isfinite(arr)):
                raise GameError(f"player {p}: loss entries must be finite")
            arr.setflags(write=False)
            losses.append(arr)
        prior.setflags(write=False)
        object.__setattr__(self, "players", players)
        object.__setattr__(self, "type_sets", type_sets)
        object.__setattr__(self, "action_sets", action_sets)
        object.__setattr__(self, "losses", tuple(losses))
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return (
            self.players == other.players
            and self.type_sets == other.type_sets
            and self.action_sets == other.action_sets
            and np.array_equal(self.prior, other.prior)
            and all(np.array_equal(a, b) for a, b in zip(self.losses, other.losses))
        )

    __hash__ = None

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def type_shape(self) -> tuple[int, ...]:
        return tuple(len(ts) for ts in self.type_sets)

    @property
    def action_shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.action_sets)

    @property
    def n_type_profiles(self) -> int:
        return math.prod(self.type_shape)

    @property
    def fully_supported(self) -> bool:
        return bool(np.all(self.prior > 0))

    def player_index(self, player) -> int:
        if isinstance(player, (int, np.integer)) and not isinstance(player, bool):
            if 0 <= player < self.n_players:
                return int(player)
            raise GameError(f"player index {player} out of range")
        try:
            return self.players.index(str(player))
        except ValueError:
            raise GameError(f"unknown player {player!r}") from None

    def type_index(self, player, own_type) -> int:
        i = self.player_index(player)
        if isinstance(own_type, (int, np.integer)):
            if 0 <= own_type < len(self.type_sets[i]):
                return int(own_type)
            raise GameError(f"type index {own_type} out of range for player {self.players[i]}")
        try:
            return self.type_sets[i].index(str(own_type))
        except ValueError:
            raise GameError(f"player {self.players[i]} has no type {own_type!r}") from None

    def type_profiles(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(k) for k in self.type_shape)))

    def type_profile_labels(self) -> list[str]:
        return ["".join(self.type_sets[i][k] for i, k in enumerate(tp)) for tp in self.type_profiles()]

    def action_profiles(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(k) for k in self.action_shape)))

    def require_full_support(self) -> None:
        if not self.fully_supported:
            raise GameError("operation requires a fully supported prior")

    def loss_table(self, player) -> np.ndarray:
        """Loss table of ``player`` as ``(|T|, |A|)``."""
        i = self.player_index(player)
        return self.losses[i].reshape(self.n_type_profiles, -1)


@dataclass(frozen=True, eq=False)
class BehavioralStrategy:
    """``rows[k]`` is the distribution over the owner's actions when she has type ``k``."""

    owner: str
    rows: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2:
            raise GameError("strategy rows must form a 2-d array (types x actions)")
        if np.any(rows < -PROB_TOL) or np.any(np.abs(rows.sum(axis=1) - 1.0) > PROB_TOL * rows.shape[1] * 10):
            raise GameError(f"strategy of {self.owner}: each row must be a probability vector")
        rows = np.clip(rows, 0.0, None)
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def __eq__(self, other):
        return isinstance(other, BehavioralStrategy) and self.owner == other.owner and np.array_equal(self.rows, other.rows)

    __hash__ = None

    @property
    def is_pure(self) -> bool:
        return bool(np.all((self.rows == 0) | (self.rows == 1)))

    def pure_actions(self) -> tuple[int, ...]:
        if not self.is_pure:
            raise GameError("strategy is mixed")
        return tuple(int(np.argmax(r)) for r in self.rows)

    @classmethod
    def pure(cls, owner: str, actions: Sequence[int], n_actions: int) -> BehavioralStrategy:
        rows = np.zeros((len(actions), n_actions))
        rows[np.arange(len(actions)), list(actions)] = 1.0
        return cls(owner, rows)


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    strategies: tuple[BehavioralStrategy, ...]

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))

    def __getitem__(self, i: int) -> BehavioralStrategy:
        return self.strategies[i]

    def __len__(self):
        return len(self.strategies)

    def __eq__(self, other):
        return isinstance(other, StrategyProfile) and self.strategies == other.strategies

    __hash__ = None

    def replace(self, i: int, strategy: BehavioralStrategy) -> StrategyProfile:
        s = list(self.strategies)
        s[i] = strategy
        return StrategyProfile(tuple(s))

    @property
    def is_pure(self) -> bool:
        return all(s.is_pure for s in self.strategies)


@dataclass(frozen=True, eq=False)
class RandomLoss:
    """Loss values on atoms together with the probabilities of those atoms."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if v.size != p.size:
            raise GameError(f"loss has {v.size} atoms but measure has {p.size}")
        if not np.all(np.isfinite(v)):
            raise GameError("loss entries must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.values.size

    def __add__(self, c: float) -> RandomLoss:
        return RandomLoss(self.values + c, self.probs)

    def scaled(self, a: float) -> RandomLoss:
        return RandomLoss(a * self.values, self.probs)

    def mean(self) -> float:
        return float(self.probs @ self.values)


@dataclass(frozen=True)
class InformationPartition:
    """Cells of the owner's interim information: ``cells[k]`` holds the type-profile
    indices at which the owner has her ``k``-th type."""

    owner: str
    cells: tuple[np.ndarray, ...]

    def cell_of(self) -> np.ndarray:
        """Own-type index for every type profile."""
        out = np.empty(sum(c.size for c in self.cells), dtype=int)
        for k, c in enumerate(self.cells):
            out[c] = k
        return out


def check_profile(game: Game, profile: StrategyProfile) -> None:
    if len(profile) != game.n_players:
        raise GameError(f"profile has {len(profile)} strategies for {game.n_players} players")
    for i, s in enumerate(profile.strategies):
        if s.owner != game.players[i]:
            raise GameError(f"strategy {i} belongs to {s.owner!r}, expected {game.players[i]!r}")
        if s.rows.shape != (game.type_shape[i], game.action_shape[i]):
            raise GameError(
                f"strategy of {s.owner} has shape {s.rows.shape}, expected {(game.type_shape[i], game.action_shape[i])}"
            )


def _letters(n: int) -> str:
    return "abcdefghijklmnopqrstuvwxyz"[:n]


def deviation_losses(game: Game, profile: StrategyProfile, player) -> np.ndarray:
    """Loss of ``player`` per type profile and own action, opponents held at ``profile``.

    Returns shape ``(|T|, |A_i|)``; the average loss of any own strategy is
    obtained by weighting row ``t`` with the strategy's row for ``t_i``.
    """
    check_profile(game, profile)
    i = game.player_index(player)
    n = game.n_players
    tl = _letters(n)
    al = _letters(2 * n)[n:]
    operands = [game.losses[i]]
    subs = [tl + al]
    for j in range(n):
        if j != i:
            operands.append(profile[j].rows)
            subs.append(tl[j] + al[j])
    expr = ",".join(subs) + "->" + tl + al[i]
    out = np.einsum(expr, *operands)
    return out.reshape(game.n_type_profiles, game.action_shape[i])


def own_type_of_profiles(game: Game, player) -> np.ndarray:
    i = game.player_index(player)
    return np.array([tp[i] for tp in game.type_profiles()], dtype=int)


def average_loss(game: Game, profile: StrategyProfile, player) -> RandomLoss:
    """The player's loss per type profile, averaged over everyone's mixed actions."""
    i = game.player_index(player)
    dev = deviation_losses(game, profile, i)
    own = own_type_of_profiles(game, i)
    values = np.einsum("ta,ta->t", dev, profile[i].rows[own])
    return RandomLoss(values, game.prior)


def information_partition(game: Game, player) -> InformationPartition:
    i = game.player_index(player)
    own = own_type_of_profiles(game, i)
    cells = tuple(np.flatnonzero(own == k) for k in range(game.type_shape[i]))
    return InformationPartition(game.players[i], cells)


def type_marginal(game: Game, player) -> np.ndarray:
    i = game.player_index(player)
    return game.prior.reshape(game.type_shape).sum(axis=tuple(j for j in range(game.n_players) if j != i))


def conditional_distribution(game: Game, player, own_type) -> np.ndarray:
    """``P(t_-i | t_i)`` over opponents' type profiles in canonical order."""
    i = game.player_index(player)
    k = game.type_index(i, own_type)
    joint = np.moveaxis(game.prior.reshape(game.type_shape), i, 0)[k].reshape(-1)
    mass = joint.sum()
    if mass <= 0:
        raise UnconditionableTypeError(f"unconditionable type {game.type_sets[i][k]!r} of player {game.players[i]}")
    return joint / mass


def restrict_loss(
    loss: RandomLoss, partition: InformationPartition, own_type: int, merge: bool = False
) -> RandomLoss:
    """The conditional distribution of ``loss`` on one cell of ``partition``."""
    cell = partition.cells[own_type]
    p = loss.probs[cell]
    mass = p.sum()
    if mass <= 0:
        raise UnconditionableTypeError(f"cell {own_type} of player {partition.owner} has zero mass")
    v = loss.values[cell]
    p = p / mass
    if merge:
        uniq, inv = np.unique(v, return_inverse=True)
        p = np.bincount(inv, weights=p)
        v = uniq
    return RandomLoss(v, p)


def opponent_profile_labels(game: Game, player) -> list[str]:
    i = game.player_index(player)
    others = [j for j in range(game.n_players) if j != i]
    return [
        "".join(game.type_sets[j][k] for j, k in zip(others, combo))
        for combo in itertools.product(*(range(game.type_shape[j]) for j in others))
    ]


# --- pure profiles and their string form, e.g. "(DS,ds)" ---------------------


def pure_profile(game: Game, choice: Sequence[Sequence[int]]) -> StrategyProfile:
    """Profile where player ``i`` plays action ``choice[i][k]`` at her type ``k``."""
    return StrategyProfile(
        tuple(BehavioralStrategy.pure(game.players[i], choice[i], game.action_shape[i]) for i in range(game.n_players))
    )


def pure_strategies(game: Game, player) -> list[tuple[int, ...]]:
    i = game.player_index(player)
    return list(itertools.product(range(game.action_shape[i]), repeat=game.type_shape[i]))


def all_pure_profiles(game: Game) -> list[StrategyProfile]:
    per = [pure_strategies(game, i) for i in range(game.n_players)]
    return [pure_profile(game, combo) for combo in itertools.product(*per)]


def _strategy_label(game: Game, i: int, actions: Sequence[int]) -> str:
    labels = [game.action_sets[i][a] for a in actions]
    sep = "" if all(len(a) == 1 for a in game.action_sets[i]) else "|"
    return sep.join(labels)


def format_profile(game: Game, profile: StrategyProfile) -> str:
    if not profile.is_pure:
        raise GameError("only pure profiles have a string label")
    return "(" + ",".join(_strategy_label(game, i, s.pure_actions()) for i, s in enumerate(profile.strategies)) + ")"


def parse_profile(game: Game, text: str) -> StrategyProfile:
    """Parse ``"(DS,ds)"``: per player, one action label per type in type order."""
    body = text.strip()
    if body.startswith("(") and body.endswith(")"):
        body = body[1:-1]
    parts = [p.strip() for p in body.split(",")]
    if len(parts) != game.n_players:
        raise GameError(f"profile {text!r}: expected {game.n_players} comma-separated strategies")
    choice = []
    for i, part in enumerate(parts):
        acts = game.action_sets[i]
        if "|" in part or re.search(r"\s", part):
            tokens = [tok for tok in re.split(r"[|\s]+", part) if tok]
        else:
            tokens = _greedy_split(part, acts)
        if tokens is None or len(tokens) != game.type_shape[i]:
            raise GameError(f"profile {text!r}: cannot read {part!r} as {game.type_shape[i]} actions of {game.players[i]}")
        try:
            choice.append(tuple(acts.index(tok) for tok in tokens))
        except ValueError:
            raise GameError(f"profile {text!r}: unknown action in {part!r} for {game.players[i]}") from None
    return pure_profile(game, choice)


def _greedy_split(s: str, labels: Sequence[str]) -> list[str] | None:
    out = []
    pos = 0
    ordered = sorted(labels, key=len, reverse=True)
    while pos < len(s):
        for lab in ordered:
            if s.startswith(lab, pos):
                out.append(lab)
                pos += len(lab)
                break
        else:
            return None
    return out


def random_game(
    rng: np.random.Generator,
    n_types: Sequence[int] = (2, 2),
    n_actions: Sequence[int] = (2, 2),
    low: int = 0,
    high: int = 99,
    full_support: bool = True,
) -> Game:
    """Integer losses in ``[low, high]`` and a Dirichlet prior (uniform-ish, fully supported by default)."""
    if len(n_types) != len(n_actions):
        raise GameError("one type count and one action count per player")
    players = tuple(str(k + 1) for k in range(len(n_types)))
    types = tuple(tuple(f"t{j}" for j in range(n)) for n in n_types)
    actions = tuple(tuple(f"a{j}" for j in range(n)) for n in n_actions)
    size = math.prod(n_types) * math.prod(n_actions)
    losses = tuple(rng.integers(low, high + 1, size=size).astype(float) for _ in players)
    prior = rng.dirichlet(np.ones(math.prod(n_types)))
    if full_support:
        prior = 0.5 * prior + 0.5 / prior.size
    prior /= prior.sum()
    return Game(players, types, actions, losses, prior)
