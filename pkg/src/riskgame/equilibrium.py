"""Best responses, equilibrium certificates and risk revision.

Three notions are certified here:

* RANE: no player lowers her ex ante risk by any (mixed) deviation.
* RABNE: no type lowers her unrevised conditional risk by switching action.
* RRBNE: as RABNE, but every type evaluates risk with the revised interim
  measure fixed by a :class:`RevisionProfile`.

Certificates never trust a solver output on its own: every deviation found by
an LP is re-evaluated with the closed-form risk before being reported.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .conditional import (
    ConditionalDual,
    RevisedInterimMeasure,
    conditional_evaluate,
    min_conditional_risk,
    project_dual,
    revise,
)
from .game import (
    BehavioralStrategy,
    Game,
    RandomLoss,
    StrategyProfile,
    all_pure_profiles,
    average_loss,
    check_profile,
    deviation_losses,
    format_profile,
    information_partition,
    own_type_of_profiles,
    pure_profile,
    pure_strategies,
)
from .lp import EQ, GE, LinearProgram, solve_or_raise
from .risk import (
    PolytopeDual,
    RiskMeasureSpec,
    avar_components,
    cap,
    evaluate,
    is_dual_optimal,
    optimal_dual,
    optimality_gap,
    spec_name,
)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
PURE_ENUM_LIMIT = 4096


class EquilibriumError(RuntimeError):
    pass


class NonConvergence(EquilibriumError):
    pass


class RevisionError(ValueError):
    pass


def profile_label(game: Game, profile: StrategyProfile) -> str:
    if profile.is_pure:
        return format_profile(game, profile)
    return "mixed:" + ";".join(np.array2string(s.rows, precision=4, separator=",").replace("\n", "") for s in profile.strategies)


def ex_ante_risk(game: Game, specs: Sequence[RiskMeasureSpec], profile: StrategyProfile, player) -> float:
    i = game.player_index(player)
    return evaluate(specs[i], average_loss(game, profile, i))


def ex_ante_risks(game: Game, specs, profile) -> list[float]:
    return [ex_ante_risk(game, specs, profile, i) for i in range(game.n_players)]


# --- ex ante best response -------------------------------------------------------


def _br_lp(game: Game, spec: RiskMeasureSpec, i: int, C: np.ndarray) -> LinearProgram:
    """LP minimizing the ex ante risk over player ``i``'s behavioral strategies.

    ``C[t, a]`` is the loss at type profile ``t`` when ``i`` plays ``a``.
    AV@R terms use the epigraph form ``eta + cap * E[(L - eta)^+]``.
    Variables are the strategy rows followed by the epigraph auxiliaries.
    """
    p = game.prior
    n_t, n_a = game.type_shape[i], game.action_shape[i]
    own = own_type_of_profiles(game, i)
    nx = n_t * n_a
    support = np.flatnonzero(p > 0)
    loss_rows = np.zeros((p.size, nx))
    for t in range(p.size):
        loss_rows[t, own[t] * n_a : (own[t] + 1) * n_a] = C[t]

    cost = [0.0] * nx
    bounds: list[tuple] = [(0.0, 1.0)] * nx
    cuts = []  # (aux coefficients, x coefficients): aux @ v - x_coef @ x >= 0

    def new_var(c, lo, hi):
        cost.append(c)
        bounds.append((lo, hi))
        return len(cost) - 1

    x_cost = np.zeros(nx)
    if isinstance(spec, PolytopeDual):
        spec.validate_for(p)
        u = new_var(1.0, None, None)
        for V in spec.vertices:
            cuts.append(({u: 1.0}, (p * V)[support] @ loss_rows[support]))
    else:
        for w, a in avar_components(spec):
            if w == 0:
                continue
            if a == 0:
                x_cost += w * (p[support] @ loss_rows[support])
            elif a == 1:
                u = new_var(w, None, None)
                cuts.extend(({u: 1.0}, loss_rows[t]) for t in support)
            else:
                eta = new_var(w, None, None)
                for t in support:
                    s = new_var(w * cap(a) * p[t], 0.0, None)
                    cuts.append(({s: 1.0, eta: 1.0}, loss_rows[t]))
    n = len(cost)
    c_vec = np.array(cost)
    c_vec[:nx] += x_cost
    A = np.zeros((len(cuts) + n_t, n))
    for r, (aux, xc) in enumerate(cuts):
        A[r, :nx] = -xc
        for j, v in aux.items():
            A[r, j] += v
    for k in range(n_t):
        A[len(cuts) + k, k * n_a : (k + 1) * n_a] = 1.0
    senses = (GE,) * len(cuts) + (EQ,) * n_t
    b = np.concatenate([np.zeros(len(cuts)), np.ones(n_t)])
    return LinearProgram(c_vec, A, senses, b, bounds=tuple(bounds))


def _risk_of_rows(game, spec, i, C, rows) -> float:
    own = own_type_of_profiles(game, i)
    values = np.einsum("ta,ta->t", C, rows[own])
    return evaluate(spec, RandomLoss(values, game.prior))


@dataclass
class BestResponse:
    strategy: BehavioralStrategy
    risk: float
    lp_value: float


def best_response_ex_ante(game: Game, specs, player, profile: StrategyProfile, pivot_rule: str = "dantzig") -> BestResponse:
    """Risk-minimizing behavioral strategy of ``player`` against ``profile``'s opponents.

    The LP optimum fixes the best attainable risk; if some pure strategy
    attains it, the first one in canonical order is returned instead of the
    LP vertex.
    """
    i = game.player_index(player)
    spec = specs[i]
    C = deviation_losses(game, profile, i)
    sol = solve_or_raise(_br_lp(game, spec, i, C), pivot_rule=pivot_rule)
    n_t, n_a = game.type_shape[i], game.action_shape[i]
    v_star = sol.objective
    if n_a**n_t <= PURE_ENUM_LIMIT:
        for acts in pure_strategies(game, i):
            rows = np.zeros((n_t, n_a))
            rows[np.arange(n_t), acts] = 1.0
            r = _risk_of_rows(game, spec, i, C, rows)
            if r <= v_star + 1e-9 * max(1.0, abs(v_star)):
                return BestResponse(BehavioralStrategy(game.players[i], rows), r, v_star)
    rows = np.clip(sol.x[: n_t * n_a].reshape(n_t, n_a), 0.0, None)
    rows /= rows.sum(axis=1, keepdims=True)
    strat = BehavioralStrategy(game.players[i], rows)
    return BestResponse(strat, _risk_of_rows(game, spec, i, C, rows), v_star)


# --- certificates ------------------------------------------------------------------


@dataclass
class DeviationEntry:
    player: str
    incumbent: float
    best_deviation: str
    deviation_risk: float
    own_type: str | None = None
    measure: str | None = None
    action_risks: dict | None = None

    @property
    def gain(self) -> float:
        return self.incumbent - self.deviation_risk

    def to_dict(self) -> dict:
        d = {"player": self.player}
        if self.own_type is not None:
            d["type"] = self.own_type
        if self.measure is not None:
            d["measure"] = self.measure
        if self.action_risks is not None:
            d["action_risks"] = self.action_risks
        d.update(
            incumbent=self.incumbent,
            best_deviation=self.best_deviation,
            deviation_risk=self.deviation_risk,
            gain=self.gain,
        )
        return d


@dataclass
class EquilibriumCertificate:
    profile: str
    kind: str
    entries: list[DeviationEntry]
    tol: float
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return all(e.gain <= self.tol for e in self.entries)

    @property
    def max_gain(self) -> float:
        return max((e.gain for e in self.entries), default=0.0)

    def to_dict(self) -> dict:
        d = {
            "profile": self.profile,
            "kind": self.kind,
            "verdict": "equilibrium" if self.verdict else "not an equilibrium",
            "tol": self.tol,
            "max_gain": self.max_gain,
            "entries": [e.to_dict() for e in self.entries],
        }
        d.update(self.extra)
        return d


def _strategy_label(game: Game, i: int, strat: BehavioralStrategy) -> str:
    if strat.is_pure:
        acts = strat.pure_actions()
        return "".join(game.action_sets[i][a] for a in acts) if all(len(a) == 1 for a in game.action_sets[i]) else "|".join(
            game.action_sets[i][a] for a in acts
        )
    return np.array2string(strat.rows, precision=4, separator=",").replace("\n", "")


def best_pure_deviation(game: Game, specs, player, profile: StrategyProfile) -> tuple[tuple[int, ...], float]:
    """Lowest-risk pure strategy of ``player`` (first in canonical order on ties)."""
    i = game.player_index(player)
    C = deviation_losses(game, profile, i)
    best, best_r = None, np.inf
    n_t, n_a = game.type_shape[i], game.action_shape[i]
    for acts in pure_strategies(game, i):
        rows = np.zeros((n_t, n_a))
        rows[np.arange(n_t), acts] = 1.0
        r = _risk_of_rows(game, specs[i], i, C, rows)
        if r < best_r - 1e-12:
            best, best_r = acts, r
    return best, best_r


def check_rane(game: Game, specs, profile: StrategyProfile, tol: float = DEFAULT_TOL, pivot_rule: str = "dantzig") -> EquilibriumCertificate:
    """Certify (or refute) a RANE against all mixed deviations.

    ``extra["pure_deviation_verdict"]`` reports the weaker check against pure
    deviations only.
    """
    check_profile(game, profile)
    entries, pure_entries = [], []
    for i in range(game.n_players):
        inc = ex_ante_risk(game, specs, profile, i)
        br = best_response_ex_ante(game, specs, i, profile, pivot_rule=pivot_rule)
        entries.append(DeviationEntry(game.players[i], inc, _strategy_label(game, i, br.strategy), br.risk))
        if game.action_shape[i] ** game.type_shape[i] <= PURE_ENUM_LIMIT:
            acts, r = best_pure_deviation(game, specs, i, profile)
            lab = _strategy_label(game, i, BehavioralStrategy.pure(game.players[i], acts, game.action_shape[i]))
            pure_entries.append(DeviationEntry(game.players[i], inc, lab, r))
    pure_ok = all(e.gain <= tol for e in pure_entries) if pure_entries else None
    return EquilibriumCertificate(
        profile_label(game, profile),
        "RANE",
        entries,
        tol,
        {"pure_deviation_verdict": pure_ok, "pure_entries": [e.to_dict() for e in pure_entries]},
    )


@dataclass
class PureRaneResult:
    risks: dict[str, list[float]]
    pure_deviation_set: list[str]
    mixed_deviation_set: list[str]
    certificates: dict[str, EquilibriumCertificate]

    def to_dict(self) -> dict:
        return {
            "pure_deviation_rane": self.pure_deviation_set,
            "rane": self.mixed_deviation_set,
            "risks": self.risks,
            "certificates": {k: c.to_dict() for k, c in self.certificates.items()},
        }


def count_pure_profiles(game: Game) -> int:
    out = 1
    for i in range(game.n_players):
        out *= game.action_shape[i] ** game.type_shape[i]
    return out


def solve_rane_pure(game: Game, specs, tol: float = DEFAULT_TOL, max_profiles: int = 10**6) -> PureRaneResult:
    """Enumerate pure profiles; certify those that survive pure deviations against mixed ones too."""
    n = count_pure_profiles(game)
    if n > max_profiles:
        raise EquilibriumError(f"{n} pure profiles exceed the enumeration cap {max_profiles}")
    risks: dict[str, list[float]] = {}
    pure_set, full_set, certs = [], [], {}
    per_player = [pure_strategies(game, i) for i in range(game.n_players)]
    table: dict[tuple, list[float]] = {}
    for combo in itertools.product(*per_player):
        prof = pure_profile(game, combo)
        r = ex_ante_risks(game, specs, prof)
        table[combo] = r
        risks[format_profile(game, prof)] = r
    for combo, r in table.items():
        is_ne = True
        for i in range(game.n_players):
            for alt in per_player[i]:
                other = list(combo)
                other[i] = alt
                if table[tuple(other)][i] < r[i] - tol:
                    is_ne = False
                    break
            if not is_ne:
                break
        if is_ne:
            prof = pure_profile(game, combo)
            label = format_profile(game, prof)
            pure_set.append(label)
            cert = check_rane(game, specs, prof, tol)
            certs[label] = cert
            if cert.verdict:
                full_set.append(label)
    return PureRaneResult(risks, pure_set, full_set, certs)


def _project_rows(X: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    n = X.shape[1]
    U = -np.sort(-X, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    idx = np.arange(1, n + 1)
    rho = np.count_nonzero(U - css / idx > 0, axis=1)
    theta = css[np.arange(X.shape[0]), rho - 1] / rho
    return np.maximum(X - theta[:, None], 0.0)


def risk_gradient(game: Game, specs, profile: StrategyProfile, player) -> np.ndarray:
    """A subgradient of the ex ante risk in the player's own strategy rows.

    Uses the optimal dual of the current loss: the risk is the maximum of
    linear functions ``E[L Z]``, so the active one's gradient is a subgradient.
    """
    i = game.player_index(player)
    C = deviation_losses(game, profile, i)
    Z = optimal_dual(specs[i], average_loss(game, profile, i))
    w = game.prior * Z
    own = own_type_of_profiles(game, i)
    G = np.zeros((game.type_shape[i], game.action_shape[i]))
    np.add.at(G, own, w[:, None] * C)
    return G


def _uniform_or_random(game: Game, seed: int | None) -> StrategyProfile:
    rng = np.random.default_rng(seed) if seed is not None else None
    strats = []
    for i in range(game.n_players):
        shape = (game.type_shape[i], game.action_shape[i])
        rows = rng.dirichlet(np.ones(shape[1]), size=shape[0]) if rng is not None else np.full(shape, 1.0 / shape[1])
        strats.append(BehavioralStrategy(game.players[i], rows))
    return StrategyProfile(tuple(strats))


@dataclass
class DynamicsConfig:
    """Settings for :func:`solve_rane_mixed`.

    ``method="best-response"`` moves each player a step ``damping`` toward an
    exact best response (``"harmonic"`` gives steps ``1/(k+2)``).
    ``method="extragradient"`` takes projected extragradient steps along risk
    subgradients with step ``step`` scaled by the largest absolute loss.
    """

    method: str = "extragradient"
    max_iters: int = 20000
    damping: float | str = "harmonic"
    step: float = 0.1
    tol: float = 1e-6
    seed: int | None = None
    check_every: int = 50

    def __post_init__(self):
        if self.method not in ("best-response", "extragradient"):
            raise ValueError(f"unknown dynamics {self.method!r}")
        if not self.tol > 0 or self.max_iters < 1:
            raise ValueError("tol must be positive and max_iters at least 1")


def _max_gain(game, specs, beta) -> tuple[float, list[BestResponse]]:
    brs = [best_response_ex_ante(game, specs, i, beta) for i in range(game.n_players)]
    return max(ex_ante_risk(game, specs, beta, i) - br.risk for i, br in enumerate(brs)), brs


def solve_rane_mixed(
    game: Game, specs, config: DynamicsConfig | None = None, start: StrategyProfile | None = None
) -> tuple[StrategyProfile, EquilibriumCertificate]:
    """Search for a (possibly mixed) RANE by learning dynamics.

    Starts from ``start``, a seeded random profile, or uniform play.  Returns
    a profile whose :func:`check_rane` certificate passes at ``config.tol``;
    otherwise raises :class:`NonConvergence`.
    """
    cfg = config or DynamicsConfig()
    beta = start if start is not None else _uniform_or_random(game, cfg.seed)
    check_profile(game, beta)
    gain = np.inf
    if cfg.method == "best-response":
        for k in range(cfg.max_iters):
            gain, brs = _max_gain(game, specs, beta)
            if gain <= cfg.tol:
                cert = check_rane(game, specs, beta, cfg.tol)
                if cert.verdict:
                    return beta, cert
            d = 1.0 / (k + 2) if cfg.damping == "harmonic" else float(cfg.damping)
            beta = StrategyProfile(
                tuple(
                    BehavioralStrategy(game.players[i], (1 - d) * beta[i].rows + d * brs[i].strategy.rows)
                    for i in range(game.n_players)
                )
            )
    else:
        scale = max(max(float(np.max(np.abs(t))) for t in game.losses), 1e-12)
        eta = cfg.step / scale

        def step(base, at):
            return StrategyProfile(
                tuple(
                    BehavioralStrategy(game.players[i], _project_rows(base[i].rows - eta * risk_gradient(game, specs, at, i)))
                    for i in range(game.n_players)
                )
            )

        for k in range(cfg.max_iters):
            if k % cfg.check_every == 0:
                gain, _ = _max_gain(game, specs, beta)
                log.debug("extragradient iteration %d: max gain %.3g", k, gain)
                if gain <= cfg.tol:
                    cert = check_rane(game, specs, beta, cfg.tol)
                    if cert.verdict:
                        return beta, cert
            beta = step(beta, step(beta, beta))
    raise NonConvergence(f"no convergence within {cfg.max_iters} iterations (last max gain {gain:.3g})")


# --- interim checks ------------------------------------------------------------------


def _replace_cell(loss: RandomLoss, cell: np.ndarray, values: np.ndarray) -> RandomLoss:
    v = loss.values.copy()
    v[cell] = values
    return RandomLoss(v, loss.probs)


def _interim_check(game: Game, specs, conds: Sequence[ConditionalDual], profile, tol, mixed, kind, measures=None):
    game.require_full_support()
    check_profile(game, profile)
    entries = []
    for i in range(game.n_players):
        part = information_partition(game, i)
        C = deviation_losses(game, profile, i)
        L = average_loss(game, profile, i)
        cond = conds[i]
        for k, cell in enumerate(part.cells):
            inc = conditional_evaluate(specs[i], cond, L, part, k)
            best_a, best_r = None, np.inf
            per_action = {}
            for a in range(game.action_shape[i]):
                r = conditional_evaluate(specs[i], cond, _replace_cell(L, cell, C[cell, a]), part, k)
                per_action[game.action_sets[i][a]] = r
                if r < best_r - 1e-12:
                    best_a, best_r = a, r
            label = game.action_sets[i][best_a]
            if mixed:
                _, x = min_conditional_risk(specs[i], cond, C, game.prior, part, k)
                r_mixed = conditional_evaluate(specs[i], cond, _replace_cell(L, cell, C[cell] @ x), part, k)
                if r_mixed < best_r - 1e-9 * max(1.0, abs(best_r)):
                    best_r = r_mixed
                    label = "mix" + np.array2string(x, precision=4, separator=",")
            m = measures[i][k].describe() if measures is not None else None
            entries.append(
                DeviationEntry(game.players[i], inc, label, best_r, own_type=game.type_sets[i][k], measure=m, action_risks=per_action)
            )
    return EquilibriumCertificate(profile_label(game, profile), kind, entries, tol, {"deviations": "mixed" if mixed else "pure"})


def check_rabne(game: Game, specs, profile: StrategyProfile, tol: float = DEFAULT_TOL, mixed: bool = False) -> EquilibriumCertificate:
    """Interim check with the unrevised conditional measures (unit conditional dual)."""
    conds = [ConditionalDual.unrevised(information_partition(game, i)) for i in range(game.n_players)]
    return _interim_check(game, specs, conds, profile, tol, mixed, "RABNE")


@dataclass
class PlayerRevision:
    player: str
    spec: RiskMeasureSpec
    loss: np.ndarray
    dual: np.ndarray
    cond: ConditionalDual
    measures: list[RevisedInterimMeasure]
    overridden: bool = False

    def to_dict(self, type_labels) -> dict:
        return {
            "player": self.player,
            "spec": spec_name(self.spec),
            "loss": self.loss.tolist(),
            "dual": self.dual.tolist(),
            "dual_source": "override" if self.overridden else "greedy",
            "conditional_dual": {t: float(z) for t, z in zip(type_labels, self.cond.weights)},
            "revised": {m.own_type: m.describe() for m in self.measures},
            "revised_levels": {
                m.own_type: (None if m.level is None else float(m.level)) for m in self.measures
            },
        }


@dataclass
class RevisionProfile:
    inducing: str
    players: list[PlayerRevision]

    @property
    def conds(self) -> list[ConditionalDual]:
        return [p.cond for p in self.players]

    def to_dict(self, game: Game) -> dict:
        return {
            "inducing_profile": self.inducing,
            "players": [p.to_dict(game.type_sets[i]) for i, p in enumerate(self.players)],
        }


def build_revision(
    game: Game, specs, profile: StrategyProfile, dual_override: Mapping | None = None, tol: float = 1e-9
) -> RevisionProfile:
    """Revised interim measures induced by the ex ante losses under ``profile``.

    ``dual_override`` maps player id (or index) to a density that must be an
    optimal dual for that player's loss; otherwise the greedy optimal dual is
    used.
    """
    game.require_full_support()
    overrides = {}
    for key, Z in (dual_override or {}).items():
        overrides[game.player_index(key)] = np.asarray(Z, dtype=float)
    out = []
    for i in range(game.n_players):
        L = average_loss(game, profile, i)
        if i in overrides:
            Z = overrides[i]
            if Z.size != len(L):
                raise RevisionError(f"override dual for player {game.players[i]} has {Z.size} entries, expected {len(L)}")
            if not is_dual_optimal(specs[i], L, Z, tol):
                raise RevisionError(
                    f"override dual for player {game.players[i]} is not optimal (gap {optimality_gap(specs[i], L, Z):.6g})"
                )
        else:
            Z = optimal_dual(specs[i], L)
        part = information_partition(game, i)
        cond = project_dual(Z, part, game.prior)
        out.append(PlayerRevision(game.players[i], specs[i], L.values, Z, cond, revise(specs[i], cond, part, game.type_sets[i]), i in overrides))
    return RevisionProfile(profile_label(game, profile), out)


def check_rrbne(
    game: Game, specs, revision: RevisionProfile, profile: StrategyProfile, tol: float = DEFAULT_TOL, mixed: bool = False
) -> EquilibriumCertificate:
    """Interim check in the revised game fixed by ``revision``.

    The revision stays fixed while deviations are evaluated; by default only
    pure action deviations are considered, ``mixed=True`` adds per-type mixed
    deviations.
    """
    cert = _interim_check(
        game, specs, revision.conds, profile, tol, mixed, "RRBNE", measures=[p.measures for p in revision.players]
    )
    cert.extra["revision_from"] = revision.inducing
    cert.extra["duals"] = {p.player: p.dual.tolist() for p in revision.players}
    return cert


# --- risk-preference revision complementarity ---------------------------------------


def _own_revision(game: Game, spec, i: int, profile: StrategyProfile) -> ConditionalDual:
    L = average_loss(game, profile, i)
    return project_dual(optimal_dual(spec, L), information_partition(game, i), game.prior)


@dataclass
class RprcReport:
    player: str
    pairs: int
    cells_checked: int
    applicable: int
    holds: int
    not_applicable: int
    violations: list[dict]
    exhaustive: bool

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "player": self.player,
            "pairs": self.pairs,
            "cells_checked": self.cells_checked,
            "applicable": self.applicable,
            "holds": self.holds,
            "not_applicable": self.not_applicable,
            "violations": self.violations[:20],
            "n_violations": len(self.violations),
            "status": "holds on checked pairs" if self.ok else "violated",
            "coverage": "exhaustive over pure pairs" if self.exhaustive else "premise sampled, not proven",
        }


def check_rprc(
    game: Game,
    spec: RiskMeasureSpec,
    player,
    pairs: Sequence[tuple[StrategyProfile, StrategyProfile]] | None = None,
    n_samples: int = 256,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> RprcReport:
    """Check the complementarity property on ordered profile pairs ``(b, b')``.

    Per own type: if ``b`` is strictly less risky than ``b'`` under the
    revision induced by ``b'``, it must also be strictly less risky under the
    revision induced by ``b``.  Without explicit pairs, all ordered pure pairs
    are used when there are at most ``n_samples`` of them, otherwise a seeded
    sample.
    """
    game.require_full_support()
    i = game.player_index(player)
    exhaustive = False
    if pairs is None:
        profiles = all_pure_profiles(game)
        all_pairs = len(profiles) ** 2
        if all_pairs <= n_samples:
            pairs = [(a, b) for a in profiles for b in profiles]
            exhaustive = True
        else:
            rng = np.random.default_rng(seed)
            idx = rng.integers(0, len(profiles), size=(n_samples, 2))
            pairs = [(profiles[a], profiles[b]) for a, b in idx]
    part = information_partition(game, i)
    cache: dict[int, tuple] = {}

    def info(prof):
        key = id(prof)
        if key not in cache:
            cache[key] = (average_loss(game, prof, i), _own_revision(game, spec, i, prof))
        return cache[key]

    applicable = holds = na = cells = 0
    violations = []
    for b, b2 in pairs:
        L_b, z_b = info(b)
        L_b2, z_b2 = info(b2)
        for k in range(len(part.cells)):
            cells += 1
            prem_l = conditional_evaluate(spec, z_b2, L_b, part, k)
            prem_r = conditional_evaluate(spec, z_b2, L_b2, part, k)
            if not prem_l < prem_r - tol:
                na += 1
                continue
            applicable += 1
            conc_l = conditional_evaluate(spec, z_b, L_b, part, k)
            conc_r = conditional_evaluate(spec, z_b, L_b2, part, k)
            if conc_l < conc_r - tol:
                holds += 1
            else:
                violations.append(
                    {
                        "beta": profile_label(game, b),
                        "beta_prime": profile_label(game, b2),
                        "type": game.type_sets[i][k],
                        "premise": [prem_l, prem_r],
                        "conclusion": [conc_l, conc_r],
                    }
                )
    return RprcReport(game.players[i], len(pairs), cells, applicable, holds, na, violations, exhaustive)


# --- implication verifiers -----------------------------------------------------------


def verify_rrbne_implies_rane(game: Game, specs, profile: StrategyProfile, tol: float = DEFAULT_TOL, mixed: bool = False) -> dict:
    """Run the RRBNE check under the profile's own revision and, if it passes, the RANE check.

    Reports three implications: RRBNE => RANE against pure deviations,
    RRBNE => RANE against mixed deviations (the full statement), and with
    ``mixed=True`` the RRBNE leg itself also guards against mixed per-type
    deviations.
    """
    rev = build_revision(game, specs, profile)
    rr = check_rrbne(game, specs, rev, profile, tol, mixed=mixed)
    out = {"profile": profile_label(game, profile), "rrbne": rr.to_dict(), "rrbne_deviations": "mixed" if mixed else "pure"}
    if not rr.verdict:
        out.update(applicable=False, implication_holds=True, pure_implication_holds=True)
        return out
    ra = check_rane(game, specs, profile, tol)
    pure_ok = ra.extra["pure_deviation_verdict"]
    out.update(
        applicable=True,
        rane=ra.to_dict(),
        implication_holds=bool(ra.verdict),
        pure_implication_holds=bool(pure_ok) if pure_ok is not None else None,
    )
    if not ra.verdict:
        out["note"] = (
            "RRBNE leg passed but a mixed ex ante deviation improves; "
            + ("implementation bug" if mixed or not pure_ok else "mixed deviation beats every pure one")
        )
    return out


def single_type_deviations(game: Game, i: int, profile: StrategyProfile):
    """Profiles where player ``i`` switches to action ``a`` at one type only."""
    for k in range(game.type_shape[i]):
        for a in range(game.action_shape[i]):
            rows = profile[i].rows.copy()
            if rows[k, a] == 1.0:
                continue
            rows[k] = 0.0
            rows[k, a] = 1.0
            yield k, a, profile.replace(i, BehavioralStrategy(game.players[i], rows))


def verify_rane_implies_rrbne(
    game: Game, specs, profile: StrategyProfile, tol: float = DEFAULT_TOL, rprc_samples: int = 64, seed: int = 0
) -> dict:
    """Check the premises of the converse direction, then the implication.

    The contrapositive argument only touches single-type deviations
    ``b_hat`` of ``profile``: it needs a positive projected weight of
    ``b_hat`` at the deviating type and complementarity on the pair
    ``(b_hat, profile)``.  Those relevant premises gate the implication.  The
    global premises (positive weights and complementarity for every pair) are
    also probed on a seeded sample of pure profiles and reported as refuted or
    "premise sampled, not proven"; they do not gate the check.
    """
    out: dict = {"profile": profile_label(game, profile)}
    if not game.fully_supported:
        out.update(premise_satisfied=False, reason="premise not satisfied: prior not fully supported")
        return out
    reasons = []
    rprc_reports = []
    global_refuted = []
    for i in range(game.n_players):
        z_star = _own_revision(game, specs[i], i, profile)
        if np.any(z_star.weights <= tol):
            k = int(np.argmin(z_star.weights))
            reasons.append(f"premise not satisfied: z(t_i)=0 for player {game.players[i]} type {game.type_sets[i][k]}")
        dev_pairs = []
        for k, a, prof_hat in single_type_deviations(game, i, profile):
            z_hat = _own_revision(game, specs[i], i, prof_hat)
            if z_hat.weights[k] <= tol:
                reasons.append(
                    f"premise not satisfied: z(t_i)=0 for player {game.players[i]} type {game.type_sets[i][k]} "
                    f"under deviation {profile_label(game, prof_hat)}"
                )
            dev_pairs.append((prof_hat, profile))
        rep_dev = check_rprc(game, specs[i], i, pairs=dev_pairs, tol=tol)
        rep_smp = check_rprc(game, specs[i], i, n_samples=rprc_samples, seed=seed, tol=tol)
        rprc_reports.append({"deviation_pairs": rep_dev.to_dict(), "sampled_pairs": rep_smp.to_dict()})
        if not rep_dev.ok:
            reasons.append(f"premise not satisfied: RPRC violated on a deviation pair for player {game.players[i]}")
        if not rep_smp.ok:
            global_refuted.append(f"RPRC violated on sampled pairs for player {game.players[i]}")
        for prof in all_pure_profiles(game) if count_pure_profiles(game) <= rprc_samples else []:
            if np.any(_own_revision(game, specs[i], i, prof).weights <= tol):
                global_refuted.append(f"z(t_i)=0 for player {game.players[i]} under {profile_label(game, prof)}")
                break
    out["rprc"] = rprc_reports
    out["global_premise"] = (
        "refuted: " + "; ".join(global_refuted) if global_refuted else "premise sampled, not proven"
    )
    if reasons:
        out.update(premise_satisfied=False, reason="; ".join(dict.fromkeys(reasons)))
        return out
    ra = check_rane(game, specs, profile, tol)
    rev = build_revision(game, specs, profile)
    rr = check_rrbne(game, specs, rev, profile, tol)
    out.update(
        premise_satisfied=True,
        rane=ra.to_dict(),
        rrbne=rr.to_dict(),
        applicable=bool(ra.verdict),
        implication_holds=(not ra.verdict) or rr.verdict,
    )
    return out


def check_weighted_average_dominance(
    game: Game, spec: RiskMeasureSpec, player, beta_star: StrategyProfile, beta_hat: StrategyProfile, tol: float = DEFAULT_TOL
) -> dict:
    """If ``beta_star`` is riskier than ``beta_hat`` in the ``beta_hat``-weighted
    average of revised interim risks, it must also be riskier in the
    ``beta_star``-weighted average."""
    from .conditional import weighted_interim

    game.require_full_support()
    i = game.player_index(player)
    part = information_partition(game, i)
    L_star, L_hat = average_loss(game, beta_star, i), average_loss(game, beta_hat, i)
    z_star = _own_revision(game, spec, i, beta_star)
    z_hat = _own_revision(game, spec, i, beta_hat)
    prem = (weighted_interim(spec, z_hat, L_star, part), weighted_interim(spec, z_hat, L_hat, part))
    conc = (weighted_interim(spec, z_star, L_star, part), weighted_interim(spec, z_star, L_hat, part))
    premise = prem[0] > prem[1] + tol
    holds = (not premise) or conc[0] > conc[1]
    return {
        "player": game.players[i],
        "beta_star": profile_label(game, beta_star),
        "beta_hat": profile_label(game, beta_hat),
        "premise": premise,
        "hat_weighted": list(prem),
        "star_weighted": list(conc),
        "holds": bool(holds),
    }


def risk_neutral_equivalent(game: Game, specs, profile: StrategyProfile, tol: float = 1e-9) -> list[np.ndarray]:
    """Per player, the distribution ``P * Z`` under which expected loss equals the ex ante risk."""
    out = []
    for i in range(game.n_players):
        L = average_loss(game, profile, i)
        Z = optimal_dual(specs[i], L)
        q = game.prior * Z
        r = evaluate(specs[i], L)
        if abs(float(q @ L.values) - r) > tol * max(1.0, abs(r)) or abs(q.sum() - 1.0) > tol:
            raise EquilibriumError(f"risk-neutral equivalent for player {game.players[i]} does not reproduce the risk")
        out.append(q)
    return out
