"""Constraint oracle completing the two-player G/H example game.

Only some leaf losses of the example are known directly.  The rest are
recovered by a finite search: candidate values on an integer grid are kept
only if the completed, symmetric game reproduces every published number
(leaf values, ex ante loss vectors, ex ante and interim risks).  When no
candidate reproduces everything, the oracle reports which published numbers
are mutually incompatible by re-solving with each one left out.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .game import RandomLoss
from .risk import evaluate_avar

TYPES = ("G", "H")
ACTIONS_1 = ("S", "D")
ACTIONS_2 = ("s", "d")
TYPE_PROFILES = tuple(a + b for a, b in itertools.product(TYPES, TYPES))
ACTION_PROFILES = tuple(a + b for a, b in itertools.product(ACTIONS_1, ACTIONS_2))
LEVEL = Fraction(1, 3)
DISPLAY_TOL = 0.06

# Player 1 leaves read directly off the worked example.
KNOWN_P1 = {
    ("GG", "Ss"): 52,
    ("GG", "Ds"): 11,
    ("GG", "Dd"): 59,
    ("GG", "Sd"): 52,
    ("GH", "Sd"): 59,
    ("GH", "Ds"): 11,
    ("GH", "Dd"): 59,
    ("HG", "Ss"): 28,
    ("HG", "Sd"): 59,
    ("HG", "Ds"): 11,
    ("HH", "Ss"): 7,
    ("HH", "Sd"): 7,
    ("HH", "Dd"): 60,
}
UNKNOWN_P1 = tuple(
    (t, a) for t in TYPE_PROFILES for a in ACTION_PROFILES if (t, a) not in KNOWN_P1
)

_MIRROR = {"S": "s", "D": "d", "s": "S", "d": "D"}

SYMMETRY_RULES = ("swap-types", "keep-types")


def p2_source(rule: str, t: str, a: str) -> tuple[str, str]:
    """Player 1 leaf that player 2's leaf ``(t, a)`` copies under a symmetry rule."""
    a1, a2 = a
    acts = _MIRROR[a2] + _MIRROR[a1]
    if rule == "swap-types":
        return t[::-1], acts
    if rule == "keep-types":
        return t, acts
    raise ValueError(f"unknown symmetry rule {rule!r}")


class _Table:
    """Completed loss table that records which player 1 leaves are read."""

    def __init__(self, p1: dict, rule: str):
        self.p1 = p1
        self.rule = rule
        self.reads: set = set()

    def l1(self, t, a):
        self.reads.add((t, a))
        return self.p1[(t, a)]

    def l2(self, t, a):
        return self.l1(*p2_source(self.rule, t, a))

    def loss(self, player: int, t: str, a: str):
        return self.l1(t, a) if player == 1 else self.l2(t, a)


def _avar(values, probs=None) -> float:
    values = np.asarray(values, dtype=float)
    probs = np.full(values.size, 1.0 / values.size) if probs is None else np.asarray(probs)
    return evaluate_avar(RandomLoss(values, probs), LEVEL)


def _ex_ante_vector(tab: _Table, player: int, s1: str, s2: str) -> list:
    """Loss vector over type profiles when player 1 plays ``s1`` and player 2 ``s2``."""
    out = []
    for t in TYPE_PROFILES:
        a = s1[TYPES.index(t[0])] + s2[TYPES.index(t[1])]
        out.append(tab.loss(player, t, a))
    return out


def _interim(tab: _Table, player: int, own: str, action: str, opp: str) -> float:
    """Unrevised interim AV@R of one type taking ``action`` against the opponent strategy ``opp``."""
    vals = []
    for other in TYPES:
        t = own + other if player == 1 else other + own
        oa = opp[TYPES.index(other)]
        a = action + oa if player == 1 else oa + action
        vals.append(tab.loss(player, t, a))
    return _avar(vals)


@dataclass(frozen=True)
class Claim:
    name: str
    target: float
    tol: float
    compute: Callable[[_Table], float]

    def residual(self, tab: _Table) -> float:
        return float(self.compute(tab)) - self.target


def published_claims() -> list[Claim]:
    claims: list[Claim] = [Claim("player 2 leaf GG,Ds", 52, 0.0, lambda tb: tb.l2("GG", "Ds"))]
    vectors = [
        ("player 1 losses (SS,sd)", 1, "SS", "sd", [52, 59, 28, 7]),
        ("player 2 losses (SS,sd)", 2, "SS", "sd", [52, 11, 28, 0]),
        ("player 1 losses (DS,ds)", 1, "DS", "ds", [59, 11, 59, 7]),
        ("player 1 losses (DD,sd)", 1, "DD", "sd", [11, 59, 11, 60]),
    ]
    for name, pl, s1, s2, vec in vectors:
        for k, v in enumerate(vec):
            claims.append(
                Claim(f"{name}[{TYPE_PROFILES[k]}]", v, 0.0, lambda tb, pl=pl, s1=s1, s2=s2, k=k: _ex_ante_vector(tb, pl, s1, s2)[k])
            )
    claims += [
        Claim("ex ante risk player 1 (SS,sd)", 48.6, DISPLAY_TOL, lambda tb: _avar(_ex_ante_vector(tb, 1, "SS", "sd"))),
        Claim("ex ante risk player 2 (SS,sd)", 32.7, DISPLAY_TOL, lambda tb: _avar(_ex_ante_vector(tb, 2, "SS", "sd"))),
    ]
    # Interim comparisons at (DD,ss): (player, own type, action, opponent strategy, printed value).
    interim = [
        (1, "G", "D", "ss", 11),
        (1, "G", "S", "ss", 42.4),
        (1, "H", "D", "ss", 8.3),
        (1, "H", "S", "ss", 22.8),
        (2, "G", "s", "DD", 57.3),
        (2, "G", "d", "DD", 59),
        (2, "H", "s", "DD", 46),
        (2, "H", "d", "DD", 60),
    ]
    for pl, own, act, opp, v in interim:
        claims.append(
            Claim(
                f"interim risk player {pl} type {own} action {act} vs {opp}",
                v,
                DISPLAY_TOL,
                lambda tb, pl=pl, own=own, act=act, opp=opp: _interim(tb, pl, own, act, opp),
            )
        )
    return claims


def _dependencies(claim: Claim, rule: str) -> set:
    probe = {k: 0 for k in itertools.product(TYPE_PROFILES, ACTION_PROFILES)}
    tab = _Table(probe, rule)
    claim.compute(tab)
    return {k for k in tab.reads if k in UNKNOWN_P1}


def _satisfied(claim: Claim, p1: dict, rule: str) -> bool:
    return abs(claim.residual(_Table(p1, rule))) <= claim.tol + 1e-12


def solve(claims: list[Claim], rule: str, grid=range(101)) -> list[dict]:
    """All grid assignments of the unknown leaves satisfying every claim (backtracking)."""
    deps = {c.name: _dependencies(c, rule) for c in claims}
    known_only = [c for c in claims if not deps[c.name]]
    base = dict(KNOWN_P1)
    probe = {**base, **{u: 0 for u in UNKNOWN_P1}}
    if not all(_satisfied(c, probe, rule) for c in known_only):
        return []
    order = list(UNKNOWN_P1)
    solutions = []

    def rec(k: int, assigned: dict):
        if k == len(order):
            solutions.append(dict(assigned))
            return
        u = order[k]
        done = set(order[: k + 1])
        active = [c for c in claims if deps[c.name] and u in deps[c.name] and deps[c.name] <= done]
        for v in grid:
            assigned[u] = v
            p1 = {**base, **assigned, **{w: 0 for w in order[k + 1 :]}}
            if all(_satisfied(c, p1, rule) for c in active):
                rec(k + 1, assigned)
            del assigned[u]

    rec(0, {})
    return solutions


@dataclass
class ReconstructionReport:
    rule: str
    feasible_all: bool
    solutions_all: list[dict]
    conflicts: list[str]
    solutions_relaxed: dict[str, list[dict]]
    completion: dict | None
    residuals: dict[str, float] = field(default_factory=dict)
    other_rules: dict[str, dict] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.completion is not None

    def to_dict(self) -> dict:
        def key(u):
            return f"{u[0]},{u[1]}"

        return {
            "symmetry_rule": self.rule,
            "feasible_with_all_claims": self.feasible_all,
            "solutions_with_all_claims": [{key(u): v for u, v in s.items()} for s in self.solutions_all],
            "conflicting_claims": self.conflicts,
            "solutions_without_claim": {
                n: [{key(u): v for u, v in s.items()} for s in sols] for n, sols in self.solutions_relaxed.items()
            },
            "completion": None if self.completion is None else {key(u): v for u, v in self.completion.items()},
            "residuals": self.residuals,
            "other_rules": self.other_rules,
        }


def reconstruct(rule: str = "swap-types") -> ReconstructionReport:
    """Run the oracle.

    If the full claim set is infeasible, each claim is dropped in turn; the
    completion is the unique solution obtained by dropping exactly one claim,
    if there is one.
    """
    claims = published_claims()
    sols = solve(claims, rule)
    conflicts, relaxed = [], {}
    completion = sols[0] if len(sols) == 1 else None
    if not sols:
        for c in claims:
            rest = [d for d in claims if d.name != c.name]
            s = solve(rest, rule)
            if s:
                conflicts.append(c.name)
                relaxed[c.name] = s
        uniq = [s for s in relaxed.values() if len(s) == 1]
        if len(conflicts) == 1 and uniq:
            completion = uniq[0][0]
    residuals = {}
    if completion is not None:
        p1 = {**KNOWN_P1, **completion}
        residuals = {c.name: c.residual(_Table(p1, rule)) for c in claims}
    others = {}
    for r in SYMMETRY_RULES:
        if r == rule:
            continue
        s = solve(claims, r)
        relaxations = None
        if not s:
            # Claims whose removal alone would make this rule feasible.
            relaxations = [c.name for c in claims if solve([d for d in claims if d.name != c.name], r)]
        others[r] = {"feasible_with_all_claims": bool(s), "single_claim_relaxations": relaxations}
    return ReconstructionReport(rule, bool(sols), sols, conflicts, relaxed, completion, residuals, others)


def completed_p1(completion: dict) -> dict:
    return {**KNOWN_P1, **completion}


def game_document(completion: dict, rule: str = "swap-types") -> dict:
    """Game JSON document for the completed table, with provenance metadata."""
    p1 = completed_p1(completion)
    tab = _Table(p1, rule)
    l1 = [p1[(t, a)] for t in TYPE_PROFILES for a in ACTION_PROFILES]
    l2 = [tab.l2(t, a) for t in TYPE_PROFILES for a in ACTION_PROFILES]
    return {
        "players": ["1", "2"],
        "types": {"1": list(TYPES), "2": list(TYPES)},
        "actions": {"1": list(ACTIONS_1), "2": list(ACTIONS_2)},
        "prior": [0.25] * 4,
        "losses": {"1": l1, "2": l2},
        "metadata": {
            "description": "two-player G/H example game, completed by the reconstruction oracle",
            "symmetry": "player 2 at (t1 t2, a1 a2) equals player 1 at (t2 t1, a2 a1) with action labels mirrored",
            "quoted_player_1": sorted(f"{t},{a}" for t, a in KNOWN_P1),
            "reconstructed_player_1": sorted(f"{t},{a}" for t, a in completion),
            "default_specs": {"kind": "avar", "alpha": {"num": 1, "den": 3}},
        },
    }
