"""Reading and writing games, risk specs and dual overrides as JSON."""

from __future__ import annotations

import itertools
import json
import math
import re
from importlib import resources
from pathlib import Path

import numpy as np

from .game import Game, GameError
from .risk import RiskSpecError, spec_from_json, spec_to_json

BUNDLED = {"two_player_gh.json"}


class InputError(ValueError):
    """Malformed input file; the message names the file and, where possible, the line."""


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(path, text, key) -> str:
    line = _line_of(text, key) if key else None
    return f"{path}:{line}" if line else str(path)


def resolve_path(path: str | Path) -> Path | None:
    """Return a filesystem path, or ``None`` if ``path`` names a bundled file."""
    p = Path(path)
    if p.exists():
        return p
    if p.name in BUNDLED and len(p.parts) == 1:
        return None
    raise InputError(f"{path}: file not found")


def read_text(path: str | Path) -> tuple[str, str]:
    p = resolve_path(path)
    if p is None:
        name = Path(path).name
        return resources.files("riskgame.data").joinpath(name).read_text(), f"<bundled>/{name}"
    return p.read_text(), str(p)


def _parse_json(text: str, origin: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{origin}:{e.lineno}: malformed JSON ({e.msg})") from None


def game_from_json(doc: dict, text: str = "", origin: str = "<game>") -> Game:
    if not isinstance(doc, dict):
        raise InputError(f"{origin}: top level must be an object")
    for key in ("players", "types", "actions", "prior", "losses"):
        if key not in doc:
            raise InputError(f"{origin}: missing key {key!r}")
    players = doc["players"]
    if not isinstance(players, list) or not all(isinstance(p, str) for p in players):
        raise InputError(f"{_where(origin, text, 'players')}: 'players' must be an array of strings")
    for key in ("types", "actions", "losses"):
        missing = [p for p in players if p not in doc[key]]
        if missing:
            raise InputError(f"{_where(origin, text, key)}: {key!r} has no entry for player {missing[0]!r}")
    type_sets = [doc["types"][p] for p in players]
    action_sets = [doc["actions"][p] for p in players]
    tprofiles = list(itertools.product(*type_sets))
    aprofiles = list(itertools.product(*action_sets))
    prior = doc["prior"]
    if not isinstance(prior, list) or len(prior) != len(tprofiles):
        n = len(prior) if isinstance(prior, list) else "a non-array"
        raise InputError(f"{_where(origin, text, 'prior')}: prior has {n} entries, expected {len(tprofiles)}")
    try:
        prior_arr = np.asarray(prior, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{_where(origin, text, 'prior')}: prior entries must be numbers") from None
    if np.all(np.isfinite(prior_arr)) and abs(prior_arr.sum() - 1.0) > 1e-12:
        raise InputError(f"{_where(origin, text, 'prior')}: prior not normalized (sums to {prior_arr.sum():.15g})")
    losses = []
    expected = len(tprofiles) * len(aprofiles)
    for p in players:
        flat = doc["losses"][p]
        if not isinstance(flat, list):
            raise InputError(f"{_where(origin, text, 'losses')}: losses of player {p!r} must be an array")
        for k in range(expected):
            v = flat[k] if k < len(flat) else None
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                t, a = divmod(k, len(aprofiles))
                state = "missing" if v is None else f"invalid ({v!r})"
                raise InputError(
                    f"{_where(origin, text, 'losses')}: player {p!r} loss entry {state} at "
                    f"(t={''.join(tprofiles[t])}, a={''.join(aprofiles[a])}), flat index {k}"
                )
        if len(flat) > expected:
            raise InputError(f"{_where(origin, text, 'losses')}: player {p!r} has {len(flat)} loss entries, expected {expected}")
        losses.append(np.asarray(flat, dtype=float))
    try:
        return Game(tuple(players), tuple(map(tuple, type_sets)), tuple(map(tuple, action_sets)), tuple(losses), prior_arr, doc.get("metadata", {}))
    except GameError as e:
        raise InputError(f"{origin}: {e}") from None


def load_game(path: str | Path) -> Game:
    """Load and validate a game file (bundled example names are accepted)."""
    text, origin = read_text(path)
    return game_from_json(_parse_json(text, origin), text, origin)


def game_to_json(game: Game) -> dict:
    doc = {
        "players": list(game.players),
        "types": {p: list(ts) for p, ts in zip(game.players, game.type_sets)},
        "actions": {p: list(a) for p, a in zip(game.players, game.action_sets)},
        "prior": game.prior.tolist(),
        "losses": {p: tab.reshape(-1).tolist() for p, tab in zip(game.players, game.losses)},
    }
    if game.metadata:
        doc["metadata"] = dict(game.metadata)
    return doc


def dump_game(game: Game, path: str | Path | None = None) -> str:
    text = json.dumps(game_to_json(game), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def specs_from_json(obj, game: Game) -> list:
    """Per-player specs from one spec, a list, or an object keyed by player id."""
    try:
        if isinstance(obj, list):
            if len(obj) != game.n_players:
                raise InputError(f"expected {game.n_players} risk specs, got {len(obj)}")
            return [spec_from_json(o) for o in obj]
        if isinstance(obj, dict) and "kind" in obj:
            return [spec_from_json(obj)] * game.n_players
        if isinstance(obj, dict):
            missing = [p for p in game.players if p not in obj]
            if missing:
                raise InputError(f"no risk spec for player {missing[0]!r}")
            return [spec_from_json(obj[p]) for p in game.players]
    except (RiskSpecError, KeyError, TypeError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"invalid risk spec: {e}") from None
    raise InputError("risk specs must be an object or an array")


def load_specs(path: str | Path | None, game: Game) -> list:
    """Specs from a file, or the game's ``default_specs`` metadata if ``path`` is ``None``."""
    if path is None:
        default = game.metadata.get("default_specs")
        if default is None:
            raise InputError("no --specs given and the game has no default_specs")
        return specs_from_json(default, game)
    text, origin = read_text(path)
    try:
        return specs_from_json(_parse_json(text, origin), game)
    except InputError as e:
        raise InputError(f"{origin}: {e}") from None


def specs_to_json(specs, game: Game) -> dict:
    return {p: spec_to_json(s) for p, s in zip(game.players, specs)}


def load_dual_override(path: str | Path, game: Game) -> dict:
    """Dual override file: an object mapping player id to a density over type profiles."""
    text, origin = read_text(path)
    doc = _parse_json(text, origin)
    if not isinstance(doc, dict):
        raise InputError(f"{origin}: dual override must map player ids to arrays")
    out = {}
    for p, Z in doc.items():
        if p not in game.players:
            raise InputError(f"{_where(origin, text, p)}: unknown player {p!r}")
        try:
            out[p] = np.asarray([float(v) for v in Z])
        except (TypeError, ValueError):
            raise InputError(f"{_where(origin, text, p)}: dual for player {p!r} must be an array of numbers") from None
    return out
