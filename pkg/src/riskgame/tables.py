"""Markdown renderings of risk tables; numbers are rounded for display only."""

from __future__ import annotations

from decimal import ROUND_HALF_DOWN, Decimal

import numpy as np

from .game import (
    Game,
    average_loss,
    format_profile,
    information_partition,
    pure_profile,
    pure_strategies,
)


def display(x: float, places: int = 1) -> str:
    """Round half down on the shortest decimal repr, so 32.75 shows as 32.7."""
    if x is None:
        return "-"
    if not np.isfinite(x):
        return str(x)
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_DOWN))


def _u(s: str, best: bool) -> str:
    return f"<u>{s}</u>" if best else s


def _strategy_label(game: Game, i: int, acts) -> str:
    labels = [game.action_sets[i][a] for a in acts]
    return ("" if all(len(a) == 1 for a in game.action_sets[i]) else "|").join(labels)


def ex_ante_matrix(game: Game, risks: dict[str, list[float]], tol: float = 1e-9) -> str:
    """Two-player ex ante risk matrix; each cell is ``r1, r2`` with best responses underlined."""
    if game.n_players != 2:
        rows = ["| profile | " + " | ".join(f"player {p}" for p in game.players) + " |", "|---" * (game.n_players + 1) + "|"]
        for label, r in risks.items():
            rows.append(f"| {label} | " + " | ".join(display(v) for v in r) + " |")
        return "\n".join(rows)
    s1, s2 = pure_strategies(game, 0), pure_strategies(game, 1)
    grid = {}
    for a in s1:
        for b in s2:
            grid[(a, b)] = risks[format_profile(game, pure_profile(game, (a, b)))]
    header = "| player 1 \\ player 2 | " + " | ".join(_strategy_label(game, 1, b) for b in s2) + " |"
    lines = [header, "|---" * (len(s2) + 1) + "|"]
    for a in s1:
        cells = []
        for b in s2:
            r1, r2 = grid[(a, b)]
            best1 = r1 <= min(grid[(x, b)][0] for x in s1) + tol
            best2 = r2 <= min(grid[(a, y)][1] for y in s2) + tol
            cells.append(f"{_u(display(r1), best1)}, {_u(display(r2), best2)}")
        lines.append(f"| {_strategy_label(game, 0, a)} | " + " | ".join(cells) + " |")
    return "\n".join(lines)


def interim_tables(game: Game, cert, profile) -> str:
    """Per player and type: conditional losses of each action and its interim risk."""
    from .game import deviation_losses

    out = []
    by_key = {(e.player, e.own_type): e for e in cert.entries}
    for i in range(game.n_players):
        part = information_partition(game, i)
        C = deviation_losses(game, profile, i)
        for k, cell in enumerate(part.cells):
            e = by_key[(game.players[i], game.type_sets[i][k])]
            title = f"player {game.players[i]}, type {game.type_sets[i][k]}"
            if e.measure:
                title += f", {e.measure}"
            others = [game.type_profile_labels()[t] for t in cell]
            out.append(f"**{title}**\n")
            out.append("| action | " + " | ".join(others) + " | risk |")
            out.append("|---" * (len(others) + 2) + "|")
            risks = e.action_risks or {}
            best = min(risks.values()) if risks else None
            for a, lab in enumerate(game.action_sets[i]):
                r = risks.get(lab)
                vals = " | ".join(display(v) for v in C[cell, a])
                out.append(f"| {lab} | {vals} | {_u(display(r), r is not None and r <= best + cert.tol)} |")
            out.append("")
    return "\n".join(out)


def loss_vector_table(game: Game, profile, risks: list[float]) -> str:
    labels = game.type_profile_labels()
    lines = ["| player | " + " | ".join(labels) + " | ex ante risk |", "|---" * (len(labels) + 2) + "|"]
    for i in range(game.n_players):
        L = average_loss(game, profile, i).values
        lines.append(f"| {game.players[i]} | " + " | ".join(display(v) for v in L) + f" | {display(risks[i])} |")
    return "\n".join(lines)
