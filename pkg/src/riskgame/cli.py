"""Command-line entry point: ``riskgame <command> --game PATH [options]``.

Exit codes: 0 pass, 1 failed verdict, 2 usage or input error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import beliefs as bel
from . import equilibrium as eq
from .conditional import InfeasibleConditionalDual, verify_decomposition
from .game import GameError, information_partition, parse_profile
from .io import (
    InputError,
    load_dual_override,
    load_game,
    load_specs,
    read_text,
    specs_to_json,
)
from .lp import LpError
from .reconstruct import game_document, reconstruct
from .risk import (
    RiskSpecError,
    evaluate,
    is_dual_optimal,
    optimal_dual,
    optimality_gap,
    spec_name,
)
from .tables import display, ex_ante_matrix, interim_tables, loss_vector_table

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

COMMANDS = ("eval", "dual", "revise", "solve-rane", "check-rane", "check-rabne", "check-rrbne", "verify", "beliefs", "reconstruct")
CHECKS = ("decomposition", "rrbne-implies-rane", "rane-implies-rrbne", "rprc", "dominance")

log = logging.getLogger("riskgame")


@dataclass
class RunConfig:
    command: str
    game: str = "two_player_gh.json"
    specs: str | None = None
    profile: str | None = None
    revision_from: str | None = None
    dual_override: str | None = None
    beliefs: str | None = None
    checks: tuple[str, ...] = CHECKS
    mixed: bool = False
    samples: int = 200
    tol: float = 1e-9
    seed: int = 0
    fmt: str = "json"
    output: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if not self.tol > 0:
            raise InputError("--tol must be positive")
        if self.fmt not in ("json", "md"):
            raise InputError("--format must be json or md")
        bad = [c for c in self.checks if c not in CHECKS]
        if bad:
            raise InputError(f"unknown check {bad[0]!r}; choose from {', '.join(CHECKS)}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _need_profile(cfg: RunConfig, game):
    if cfg.profile is None:
        raise InputError(f"{cfg.command} needs --profile")
    return parse_profile(game, cfg.profile)


def _revision(cfg: RunConfig, game, specs, profile):
    source = parse_profile(game, cfg.revision_from) if cfg.revision_from else profile
    override = load_dual_override(cfg.dual_override, game) if cfg.dual_override else None
    return eq.build_revision(game, specs, source, dual_override=override, tol=cfg.tol)


# --- commands ------------------------------------------------------------------------


def cmd_eval(cfg, game, specs):
    prof = _need_profile(cfg, game)
    risks = eq.ex_ante_risks(game, specs, prof)
    report = {
        "profile": cfg.profile,
        "specs": [spec_name(s) for s in specs],
        "players": {
            p: {"loss": eq.average_loss(game, prof, i).values, "risk": risks[i]} for i, p in enumerate(game.players)
        },
    }
    md = loss_vector_table(game, prof, risks)
    return True, report, md


def cmd_dual(cfg, game, specs):
    prof = _need_profile(cfg, game)
    override = load_dual_override(cfg.dual_override, game) if cfg.dual_override else {}
    report, ok, lines = {"profile": cfg.profile, "players": {}}, True, []
    for i, p in enumerate(game.players):
        L = eq.average_loss(game, prof, i)
        entry = {"loss": L.values, "risk": evaluate(specs[i], L), "optimal_dual": optimal_dual(specs[i], L)}
        if p in override:
            Z = override[p]
            good = Z.size == len(L) and is_dual_optimal(specs[i], L, Z, cfg.tol)
            entry["override"] = {"dual": Z, "optimal": bool(good), "gap": optimality_gap(specs[i], L, Z) if Z.size == len(L) else None}
            ok &= good
        report["players"][p] = entry
        lines.append(f"player {p}: Z = [{', '.join(display(z, 3) for z in entry['optimal_dual'])}]")
    return ok, report, "\n".join(lines)


def cmd_revise(cfg, game, specs):
    source = cfg.revision_from or cfg.profile
    if source is None:
        raise InputError("revise needs --profile or --revision-from")
    prof = parse_profile(game, source)
    override = load_dual_override(cfg.dual_override, game) if cfg.dual_override else None
    rev = eq.build_revision(game, specs, prof, dual_override=override, tol=cfg.tol)
    report = rev.to_dict(game)
    lines = ["| player | type | z | revised measure |", "|---|---|---|---|"]
    for p in rev.players:
        for m, z in zip(p.measures, p.cond.weights):
            lines.append(f"| {p.player} | {m.own_type} | {display(z, 3)} | {m.describe()} |")
    return True, report, "\n".join(lines)


def cmd_solve_rane(cfg, game, specs):
    res = eq.solve_rane_pure(game, specs, tol=cfg.tol)
    report = res.to_dict()
    md = ex_ante_matrix(game, res.risks, cfg.tol)
    md += "\n\npure-deviation RANE: " + ", ".join(res.pure_deviation_set)
    md += "\nRANE (mixed deviations): " + ", ".join(res.mixed_deviation_set)
    return bool(res.mixed_deviation_set), report, md


def cmd_check_rane(cfg, game, specs):
    prof = _need_profile(cfg, game)
    cert = eq.check_rane(game, specs, prof, cfg.tol)
    md = "\n".join(
        f"player {e.player}: incumbent {display(e.incumbent)}, best deviation {e.best_deviation} at {display(e.deviation_risk)}"
        for e in cert.entries
    )
    return cert.verdict, cert.to_dict(), md + f"\n\nverdict: {cert.to_dict()['verdict']}"


def cmd_check_rabne(cfg, game, specs):
    prof = _need_profile(cfg, game)
    cert = eq.check_rabne(game, specs, prof, cfg.tol, mixed=cfg.mixed)
    return cert.verdict, cert.to_dict(), interim_tables(game, cert, prof) + f"\nverdict: {cert.to_dict()['verdict']}"


def cmd_check_rrbne(cfg, game, specs):
    prof = _need_profile(cfg, game)
    rev = _revision(cfg, game, specs, prof)
    cert = eq.check_rrbne(game, specs, rev, prof, cfg.tol, mixed=cfg.mixed)
    return cert.verdict, cert.to_dict(), interim_tables(game, cert, prof) + f"\nverdict: {cert.to_dict()['verdict']}"


def cmd_verify(cfg, game, specs):
    prof = _need_profile(cfg, game)
    report, ok = {"profile": cfg.profile}, True
    if "decomposition" in cfg.checks:
        dec = {}
        for i, p in enumerate(game.players):
            r = verify_decomposition(
                specs[i], eq.average_loss(game, prof, i), information_partition(game, i), cfg.samples, cfg.seed, cfg.tol
            )
            dec[p] = r.to_dict()
            ok &= r.passed
        report["decomposition"] = dec
    if "rrbne-implies-rane" in cfg.checks:
        r = eq.verify_rrbne_implies_rane(game, specs, prof, cfg.tol, mixed=cfg.mixed)
        report["rrbne-implies-rane"] = r
        ok &= bool(r["implication_holds"])
    if "rane-implies-rrbne" in cfg.checks:
        r = eq.verify_rane_implies_rrbne(game, specs, prof, cfg.tol, seed=cfg.seed)
        report["rane-implies-rrbne"] = r
        ok &= bool(r.get("implication_holds", True))
    if "rprc" in cfg.checks:
        reps = [eq.check_rprc(game, specs[i], i, n_samples=cfg.samples, seed=cfg.seed, tol=cfg.tol) for i in range(game.n_players)]
        report["rprc"] = [r.to_dict() for r in reps]
        ok &= all(r.ok for r in reps)
    if "dominance" in cfg.checks:
        out = []
        for i in range(game.n_players):
            for _, _, hat in eq.single_type_deviations(game, i, prof):
                r = eq.check_weighted_average_dominance(game, specs[i], i, prof, hat, cfg.tol)
                out.append(r)
                ok &= r["holds"]
        report["dominance"] = out
    md = "\n".join(f"- {k}: {_summary(k, v)}" for k, v in report.items() if k != "profile")
    return ok, report, md


def _summary(key, value) -> str:
    if key == "decomposition":
        return ", ".join(f"player {p} {'pass' if r['pass'] else 'FAIL'} (gap {r['gap']:.2e})" for p, r in value.items())
    if key in ("rrbne-implies-rane", "rane-implies-rrbne"):
        if value.get("premise_satisfied") is False:
            return value["reason"]
        return "implication holds" if value.get("implication_holds") else "implication violated"
    if key == "rprc":
        return ", ".join(f"player {r['player']}: {r['status']} ({r['coverage']})" for r in value)
    if key == "dominance":
        return f"{sum(r['holds'] for r in value)}/{len(value)} pairs hold"
    return str(value)


def _load_beliefs(path, game) -> bel.BeliefSystem:
    text, origin = read_text(path)
    try:
        doc = json.loads(text)
        tabs = [np.asarray(doc[p], dtype=float) for p in game.players]
        return bel.BeliefSystem(game.type_shape, tuple(tabs))
    except (KeyError, ValueError, TypeError, json.JSONDecodeError, bel.BeliefError) as e:
        raise InputError(f"{origin}: invalid belief system ({e})") from None


def cmd_beliefs(cfg, game, specs):
    bs = _load_beliefs(cfg.beliefs, game) if cfg.beliefs else bel.BeliefSystem.from_prior(game.type_shape, game.prior)
    res = bel.check_belief_consistency(bs)
    report = {"consistency": res.to_dict()}
    md = f"beliefs: {res.to_dict()['verdict']}"
    ok = True
    if cfg.profile:
        com = bel.commonize(game, bs, parse_profile(game, cfg.profile), tol=cfg.tol)
        report["commonization"] = com.to_dict()
        ok = com.certified
        md += f"\ncommonization certified: {com.certified}; RABNE under common prior: {com.rabne_under_common_prior}"
    return ok, report, md


def cmd_reconstruct(cfg, game, specs):
    rep = reconstruct()
    report = rep.to_dict()
    if rep.feasible:
        report["game"] = game_document(rep.completion)
    md = "\n".join(
        [
            f"feasible with every published value: {rep.feasible_all}",
            f"conflicting values: {', '.join(rep.conflicts) or 'none'}",
            "completion: " + (", ".join(f"{t},{a}={v}" for (t, a), v in rep.completion.items()) if rep.completion else "none"),
        ]
    )
    return rep.feasible_all, report, md


HANDLERS = {
    "eval": cmd_eval,
    "dual": cmd_dual,
    "revise": cmd_revise,
    "solve-rane": cmd_solve_rane,
    "check-rane": cmd_check_rane,
    "check-rabne": cmd_check_rabne,
    "check-rrbne": cmd_check_rrbne,
    "verify": cmd_verify,
    "beliefs": cmd_beliefs,
    "reconstruct": cmd_reconstruct,
}


def _chain(exc: BaseException) -> str:
    parts = []
    while exc is not None:
        parts.append(f"{type(exc).__module__}.{type(exc).__name__}: {exc}")
        exc = exc.__cause__ or exc.__context__
    return " <- ".join(parts)


def run(cfg: RunConfig, out=None) -> int:
    """Execute one command, write its report, and return the exit code."""
    out = out or sys.stdout
    log.info("running %s on %s", cfg.command, cfg.game)
    try:
        game = load_game(cfg.game)
        specs = load_specs(cfg.specs, game) if cfg.command != "reconstruct" else None
        ok, report, md = HANDLERS[cfg.command](cfg, game, specs)
    except (InputError, GameError, RiskSpecError, eq.RevisionError, InfeasibleConditionalDual, bel.BeliefError) as e:
        print(f"error: {_chain(e)}", file=sys.stderr)
        return EXIT_USAGE
    except (LpError, eq.NonConvergence, eq.EquilibriumError, FloatingPointError) as e:
        print(f"numerical error: {_chain(e)}", file=sys.stderr)
        return EXIT_NUMERICAL
    if specs is not None:
        report = {"command": cfg.command, "specs": specs_to_json(specs, game), **report}
    text = json.dumps(_jsonable(report), indent=2) if cfg.fmt == "json" else md
    if cfg.output:
        Path(cfg.output).write_text(text + "\n")
    else:
        print(text, file=out)
    return EXIT_PASS if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riskgame", description="Risk-averse equilibria of finite games with a common prior.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--game", default="two_player_gh.json", help="game JSON (bundled example by default)")
    ap.add_argument("--specs", help="risk spec JSON; defaults to the game's default_specs")
    ap.add_argument("--profile", help='pure profile such as "(DS,ds)"')
    ap.add_argument("--revision-from", help="profile inducing the revision (defaults to --profile)")
    ap.add_argument("--dual-override", help="JSON mapping player id to an optimal dual density")
    ap.add_argument("--beliefs", help="belief system JSON mapping player id to a (types x others) table")
    ap.add_argument("--checks", default=",".join(CHECKS), help="comma-separated subset for verify")
    ap.add_argument("--mixed", action="store_true", help="also check mixed per-type deviations in interim checks")
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--tol", type=float, default=1e-9)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--format", dest="fmt", choices=("json", "md"), default="json")
    ap.add_argument("--output", help="write the report here instead of stdout")
    return ap


def main(argv=None) -> int:
    level = os.environ.get("RISKGAME_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            game=args.game,
            specs=args.specs,
            profile=args.profile,
            revision_from=args.revision_from,
            dual_override=args.dual_override,
            beliefs=args.beliefs,
            checks=tuple(c.strip() for c in args.checks.split(",") if c.strip()),
            mixed=args.mixed,
            samples=args.samples,
            tol=args.tol,
            seed=args.seed,
            fmt=args.fmt,
            output=args.output,
        )
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
