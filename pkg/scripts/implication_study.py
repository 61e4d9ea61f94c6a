"""Randomized study of how the interim and ex ante equilibrium notions relate.

For seeded random two-player games with AV@R players, every pure profile that
passes the RRBNE check under its own revision is checked for RANE three ways:
against mixed ex ante deviations, against pure ones only, and with the RRBNE
leg itself guarding mixed per-type deviations.  The converse direction is
checked with its premises gating the implication.

    python3 scripts/implication_study.py --games 100 --out study.json
"""

import argparse
import json
import time
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from riskgame import equilibrium as eq
from riskgame.game import all_pure_profiles, format_profile, random_game
from riskgame.risk import AVaR


@dataclass
class StudyConfig:
    games: int = 100
    seed0: int = 0
    levels: tuple = (Fraction(1, 4), Fraction(1, 3), Fraction(1, 2))
    converse: bool = True


def run(cfg: StudyConfig) -> dict:
    keys = ("rrbne", "rane_mixed_fail", "rane_pure_fail", "strict_rrbne", "strict_rane_fail", "rane", "converse_premise", "converse_fail")
    counts = dict.fromkeys(keys, 0)
    examples = []
    for seed in range(cfg.seed0, cfg.seed0 + cfg.games):
        rng = np.random.default_rng(seed)
        game = random_game(rng)
        specs = [AVaR(cfg.levels[int(rng.integers(len(cfg.levels)))]) for _ in range(2)]
        for prof in all_pure_profiles(game):
            rev = eq.build_revision(game, specs, prof)
            rane = eq.check_rane(game, specs, prof)
            counts["rane"] += rane.verdict
            if eq.check_rrbne(game, specs, rev, prof).verdict:
                counts["rrbne"] += 1
                counts["rane_mixed_fail"] += not rane.verdict
                counts["rane_pure_fail"] += not rane.extra["pure_deviation_verdict"]
                if not rane.verdict and len(examples) < 5:
                    examples.append({"seed": seed, "profile": format_profile(game, prof), "mixed_gain": rane.max_gain})
            if eq.check_rrbne(game, specs, rev, prof, mixed=True).verdict:
                counts["strict_rrbne"] += 1
                counts["strict_rane_fail"] += not rane.verdict
            if cfg.converse and rane.verdict:
                out = eq.verify_rane_implies_rrbne(game, specs, prof)
                if out.get("premise_satisfied"):
                    counts["converse_premise"] += 1
                    counts["converse_fail"] += not out["implication_holds"]
    return {"config": {**asdict(cfg), "levels": [str(a) for a in cfg.levels]}, "counts": counts, "mixed_counterexamples": examples}


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--games", type=int, default=100)
    ap.add_argument("--seed0", type=int, default=0)
    ap.add_argument("--no-converse", action="store_true")
    ap.add_argument("--out")
    args = ap.parse_args()
    t0 = time.perf_counter()
    report = run(StudyConfig(games=args.games, seed0=args.seed0, converse=not args.no_converse))
    report["seconds"] = round(time.perf_counter() - t0, 2)
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    print(text)


if __name__ == "__main__":
    main()
