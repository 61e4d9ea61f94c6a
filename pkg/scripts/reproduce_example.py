"""Print the worked-example tables for the bundled G/H game as markdown.

    python3 scripts/reproduce_example.py > example_tables.md
"""

from riskgame import equilibrium as eq
from riskgame.game import parse_profile
from riskgame.io import load_game, load_specs
from riskgame.tables import display, ex_ante_matrix, interim_tables, loss_vector_table


def section(title: str, body: str) -> None:
    print(f"## {title}\n\n{body}\n")


def main() -> None:
    game = load_game("two_player_gh.json")
    specs = load_specs(None, game)
    res = eq.solve_rane_pure(game, specs)
    section("Ex ante risks (best responses underlined)", ex_ante_matrix(game, res.risks))
    section("RANE", "pure deviations: " + ", ".join(res.pure_deviation_set) + "\n\nmixed deviations: " + ", ".join(res.mixed_deviation_set))

    for label in ("(SS,sd)", "(DS,ds)", "(DD,sd)"):
        prof = parse_profile(game, label)
        section(f"Loss vectors at {label}", loss_vector_table(game, prof, eq.ex_ante_risks(game, specs, prof)))

    dd = parse_profile(game, "(DD,ss)")
    cert = eq.check_rabne(game, specs, dd)
    section(f"Unrevised interim risks at (DD,ss): {cert.to_dict()['verdict']}", interim_tables(game, cert, dd))

    ds = parse_profile(game, "(DS,ds)")
    cert = eq.check_rabne(game, specs, ds)
    section(f"Unrevised interim risks at (DS,ds): {cert.to_dict()['verdict']}", interim_tables(game, cert, ds))

    rev = eq.build_revision(game, specs, ds)
    lines = [f"player {p.player}: z = {[display(z, 3) for z in p.cond.weights]} -> {[m.describe() for m in p.measures]}" for p in rev.players]
    section("Revision induced by (DS,ds)", "\n".join(lines))
    cert = eq.check_rrbne(game, specs, rev, ds)
    section(f"Revised interim risks at (DS,ds): {cert.to_dict()['verdict']}", interim_tables(game, cert, ds))

    other = eq.build_revision(game, specs, parse_profile(game, "(DD,sd)"), {"1": [0, 1.5, 1, 1.5]})
    cert = eq.check_rrbne(game, specs, other, ds)
    section(f"(DS,ds) under the (DD,sd) revision: {cert.to_dict()['verdict']}", interim_tables(game, cert, ds))


if __name__ == "__main__":
    main()
