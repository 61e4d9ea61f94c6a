import pytest

from riskgame.io import game_from_json, load_game
from riskgame.reconstruct import (
    KNOWN_P1,
    UNKNOWN_P1,
    Claim,
    game_document,
    p2_source,
    published_claims,
    reconstruct,
    solve,
)


@pytest.fixture(scope="module")
def report():
    return reconstruct()


def test_single_conflicting_value_and_unique_completion(report):
    assert not report.feasible_all
    assert report.conflicts == ["interim risk player 1 type G action S vs ss"]
    # GH,Ss: player 2's (SS,sd) loss at HG is 28 and mirrors player 1 at GH,Ss.
    # HG,Dd: player 2 type H playing d against DD has AV@R_1/3 of {x, 60} equal to 60, so x = 60.
    # HH,Ds: player 2's (SS,sd) loss at HH is 0 and mirrors player 1 at HH,Ds.
    assert report.completion == {("GH", "Ss"): 28, ("HG", "Dd"): 60, ("HH", "Ds"): 0}


def test_completion_reproduces_every_other_value(report):
    for name, r in report.residuals.items():
        claim = next(c for c in published_claims() if c.name == name)
        if name in report.conflicts:
            assert abs(r) > claim.tol
        else:
            assert abs(r) <= claim.tol + 1e-12, name


def test_bundled_file_is_the_oracle_output(report):
    assert load_game("two_player_gh.json") == game_from_json(game_document(report.completion))


def test_symmetry_rule():
    assert p2_source("swap-types", "GH", "Ds") == ("HG", "Sd")
    assert p2_source("keep-types", "GH", "Ds") == ("GH", "Sd")
    game = load_game("two_player_gh.json")
    l1, l2 = game.loss_table(0), game.loss_table(1)
    for t in range(4):
        for a in range(4):
            ts, acts = divmod(t, 2), divmod(a, 2)
            t_sw = ts[1] * 2 + ts[0]
            a_sw = acts[1] * 2 + acts[0]
            assert l2[t, a] == l1[t_sw, a_sw]


def test_known_leaves_are_untouched():
    game = load_game("two_player_gh.json")
    l1 = game.loss_table(0)
    tps, aps = ["GG", "GH", "HG", "HH"], ["Ss", "Sd", "Ds", "Dd"]
    for (t, a), v in KNOWN_P1.items():
        assert l1[tps.index(t), aps.index(a)] == v
    assert len(KNOWN_P1) + len(UNKNOWN_P1) == 16


def test_oracle_reports_infeasibility_for_contradictory_claims():
    # two claims on the same unknown leaf with different targets
    a = Claim("GH,Ss is 3", 3, 0.0, lambda tb: tb.l1("GH", "Ss"))
    b = Claim("GH,Ss is 4", 4, 0.0, lambda tb: tb.l1("GH", "Ss"))
    assert solve([a], "swap-types", grid=range(5))
    assert solve([a, b], "swap-types", grid=range(5)) == []
