from fractions import Fraction

import numpy as np
import pytest

from riskgame.equilibrium import (
    BehavioralStrategy,
    DynamicsConfig,
    NonConvergence,
    RevisionError,
    best_response_ex_ante,
    build_revision,
    check_rabne,
    check_rane,
    check_rprc,
    check_rrbne,
    check_weighted_average_dominance,
    ex_ante_risk,
    risk_neutral_equivalent,
    single_type_deviations,
    solve_rane_mixed,
    solve_rane_pure,
    verify_rane_implies_rrbne,
    verify_rrbne_implies_rane,
)
from riskgame.game import (
    Game,
    StrategyProfile,
    all_pure_profiles,
    parse_profile,
    random_game,
)
from riskgame.io import load_game, load_specs
from riskgame.risk import AVaR, EssentialSup, Expectation, PolytopeDual, SpectralMixture

THIRD = Fraction(1, 3)


@pytest.fixture(scope="module")
def example():
    game = load_game("two_player_gh.json")
    return game, load_specs(None, game)


def matching_pennies():
    l1 = np.array([0.0, 2.0, 2.0, 0.0])
    return Game(("1", "2"), (("t",), ("t",)), (("H", "T"), ("h", "t")), (l1, 2.0 - l1), [1.0])


def grid_strategies(game, i, steps=8):
    """Behavioral strategies on a grid (two actions per type)."""
    n_t = game.type_shape[i]
    ticks = np.linspace(0, 1, steps + 1)
    for combo in np.array(np.meshgrid(*[ticks] * n_t)).T.reshape(-1, n_t):
        yield BehavioralStrategy(game.players[i], np.stack([combo, 1 - combo], axis=1))


def test_example_rane_sets(example):
    game, specs = example
    res = solve_rane_pure(game, specs)
    # canonical enumeration order
    assert res.pure_deviation_set == ["(SS,dd)", "(DS,ds)", "(DD,ss)"]
    assert res.mixed_deviation_set == res.pure_deviation_set
    assert res.risks["(SS,sd)"] == [48.625, 32.75]


def test_example_interim_certificates(example):
    game, specs = example
    dd = parse_profile(game, "(DD,ss)")
    cert = check_rabne(game, specs, dd)
    assert cert.verdict
    risks = {(e.player, e.own_type): e.action_risks for e in cert.entries}
    assert risks[("1", "G")] == {"S": 46.0, "D": 11.0}
    assert risks[("1", "H")] == {"S": 22.75, "D": 8.25}
    assert risks[("2", "G")] == {"s": 57.25, "d": 59.0}
    assert risks[("2", "H")] == {"s": 46.0, "d": 60.0}

    ds = parse_profile(game, "(DS,ds)")
    assert not check_rabne(game, specs, ds).verdict
    rev = build_revision(game, specs, ds)
    assert [m.describe() for m in rev.players[0].measures] == ["AV@R_1/6", "AV@R_1/2"]
    assert check_rrbne(game, specs, rev, ds).verdict
    other = build_revision(game, specs, parse_profile(game, "(DD,sd)"), {"1": [0, 1.5, 1, 1.5]})
    assert other.players[0].overridden
    assert not check_rrbne(game, specs, other, ds).verdict


def test_non_optimal_override_is_rejected(example):
    game, specs = example
    with pytest.raises(RevisionError, match="not optimal"):
        build_revision(game, specs, parse_profile(game, "(DS,ds)"), {"1": [0, 1.5, 1, 1.5]})
    with pytest.raises(RevisionError, match="entries"):
        build_revision(game, specs, parse_profile(game, "(DS,ds)"), {"1": [1, 1]})


@pytest.mark.parametrize(
    "spec",
    [AVaR(THIRD), AVaR(0), EssentialSup(), SpectralMixture(((0.5, 0.25), (0.5, 0.75)))],
    ids=["avar", "mean", "esssup", "spectral"],
)
def test_best_response_beats_a_strategy_grid(spec):
    rng = np.random.default_rng(11)
    for _ in range(8):
        game = random_game(rng)
        specs = [spec, spec]
        prof = all_pure_profiles(game)[int(rng.integers(16))]
        for i in range(2):
            br = best_response_ex_ante(game, specs, i, prof)
            assert ex_ante_risk(game, specs, prof.replace(i, br.strategy), i) == pytest.approx(br.risk, abs=1e-9)
            assert br.risk == pytest.approx(br.lp_value, abs=1e-8)
            grid_best = min(ex_ante_risk(game, specs, prof.replace(i, s), i) for s in grid_strategies(game, i))
            assert br.risk <= grid_best + 1e-9


def test_best_response_with_polytope_dual():
    rng = np.random.default_rng(12)
    game = random_game(rng)
    p = game.prior
    V = np.array([np.ones(4), np.eye(4)[0] / p[0]])  # expectation, or all weight on the first atom
    specs = [PolytopeDual(V, p), PolytopeDual(V, p)]
    prof = all_pure_profiles(game)[0]
    br = best_response_ex_ante(game, specs, 0, prof)
    grid_best = min(ex_ante_risk(game, specs, prof.replace(0, s), 0) for s in grid_strategies(game, 0))
    assert br.risk <= grid_best + 1e-9


def test_mixed_dynamics_find_matching_pennies_equilibrium():
    game = matching_pennies()
    specs = [Expectation(), Expectation()]
    beta, cert = solve_rane_mixed(game, specs, DynamicsConfig(seed=1))
    assert cert.verdict
    assert beta[0].rows[0] == pytest.approx([0.5, 0.5], abs=1e-3)
    assert beta[1].rows[0] == pytest.approx([0.5, 0.5], abs=1e-3)
    assert solve_rane_pure(game, specs).mixed_deviation_set == []


def test_mixed_dynamics_report_nonconvergence():
    game = matching_pennies()
    with pytest.raises(NonConvergence, match="no convergence"):
        solve_rane_mixed(game, [Expectation()] * 2, DynamicsConfig(method="best-response", max_iters=5, seed=3))


def test_mixed_certificate_is_stricter_than_pure():
    # a pure-deviation RANE may still be beaten by a mixed deviation: risk is convex in the mix
    rng = np.random.default_rng(2)
    found = False
    for _ in range(60):
        game = random_game(rng)
        specs = [AVaR(Fraction(1, 2))] * 2
        for cert in solve_rane_pure(game, specs).certificates.values():
            assert cert.extra["pure_deviation_verdict"]
            if not cert.verdict:
                found = True
                assert cert.max_gain > 1e-9
    assert found


def test_risk_neutral_equivalent_reproduces_the_risk(example):
    game, specs = example
    prof = parse_profile(game, "(SS,sd)")
    q1, q2 = risk_neutral_equivalent(game, specs, prof)
    assert q1.sum() == pytest.approx(1.0)
    assert q1 @ np.array([52, 59, 28, 7]) == pytest.approx(48.625)
    assert q2 @ np.array([52, 11, 28, 0]) == pytest.approx(32.75)


def test_expectation_makes_all_three_notions_agree():
    rng = np.random.default_rng(13)
    for _ in range(10):
        game = random_game(rng, (2, 3), (2, 2))
        specs = [Expectation()] * 2
        for prof in all_pure_profiles(game):
            rev = build_revision(game, specs, prof)
            v = {check_rane(game, specs, prof).verdict, check_rabne(game, specs, prof).verdict, check_rrbne(game, specs, rev, prof).verdict}
            assert len(v) == 1


def test_implication_verifiers_on_the_example(example):
    game, specs = example
    ds = parse_profile(game, "(DS,ds)")
    fwd = verify_rrbne_implies_rane(game, specs, ds)
    assert fwd["applicable"] and fwd["implication_holds"]
    back = verify_rane_implies_rrbne(game, specs, ds)
    assert "premise_satisfied" in back
    if back["premise_satisfied"]:
        assert back["implication_holds"]
    else:
        assert back["reason"].startswith("premise not satisfied")
    assert back["global_premise"].startswith(("refuted", "premise sampled"))


def test_rprc_report_coverage(example):
    game, specs = example
    rep = check_rprc(game, specs[0], 0)
    assert rep.exhaustive and rep.pairs == 256
    assert rep.applicable == rep.holds + len(rep.violations)
    assert rep.to_dict()["coverage"] == "exhaustive over pure pairs"
    sampled = check_rprc(game, specs[0], 0, n_samples=10)
    assert sampled.to_dict()["coverage"] == "premise sampled, not proven"


def test_weighted_average_dominance_on_single_type_deviations(example):
    game, specs = example
    prof = parse_profile(game, "(DD,ss)")
    for i in range(2):
        for _, _, hat in single_type_deviations(game, i, prof):
            out = check_weighted_average_dominance(game, specs[i], i, prof, hat)
            assert out["holds"]


def test_profile_validation(example):
    game, specs = example
    bad = StrategyProfile((BehavioralStrategy.pure("1", [0, 0], 2),))
    with pytest.raises(Exception, match="strategies"):
        check_rane(game, specs, bad)
