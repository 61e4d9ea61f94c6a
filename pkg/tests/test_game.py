import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskgame.game import (
    BehavioralStrategy,
    Game,
    GameError,
    StrategyProfile,
    UnconditionableTypeError,
    average_loss,
    conditional_distribution,
    deviation_losses,
    format_profile,
    information_partition,
    parse_profile,
    pure_strategies,
    random_game,
    restrict_loss,
    type_marginal,
)
from riskgame.io import load_game


def random_mixed(game, rng):
    return StrategyProfile(
        tuple(
            BehavioralStrategy(p, rng.dirichlet(np.ones(game.action_shape[i]), size=game.type_shape[i]))
            for i, p in enumerate(game.players)
        )
    )


def brute_average_loss(game, profile, i):
    """Sum over every action profile explicitly."""
    out = []
    for t in game.type_profiles():
        total = 0.0
        for a in game.action_profiles():
            w = np.prod([profile[j].rows[t[j], a[j]] for j in range(game.n_players)])
            total += w * game.losses[i][t + a]
        out.append(total)
    return np.array(out)


@pytest.mark.parametrize("shape", [((2, 2), (2, 2)), ((3, 1), (2, 3)), ((2, 2, 2), (2, 3, 2))])
def test_average_loss_matches_explicit_sum(shape):
    rng = np.random.default_rng(0)
    game = random_game(rng, *shape)
    prof = random_mixed(game, rng)
    for i in range(game.n_players):
        assert np.allclose(average_loss(game, prof, i).values, brute_average_loss(game, prof, i), atol=1e-10)
        C = deviation_losses(game, prof, i)
        own = [t[i] for t in game.type_profiles()]
        assert np.allclose(np.einsum("ta,ta->t", C, prof[i].rows[own]), average_loss(game, prof, i).values)


def test_canonical_order_on_example():
    game = load_game("two_player_gh.json")
    assert game.type_profile_labels() == ["GG", "GH", "HG", "HH"]
    assert ["".join(game.action_sets[j][a[j]] for j in range(2)) for a in game.action_profiles()] == ["Ss", "Sd", "Ds", "Dd"]
    # flat layout: type profile outer, action profile inner
    assert game.losses[0][0, 1, 1, 0] == 11  # (GH, Ds)
    part = information_partition(game, 1)
    assert [c.tolist() for c in part.cells] == [[0, 2], [1, 3]]


def test_profile_round_trip_and_errors():
    game = load_game("two_player_gh.json")
    for text in ["(DS,ds)", "(SS,dd)", "(DD,ss)"]:
        assert format_profile(game, parse_profile(game, text)) == text
    assert format_profile(game, parse_profile(game, " D|S , d s ")) == "(DS,ds)"
    with pytest.raises(GameError, match="expected 2"):
        parse_profile(game, "(DS)")
    with pytest.raises(GameError, match="cannot read"):
        parse_profile(game, "(DSD,ds)")
    with pytest.raises(GameError, match="cannot read|unknown"):
        parse_profile(game, "(XS,ds)")


def test_game_validation():
    base = {"players": ("1", "2"), "type_sets": (("a",), ("b",)), "action_sets": (("x", "y"), ("z",))}
    with pytest.raises(GameError, match="not normalized"):
        Game(**base, losses=(np.zeros(2), np.zeros(2)), prior=[0.99])
    with pytest.raises(GameError, match="entries"):
        Game(**base, losses=(np.zeros(3), np.zeros(2)), prior=[1.0])
    with pytest.raises(GameError, match="unique"):
        Game(("1", "1"), base["type_sets"], base["action_sets"], (np.zeros(2), np.zeros(2)), [1.0])
    with pytest.raises(GameError, match="finite"):
        Game(**base, losses=(np.array([0, np.inf]), np.zeros(2)), prior=[1.0])
    with pytest.raises(GameError, match="probability"):
        BehavioralStrategy("1", [[0.5, 0.6]])


def test_zero_mass_type_is_unconditionable():
    game = Game(("1", "2"), (("a", "b"), ("c",)), (("x",), ("y",)), (np.zeros(2), np.zeros(2)), [1.0, 0.0])
    assert not game.fully_supported
    with pytest.raises(UnconditionableTypeError):
        conditional_distribution(game, "1", "b")
    with pytest.raises(UnconditionableTypeError):
        restrict_loss(average_loss(game, StrategyProfile((BehavioralStrategy.pure("1", [0, 0], 1), BehavioralStrategy.pure("2", [0], 1))), 0), information_partition(game, 0), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3))
def test_conditionals_and_marginals_are_consistent(seed, n1, n2):
    game = random_game(np.random.default_rng(seed), (n1, n2), (2, 2))
    m1 = type_marginal(game, 0)
    assert m1.sum() == pytest.approx(1.0)
    joint = game.prior.reshape(n1, n2)
    for k in range(n1):
        assert np.allclose(conditional_distribution(game, 0, game.type_sets[0][k]) * m1[k], joint[k])


def test_pure_strategy_enumeration_is_lexicographic():
    game = load_game("two_player_gh.json")
    assert pure_strategies(game, 0) == list(itertools.product(range(2), repeat=2))
