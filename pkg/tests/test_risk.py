from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskgame.game import RandomLoss
from riskgame.lp import LinearProgram, solve
from riskgame.risk import (
    AVaR,
    EssentialSup,
    Expectation,
    PolytopeDual,
    RiskSpecError,
    SpectralMixture,
    ambiguity_set,
    avar_without_boundary_atom,
    check_coherence,
    evaluate,
    is_dual_feasible,
    is_dual_optimal,
    optimal_dual,
    optimality_gap,
    spec_from_json,
    spec_to_json,
)

LEVELS = [Fraction(0), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(3, 4), Fraction(1)]


def ru_formula(values, probs, alpha):
    """min_t t + E[(L - t)+] / (1 - alpha); the minimum sits at an atom."""
    if alpha == 1:
        return float(np.max(values[probs > 0]))
    return min(t + float(probs @ np.maximum(values - t, 0)) / (1 - float(alpha)) for t in values)


def lp_sup(spec, loss):
    """max E[L W] over the linear description of the dual set, via the LP solver."""
    S = ambiguity_set(spec, loss.probs)
    m = S.n_aux
    A = np.hstack([S.A_w, S.A_u]) if m else S.A_w
    c = np.concatenate([loss.probs * loss.values, np.zeros(m)])
    bounds = tuple(zip(S.lo, [None if np.isinf(h) else h for h in S.hi])) + tuple(
        (0.0, None if np.isinf(h) else h) for h in S.aux_hi
    )
    sol = solve(LinearProgram(c, A, S.senses, S.rhs, bounds=bounds, maximize=True))
    assert sol.ok
    return sol.objective


losses = st.integers(1, 7).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(-50, 50), min_size=n, max_size=n),
        st.lists(st.integers(1, 9), min_size=n, max_size=n),
    )
)


@settings(max_examples=200, deadline=None)
@given(losses, st.sampled_from(LEVELS))
def test_avar_matches_rockafellar_uryasev(data, alpha):
    vals, w = data
    p = np.array(w, float) / sum(w)
    loss = RandomLoss(np.array(vals, float), p)
    assert evaluate(AVaR(alpha), loss) == pytest.approx(ru_formula(loss.values, p, alpha), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(losses, st.sampled_from(LEVELS[:-1]))
def test_greedy_dual_is_feasible_and_optimal_against_lp(data, alpha):
    vals, w = data
    p = np.array(w, float) / sum(w)
    loss = RandomLoss(np.array(vals, float), p)
    spec = AVaR(alpha)
    Z = optimal_dual(spec, loss)
    assert is_dual_feasible(spec, Z, p)
    assert is_dual_optimal(spec, loss, Z)
    assert lp_sup(spec, loss) == pytest.approx(evaluate(spec, loss), abs=1e-8)


@pytest.mark.parametrize(
    "spec",
    [
        Expectation(),
        EssentialSup(),
        SpectralMixture(((0.5, Fraction(1, 3)), (0.5, Fraction(3, 4)))),
        SpectralMixture(((0.2, 0), (0.3, 0.5), (0.5, 1))),
    ],
    ids=["expectation", "esssup", "spectral-2", "spectral-3"],
)
def test_other_specs_agree_with_dual_lp(spec):
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = int(rng.integers(1, 7))
        loss = RandomLoss(rng.integers(0, 20, n).astype(float), rng.dirichlet(np.ones(n)))
        r = evaluate(spec, loss)
        assert lp_sup(spec, loss) == pytest.approx(r, abs=1e-8)
        Z = optimal_dual(spec, loss)
        assert is_dual_feasible(spec, Z, loss.probs)
        assert optimality_gap(spec, loss, Z) == pytest.approx(0.0, abs=1e-9)


def test_polytope_dual():
    p = np.full(3, 1 / 3)
    spec = PolytopeDual(np.array([[1, 1, 1], [3, 0, 0], [0, 1.5, 1.5]]), p)
    loss = RandomLoss([10.0, 4.0, 1.0], p)
    assert evaluate(spec, loss) == pytest.approx(10.0)
    assert optimal_dual(spec, loss).tolist() == [3, 0, 0]
    assert lp_sup(spec, loss) == pytest.approx(10.0)
    assert is_dual_feasible(spec, np.array([2, 0.5, 0.5]), p)  # midpoint of two vertices
    assert not is_dual_feasible(spec, np.array([0, 3, 0]), p)
    with pytest.raises(RiskSpecError, match="mean 1"):
        PolytopeDual(np.array([[2, 2, 2]]), p)


def test_closed_forms_on_the_example_losses():
    u = np.full(4, 0.25)
    third = AVaR(Fraction(1, 3))
    assert evaluate(third, RandomLoss([52, 59, 28, 7], u)) == 48.625
    assert evaluate(third, RandomLoss([52, 11, 28, 0], u)) == 32.75
    assert evaluate(AVaR(0), RandomLoss([1, 2, 3, 6], u)) == 3
    assert evaluate(EssentialSup(), RandomLoss([1, 2, 3, 6], [0.5, 0.5, 0, 0])) == 2


@pytest.mark.parametrize("spec", [AVaR(Fraction(1, 3)), EssentialSup(), Expectation(), SpectralMixture(((0.5, 0.25), (0.5, 0.9)))])
def test_coherence_harness_accepts_coherent_measures(spec):
    assert check_coherence(spec, trials=300, seed=1).ok


def test_coherence_harness_catches_dropped_boundary_atom():
    rep = check_coherence(AVaR(Fraction(1, 3)), trials=300, seed=1, evaluator=avar_without_boundary_atom)
    assert not rep.ok
    assert rep.counterexamples


def test_spec_json_round_trip_and_errors():
    for spec in [Expectation(), EssentialSup(), AVaR(Fraction(1, 3)), AVaR(0.25), SpectralMixture(((0.5, Fraction(1, 2)), (0.5, 0.0)))]:
        assert spec_from_json(spec_to_json(spec)) == spec
    assert spec_from_json({"kind": "avar", "alpha": "1/3"}) == AVaR(Fraction(1, 3))
    with pytest.raises(RiskSpecError, match="level"):
        AVaR(1.5)
    with pytest.raises(RiskSpecError, match="sum to 1"):
        SpectralMixture(((0.5, 0.1), (0.4, 0.2)))
    with pytest.raises(RiskSpecError, match="unknown"):
        spec_from_json({"kind": "var"})
    with pytest.raises(RiskSpecError, match="empty support"):
        evaluate(AVaR(0.5), RandomLoss([1.0, 2.0], [0.0, 0.0]))
