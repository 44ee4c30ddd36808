import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfpac.core import IDENTITY, ZERO_ONE, DriftParams, PerCoefficients, coefficients
from perfpac.errors import EmptySample, LengthMismatch, MassNotNormalized, WeightExceedsBound
from perfpac.risk import decide, dphi, exact_pr, logistic, per, per_term_bounds, phi, rn_per, surrogate
from perfpac.shiftsim import RnWeightFn, discrete_rn

from oracles import pr_bruteforce, random_distribution, random_valid, valid_tuples

PLACEBO_HALF = DriftParams(0.5, 0.5, 1, 0)


def test_decide_tie_goes_positive():
    assert list(decide([-1.0, 0.0, 2.0])) == [-1, 1, 1]


def test_exact_pr_identity_two_atoms():
    assert exact_pr([0.5, 0.5], [0.8, 0.2], [1, -1], IDENTITY) == pytest.approx(0.2)


@given(valid_tuples())
def test_single_atom_closed_forms(a):
    params = DriftParams(*a)
    assert exact_pr([1.0], [0.5], [-1], params) == pytest.approx(params.a4 + params.a3 / 2, abs=1e-12)
    assert exact_pr([1.0], [0.5], [1], params) == pytest.approx(1 - params.a2 - params.a1 / 2, abs=1e-12)


def test_exact_pr_matches_bruteforce():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a = random_valid(rng)
        m, p, d = random_distribution(rng)
        assert exact_pr(m, p, d, DriftParams(*a)) == pytest.approx(pr_bruteforce(m, p, d, a), abs=1e-12)


def test_exact_pr_mass_check():
    with pytest.raises(MassNotNormalized):
        exact_pr([0.5, 0.6], [0.1, 0.2], [1, 1], IDENTITY)
    with pytest.raises(LengthMismatch):
        exact_pr([1.0], [0.1, 0.2], [1, 1], IDENTITY)


def test_per_identity_is_error_rate():
    d = np.array([1, 1, -1, -1, 1])
    y = np.array([1, -1, -1, 1, 1])
    assert per(d, y, ZERO_ONE) == 0.4


def test_per_placebo_cells():
    c = coefficients(PLACEBO_HALF)
    assert per([1], [-1], c) == pytest.approx(0.5)
    assert per([1], [1], c) == pytest.approx(0.0, abs=1e-15)


def test_per_weighted_and_errors():
    assert per([1, -1], [1, 1], ZERO_ONE, weights=[3, 1]) == pytest.approx(0.25)
    with pytest.raises(EmptySample):
        per([], [], ZERO_ONE)
    with pytest.raises(LengthMismatch):
        per([1], [1, 1], ZERO_ONE)


@given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=30), st.data())
def test_per_within_term_bounds(d, data):
    y = data.draw(st.lists(st.sampled_from([-1, 1]), min_size=len(d), max_size=len(d)))
    c = coefficients(PLACEBO_HALF)
    lo, hi = per_term_bounds(c)
    assert lo - 1e-12 <= per(d, y, c) <= hi + 1e-12


def test_rn_per_examples():
    w = discrete_rn([0.5, 0.5], [0.8, 0.2])
    x = np.array([0, 1])
    # misclassify only the heavy atom, exact expectation over the two atoms
    assert rn_per(x, np.array([1, 1]), np.array([-1, 1]), w, sample_weight=[0.5, 0.5]) == pytest.approx(0.8)
    assert rn_per(x, np.array([1, -1]), np.array([1, -1]), w) == 0
    ones = RnWeightFn(lambda x, y, d: np.ones(len(y)), 1.0)
    assert rn_per(x, np.array([1, -1]), np.array([1, 1]), ones) == 0.5


def test_rn_per_bound_enforced():
    liar = RnWeightFn(lambda x, y, d: np.full(len(y), 3.0), 2.0)
    with pytest.raises(WeightExceedsBound):
        rn_per(np.zeros(2), np.array([1, 1]), np.array([1, 1]), liar)


def test_phi_values():
    assert phi(0.0) == 1.0
    assert np.isfinite(phi(-1000.0)) and phi(1000.0) == 0.0
    assert phi(-1000.0) == pytest.approx(1000 / np.log(2))


def test_identity_surrogate_is_logistic_bitwise():
    rng = np.random.default_rng(0)
    s = rng.normal(0, 5, 1000)
    y = rng.choice([-1, 1], 1000)
    l1, g1 = surrogate(s, y, ZERO_ONE)
    l2, g2 = logistic(s, y)
    assert np.array_equal(l1, l2) and np.array_equal(g1, g2)
    assert surrogate(0.0, 1, ZERO_ONE)[0] == 1.0


@settings(max_examples=50)
@given(st.floats(-8, 8), st.sampled_from([-1, 1]),
       st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)))
def test_surrogate_gradient_finite_difference(s, y, alphas):
    c = PerCoefficients(*alphas)
    h = 1e-5
    num = (surrogate(s + h, y, c)[0] - surrogate(s - h, y, c)[0]) / (2 * h)
    ana = surrogate(s, y, c)[1]
    assert abs(num - ana) <= 1e-5 * max(1.0, abs(ana))


@given(st.tuples(st.floats(-1, 0), st.floats(-1, 1), st.floats(-1, 0), st.floats(-1, 1)))
def test_surrogate_dominates_when_weights_nonpositive(alphas):
    c = PerCoefficients(*alphas)
    s = np.linspace(-10, 10, 201)
    for y in (-1, 1):
        assert np.all(surrogate(s, y, c)[0] >= c.term(y, decide(s)) - 1e-12)
