import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perfpac.core import IDENTITY, DriftParams, family_params
from perfpac.errors import AbsoluteContinuityViolation, DomainError, LengthMismatch, UnboundedRatio
from perfpac.shiftsim import (
    GaussianStrategicShift,
    count_out_of_range,
    coupled_uniforms,
    discrete_rn,
    drifted_prob,
    gaussian_rn,
    resample_labels,
)

PLACEBO_HALF = DriftParams(0.5, 0.5, 1, 0)


def test_drifted_prob_examples():
    assert drifted_prob(0.6, 1, PLACEBO_HALF) == pytest.approx(0.8)
    assert drifted_prob(0.6, -1, PLACEBO_HALF) == pytest.approx(0.6)


@given(st.floats(0, 1), st.sampled_from([1, -1]))
def test_identity_leaves_probability(p, d):
    assert drifted_prob(p, d, IDENTITY) == p


def test_vectorised():
    out = drifted_prob(np.array([0.6, 0.6]), np.array([1, -1]), PLACEBO_HALF)
    assert out == pytest.approx([0.8, 0.6])


def test_clamp_and_count():
    loose = DriftParams.loose(1.0, 0.5, 1.0, -0.2)
    p = np.array([0.9, 0.1, 0.5])
    d = np.array([1, -1, -1])
    assert count_out_of_range(p, d, loose) == 2
    assert drifted_prob(p, d, loose, clamp=True) == pytest.approx([1.0, 0.0, 0.3])


def test_all_positive_when_drift_forces_one():
    y = resample_labels(np.full(500, 0.3), np.ones(500), family_params("placebo", 1.0), seed=1)
    assert np.all(y == 1)


def test_resample_is_seeded():
    p = np.linspace(0, 1, 100)
    d = np.where(p > 0.5, 1, -1)
    a = resample_labels(p, d, PLACEBO_HALF, seed=5)
    assert np.array_equal(a, resample_labels(p, d, PLACEBO_HALF, seed=5))


def test_identity_resample_law():
    # mean label matches 2p - 1 within a wide binomial band
    n = 200_000
    y = resample_labels(np.full(n, 0.3), np.ones(n), IDENTITY, seed=0)
    assert abs(np.mean(y == 1) - 0.3) < 5 * np.sqrt(0.21 / n)


def test_resample_shape_mismatch():
    with pytest.raises(LengthMismatch):
        resample_labels(np.ones(3) * 0.5, np.ones(4), IDENTITY)


def test_coupled_uniforms_reproduce_labels():
    rng = np.random.default_rng(0)
    p = rng.uniform(size=1000)
    y = np.where(rng.uniform(size=1000) < p, 1, -1)
    u = coupled_uniforms(y, p, 1)
    assert np.array_equal(np.where(u < p, 1, -1), y)


def test_coupled_uniforms_are_uniform():
    rng = np.random.default_rng(0)
    p = rng.uniform(size=200_000)
    y = np.where(rng.uniform(size=p.size) < p, 1, -1)
    u = coupled_uniforms(y, p, 1)
    hist, _ = np.histogram(u, bins=10, range=(0, 1))
    assert np.all(np.abs(hist / p.size - 0.1) < 0.005)


def test_gaussian_sup_closed_form():
    shift = GaussianStrategicShift(0, 2, 0, 1, 0.5)
    assert shift.sup_negative() == pytest.approx(2.0)
    w = gaussian_rn(shift)
    assert w.bound == pytest.approx(2.0)
    xs = np.linspace(-5, 5, 2001)
    ratios = w(xs, np.ones_like(xs), -np.ones_like(xs))
    assert ratios.max() == pytest.approx(2.0)
    assert np.allclose(ratios, 2 * np.exp(-3 * xs ** 2 / 8))


def test_gaussian_identity_shift():
    w = gaussian_rn(GaussianStrategicShift(0.3, 1.0, 0.3, 1.0, 1.0))
    assert w.bound == 1.0
    assert np.allclose(w(np.array([-1.0, 2.0]), np.array([1, 1]), np.array([-1, 1])), 1.0)


@pytest.mark.parametrize("mu2,s2", [(0.0, 1.5), (1.0, 1.0)])
def test_gaussian_unbounded(mu2, s2):
    with pytest.raises(UnboundedRatio):
        GaussianStrategicShift(0.0, 1.0, mu2, s2, 0.5).sup_negative()


def test_gaussian_bad_sigma():
    with pytest.raises(DomainError):
        GaussianStrategicShift(0, 0, 0, 1, 0.5)


def test_discrete_rn_examples():
    w = discrete_rn([0.5, 0.5], [0.8, 0.2])
    assert w.bound == pytest.approx(1.6)
    x = np.array([0, 1])
    assert w(x, np.array([1, 1]), np.array([1, 1])) == pytest.approx([1.6, 0.4])
    same = discrete_rn([0.2, 0.8], [0.2, 0.8])
    assert same.bound == 1.0


def test_discrete_rn_absolute_continuity():
    with pytest.raises(AbsoluteContinuityViolation):
        discrete_rn([1.0, 0.0], [0.5, 0.5])


def test_discrete_rn_per_decision_tables():
    init = np.array([[0.25, 0.25], [0.25, 0.25]])
    w = discrete_rn(init, {1: np.array([[0.1, 0.4], [0.1, 0.4]]), -1: np.array([[0.4, 0.1], [0.4, 0.1]])})
    got = w(np.array([0, 0, 1]), np.array([1, -1, 1]), np.array([1, 1, -1]))
    assert got == pytest.approx([1.6, 0.4, 0.4])
