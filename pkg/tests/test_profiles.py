import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thinhomog.errors import ConfigError, ProfileError
from thinhomog.profiles import (HomogenizedData, Nonlinearity, ProfileSpec, eval_profile,
                                make_cutoff, mean_value)


def test_eval_examples():
    assert eval_profile(ProfileSpec.constant(1.0), 0.37) == 1.0
    g = ProfileSpec.cosine(1.0, 0.5)
    assert eval_profile(g, 0.5) == pytest.approx(0.5, abs=1e-14)
    assert eval_profile(g, 1.25) == pytest.approx(1.0, abs=1e-14)


def test_means():
    assert mean_value(ProfileSpec.constant(1.0)) == 1.0
    assert mean_value(ProfileSpec.cosine(1.0, 0.5)) == 1.0
    assert mean_value(ProfileSpec.sine(2.0, 1.0, role="h")) == 2.0


def test_table_needs_two_samples():
    with pytest.raises(ProfileError):
        ProfileSpec.table([1.0])


def test_role_positivity():
    with pytest.raises(ProfileError):
        ProfileSpec.cosine(1.0, 1.0)  # touches zero
    ProfileSpec.sine(1.0, 1.0, role="h")  # h may vanish
    with pytest.raises(ProfileError):
        ProfileSpec.sine(1.0, 1.5, role="h")


def test_table_mean_is_sample_mean():
    p = ProfileSpec.table([1.0, 2.0, 1.5, 3.0], period=2.0)
    assert mean_value(p) == pytest.approx(1.875)
    x = np.linspace(0, 2, 4, endpoint=False)
    assert np.allclose(p(x), [1.0, 2.0, 1.5, 3.0])


def test_table_derivative_bound():
    p = ProfileSpec.table([1.0, 1.4, 1.1, 0.8, 1.2])
    x = np.linspace(0, 1, 20001)
    assert p.derivative_bound() >= np.max(np.abs(p.derivative(x))) - 1e-9
    assert math.isfinite(p.derivative_bound())


profiles = st.one_of(
    st.builds(ProfileSpec.cosine, st.floats(1.0, 3.0), st.floats(-0.9, 0.9), st.floats(0.3, 2.0)),
    st.builds(ProfileSpec.sine, st.floats(1.0, 3.0), st.floats(-0.9, 0.9), st.floats(0.3, 2.0)),
    st.builds(ProfileSpec.table, st.lists(st.floats(0.5, 2.0), min_size=3, max_size=9),
              st.floats(0.3, 2.0)),
)


@given(profiles, st.floats(-50, 50))
def test_periodic(p, x):
    a, b = p(x), p(x + p.period)
    assert abs(a - b) <= 1e-12 * (1 + abs(a)) + 1e-12


@given(profiles)
def test_bounds_and_mean(p):
    x = np.linspace(0, p.period, 100001)
    y = p(x)
    lo, hi = p.bounds()
    assert y.min() >= lo - 1e-12 and y.max() <= hi + 1e-12
    assert y.min() - 1e-12 <= p.mean() <= y.max() + 1e-12
    assert lo > 0


@given(profiles)
def test_dict_roundtrip(p):
    q = ProfileSpec.from_dict(p.to_dict())
    x = np.linspace(0, 3, 37)
    assert np.array_equal(p(x), q(x))


def test_cutoff_examples():
    f = make_cutoff("cubic", 2.0)
    assert f(1.0) == 0.0
    assert f(10.0) == pytest.approx(f(3.0))
    assert f(10.0) == pytest.approx(f(50.0))
    assert make_cutoff("constant", 1.0, c=3.0)(-5.0) == 3.0
    assert f.is_constant is False and make_cutoff("constant", 1.0).is_constant


@pytest.mark.parametrize("base,coeffs", [("cubic", ()), ("logistic", ()), ("custom", (0.5, -1.0, 0.0, 2.0))])
def test_cutoff_invariants(base, coeffs):
    R = 1.5
    f = make_cutoff(base, R, coeffs=coeffs)
    u = np.linspace(-R, R, 2001)
    assert np.array_equal(f(u), f.base_f(u))
    far = np.linspace(R + 1, R + 20, 50)
    assert np.allclose(f(far), f(R + 1)) and np.allclose(f(-far), f(-R - 1))
    band = np.linspace(-R - 1, R + 1, 4001)
    assert f.sup_abs() <= np.max(np.abs(f.base_f(band))) + 1
    # derivatives against centered differences
    v = np.linspace(-R - 1.5, R + 1.5, 301)
    d = 1e-6
    fd = (f(v + d) - f(v - d)) / (2 * d)
    assert np.allclose(f.df(v), fd, rtol=1e-6, atol=1e-6)
    fd2 = (f.df(v + d) - f.df(v - d)) / (2 * d)
    assert np.allclose(f.d2f(v), fd2, rtol=1e-5, atol=1e-5)


@pytest.mark.parametrize("seam", [2.0, 3.0, -2.0, -3.0])
def test_cutoff_c2_at_seams(seam):
    # second-order one-sided second differences from both sides of a seam
    f = make_cutoff("cubic", 2.0)
    d = 1e-4
    w = np.array([2.0, -5.0, 4.0, -1.0]) / d**2
    left = w @ f(seam - d * np.arange(4))
    right = w @ f(seam + d * np.arange(4))
    assert abs(left - right) <= 1e-4
    assert abs(left - f.d2f(seam)) <= 1e-4


def test_nonlinearity_validation():
    with pytest.raises(ConfigError):
        Nonlinearity("weird")
    with pytest.raises(ConfigError):
        Nonlinearity("cubic", R=0.0)
    with pytest.raises(ConfigError):
        Nonlinearity("custom")
    g = Nonlinearity.from_dict({"base": "custom", "R": 3, "coeffs": [1, 2]})
    assert Nonlinearity.from_dict(g.to_dict()) == g


def test_homogenized_data_invariants():
    g = ProfileSpec.cosine(1.3, 0.4, period=0.7)
    h = ProfileSpec.sine(2.0, 0.5, role="h")
    hd = HomogenizedData.from_profiles(g, h, 0.8)
    assert hd.cell_area == pytest.approx(g.period * hd.mu_g, rel=1e-12)
    assert hd.f0_scale * hd.mu_g == pytest.approx(hd.mu_h, rel=1e-12)
