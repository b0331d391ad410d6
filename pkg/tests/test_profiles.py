import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ermakov_lab.errors import DomainError
from ermakov_lab.profiles import FrequencyProfile, eval_profile

freq = st.floats(0.1, 10.0)


def test_constant_profile_defaults():
    p = FrequencyProfile()
    assert p.omega(0.0) == 1.0
    assert p.domega(5.0) == 0.0
    assert p.breakpoints() == ()


def test_tanh_midpoint_and_ends():
    p = FrequencyProfile("tanh_sweep", 1.0, 2.0, 0.0, 100.0, duration=50.0)
    assert p.omega(50.0) == pytest.approx(1.5, abs=1e-15)
    assert p.omega(0.0) == pytest.approx(1.0 + 0.5 * (1 + math.tanh(-1.0)), rel=1e-15)
    assert p.omega0 == p.omega(0.0)


def test_linear_ramp_pieces():
    p = FrequencyProfile("linear_ramp", 1.0, 3.0, 0.0, 10.0, center=5.0, duration=2.0)
    assert p.omega(3.9) == 1.0
    assert p.omega(5.0) == pytest.approx(2.0)
    assert p.omega(6.5) == 3.0
    assert p.domega(5.0) == pytest.approx(1.0)
    assert p.breakpoints() == (4.0, 6.0)


def test_smoothed_step_is_c1():
    p = FrequencyProfile("piecewise_constant_smoothed", 2.0, 1.0, 0.0, 40.0, duration=10.0)
    assert p.domega(15.0) == 0.0
    assert p.domega(25.0) == 0.0
    assert p.omega(20.0) == pytest.approx(1.5)


def test_eval_profile_tuple():
    p = FrequencyProfile("tanh_sweep", 1.0, 2.0, 0.0, 100.0, duration=50.0)
    w, w2, dw = eval_profile(p, 50.0)
    assert w2 == pytest.approx(w * w)
    assert dw == pytest.approx(0.5 / 50.0)


@pytest.mark.parametrize("kwargs", [
    dict(kind="nope"),
    dict(kind="constant", omega_start=-1.0),
    dict(kind="tanh_sweep", omega_end=0.0, duration=1.0),
    dict(kind="tanh_sweep", omega_end=2.0),
    dict(kind="constant", t_min=1.0, t_max=1.0),
])
def test_invalid_profiles(kwargs):
    with pytest.raises(DomainError):
        FrequencyProfile(**kwargs)


def test_out_of_domain():
    p = FrequencyProfile()
    with pytest.raises(DomainError):
        p.omega(20.5)
    with pytest.raises(DomainError):
        p.omega(np.array([0.0, -1.0]))


@given(w0=freq, w1=freq, d=st.floats(0.01, 100.0), kind=st.sampled_from(
    ["linear_ramp", "tanh_sweep", "piecewise_constant_smoothed"]))
def test_profile_positive_and_bounded(w0, w1, d, kind):
    p = FrequencyProfile(kind, w0, w1, 0.0, 50.0, duration=d)
    t = np.linspace(0.0, 50.0, 101)
    w = p.omega(t)
    assert np.all(w > 0)
    assert np.all(w >= min(w0, w1) * (1 - 1e-12)) and np.all(w <= max(w0, w1) * (1 + 1e-12))
    f = p.omega_sq_function()
    assert f(17.3) == pytest.approx(p.omega_sq(17.3), rel=1e-14)


@given(w0=freq, w1=freq, kind=st.sampled_from(["tanh_sweep", "piecewise_constant_smoothed"]))
def test_derivative_matches_difference(w0, w1, kind):
    p = FrequencyProfile(kind, w0, w1, 0.0, 50.0, duration=10.0)
    t, h = 23.7, 1e-5
    fd = (p.omega(t + h) - p.omega(t - h)) / (2 * h)
    assert p.domega(t) == pytest.approx(fd, rel=1e-5, abs=1e-9)
