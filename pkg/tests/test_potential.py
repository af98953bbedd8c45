import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hvlasov import InvalidArgument, PotentialSpec, convolve, eval_derivatives, potential_constant

from conftest import torus_points

SPECS = [
    PotentialSpec.zero(),
    PotentialSpec.cosine(1.0, 1.0),
    PotentialSpec.cosine(0.7, 2.0),
    PotentialSpec.gaussian(1.0, 1.0),
    PotentialSpec.gaussian(0.5, 0.4),
]

# sup of |d^k/dx^k| of the wrapped unit Gaussian, brute force on 1e6 points
GAUSSIAN_CONSTANT = 1.38015205118


def test_cosine_values():
    spec = PotentialSpec.cosine(1, 1)
    assert eval_derivatives(spec, 0.0, 1) == 0.0
    assert eval_derivatives(spec, math.pi / 2, 1) == pytest.approx(-1.0, abs=1e-15)
    assert eval_derivatives(spec, 0.3, 0) == pytest.approx(math.cos(0.3))
    assert eval_derivatives(spec, 0.3, 3) == pytest.approx(math.sin(0.3))


@pytest.mark.parametrize("order", [0, 1, 2, 3])
def test_zero_potential_vanishes(order):
    x = np.linspace(-3, 3, 17)
    assert np.all(eval_derivatives(PotentialSpec.zero(), x, order) == 0)


@pytest.mark.parametrize("order", [-1, 4])
def test_bad_order(order):
    with pytest.raises(InvalidArgument):
        eval_derivatives(PotentialSpec.cosine(), 0.0, order)


def test_cosine_wavenumber_must_fit_the_box():
    with pytest.raises(InvalidArgument):
        PotentialSpec.cosine(1.0, 1.5)


def test_potential_constants():
    assert potential_constant(PotentialSpec.zero()) == 0.0
    assert potential_constant(PotentialSpec.cosine(1, 1)) == 1.0
    assert potential_constant(PotentialSpec.gaussian(1, 1)) == pytest.approx(
        GAUSSIAN_CONSTANT, abs=1e-6)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind.value}-{s.amplitude}")
def test_parity(spec):
    x = torus_points(64)
    assert np.allclose(eval_derivatives(spec, x, 0), eval_derivatives(spec, -x, 0), atol=1e-12)
    assert np.allclose(eval_derivatives(spec, x, 1), -eval_derivatives(spec, -x, 1), atol=1e-12)


@pytest.mark.parametrize("spec", SPECS[1:], ids=lambda s: f"{s.kind.value}-{s.amplitude}")
def test_derivatives_match_finite_differences(spec):
    x = np.linspace(-2.5, 2.5, 11)
    h = 1e-5
    for k in (1, 2, 3):
        fd = (eval_derivatives(spec, x + h, k - 1) - eval_derivatives(spec, x - h, k - 1)) / (2 * h)
        assert np.allclose(eval_derivatives(spec, x, k), fd, atol=1e-8)


def test_convolution_of_constant_with_cosine_is_zero():
    rho = np.full(64, 1 / (2 * math.pi))
    out = convolve(PotentialSpec.cosine(1, 1), rho, 0)
    assert np.max(np.abs(out)) < 1e-14


def _direct(spec, rho, order):
    x = torus_points(rho.size)
    dx = x[1] - x[0]
    return np.array([np.sum(eval_derivatives(spec, xi - x, order) * rho) * dx for xi in x])


def test_bump_convolution_tracks_the_potential():
    spec = PotentialSpec.gaussian(1.0, 0.8)
    n = 256
    x = torus_points(n)
    x0 = 0.5
    w = 0.05
    rho = np.exp(-((x - x0) ** 2) / (2 * w * w))
    rho /= rho.sum() * (x[1] - x[0])
    out = convolve(spec, rho, 0)
    assert np.max(np.abs(out - _direct(spec, rho, 0))) < 1e-12
    # the bump is narrow but not a delta: compare against the smoothed potential
    smoothed = eval_derivatives(spec, x - x0, 0) + 0.5 * w * w * eval_derivatives(spec, x - x0, 2)
    assert np.max(np.abs(out - smoothed)) < 1e-4


def test_even_density_has_no_force_at_center():
    x = torus_points(64)
    rho = np.exp(-x**2) + 0.2 * np.cos(2 * x)
    out = convolve(PotentialSpec.gaussian(1.0, 0.7), rho, 1)
    assert abs(out[32]) < 1e-13


@pytest.mark.parametrize("spec", SPECS[1:], ids=lambda s: f"{s.kind.value}-{s.amplitude}")
@pytest.mark.parametrize("order", [0, 1, 2])
def test_convolution_matches_direct_quadrature(spec, order):
    rho = np.random.default_rng(order).random(64)
    assert np.max(np.abs(convolve(spec, rho, order) - _direct(spec, rho, order))) < 1e-8


def test_convolution_rejects_mismatched_box():
    with pytest.raises(InvalidArgument):
        convolve(PotentialSpec.cosine(), np.ones(16), 0, x_halfwidth=2.0)
    with pytest.raises(InvalidArgument):
        convolve(PotentialSpec.cosine(), np.ones((8, 8)), 0)


@given(st.floats(-math.pi, math.pi), st.sampled_from(SPECS))
def test_constant_bounds_every_derivative(x, spec):
    c = potential_constant(spec)
    for k in (1, 2, 3):
        assert abs(float(eval_derivatives(spec, x, k))) <= c + 1e-9


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 3.0))
def test_convolution_is_linear(seed, s):
    rng = np.random.default_rng(seed)
    a, b = rng.random(32), rng.random(32)
    spec = PotentialSpec.gaussian(1.0, 0.9)
    lhs = convolve(spec, a + s * b, 1)
    rhs = convolve(spec, a, 1) + s * convolve(spec, b, 1)
    assert np.allclose(lhs, rhs, atol=1e-12)
