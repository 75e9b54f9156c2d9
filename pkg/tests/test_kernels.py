import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from resonance_bounds.grids import required_sphere_degree, sphere_rule
from resonance_bounds.kernels import (
    A3,
    KernelConstants,
    SphereOperator,
    conjugated_extension_kernel,
    extension_kernel,
    extension_quadrature,
    kernel_envelope_check,
    resolvent_kernel,
    sphere_power_singvals,
    stone_residual,
    weyl_envelope_constant,
)

FOUR_PI = 4 * math.pi


def test_resolvent_kernel_values():
    x, y = np.zeros(3), np.array([1.0, 0, 0])
    assert resolvent_kernel(0, x, y) == pytest.approx(1 / FOUR_PI)
    assert resolvent_kernel(1j, x, y) == pytest.approx(math.exp(-1) / FOUR_PI)
    assert resolvent_kernel(math.pi, x, y) == pytest.approx(-1 / FOUR_PI)
    with pytest.raises(ValueError):
        resolvent_kernel(1.0, x, x)


def test_extension_kernel_values():
    assert extension_kernel(3 + 2j, np.zeros(3)) == pytest.approx(FOUR_PI)
    assert abs(extension_kernel(math.pi, np.array([1.0, 0, 0]))) < 1e-15


@settings(max_examples=30, deadline=None)
@given(lr=st.floats(-4, 4), li=st.floats(-2, 2), z=st.lists(st.floats(-1, 1), min_size=3, max_size=3), seed=st.integers(0, 100))
def test_extension_kernel_symmetries(lr, li, z, seed):
    lam = complex(lr, li)
    z = np.asarray(z)
    R = Rotation.random(random_state=seed).as_matrix()
    k = extension_kernel(lam, z)
    assert extension_kernel(lam, R @ z) == pytest.approx(k, rel=1e-12, abs=1e-12)
    assert extension_kernel(-lam, -z) == pytest.approx(k, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("lam", [2.0, 4 - 1j, 1j, -3 + 0.5j])
def test_quadrature_matches_closed_form(lam):
    z = np.array([[0.3, -0.5, 0.9], [1.2, 0.1, 0.0], [0.0, 0.0, 0.0]])
    diam = float(np.max(np.linalg.norm(z, axis=1)))
    rule = sphere_rule(required_sphere_degree(lam, diam))
    assert np.allclose(extension_quadrature(lam, z, rule), extension_kernel(lam, z), rtol=1e-10, atol=1e-12)


def _pairs(rng, n=20, rmax=2.0):
    out = []
    while len(out) < n:
        x, y = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        if 0 < np.linalg.norm(x - y) <= rmax:
            out.append((x, y))
    return out


def test_stone_detects_wrong_constant(rng):
    pairs = _pairs(rng)
    rule = sphere_rule(required_sphere_degree(5.0, 2.0))
    good = stone_residual(3 - 1j, pairs, rule)
    bad = stone_residual(3 - 1j, pairs, rule, KernelConstants(A3.a_d * (1 + 1e-3)))
    assert good < 1e-10
    assert bad > 1e-5


def test_stone_lambda_zero_and_rule_guard(rng):
    pairs = _pairs(rng, 5)
    assert stone_residual(0j, pairs, sphere_rule(12)) < 1e-14
    with pytest.raises(ValueError):
        stone_residual(5.0, pairs, sphere_rule(4))


def test_sphere_singular_values_closed_form():
    op = SphereOperator(1.0, 1)
    assert sphere_power_singvals(op, 1) == 1.0
    assert sphere_power_singvals(op, 2) == pytest.approx(1 / 3)
    assert sphere_power_singvals(op, 4) == pytest.approx(1 / 3)
    assert sphere_power_singvals(op, 5) == pytest.approx(1 / 7)
    with pytest.raises(ValueError):
        sphere_power_singvals(SphereOperator(1.0, 1, lmax=3), 17)


def test_weyl_envelope_constant_positive():
    c = weyl_envelope_constant((0.25, 1.0), (1, 2, 4), 200)
    assert 0 < c < 2
    for eps in (0.25, 1.0):
        for l in (1, 2, 4):
            op = SphereOperator(eps, l, lmax=20)
            for k in range(1, 201):
                assert sphere_power_singvals(op, k) <= (c * eps * math.sqrt(k)) ** (-2 * l) * (1 + 1e-12)


def test_envelope_real_lambda_bounded(rng):
    pts = [(np.zeros(3), rng.uniform(-5, 5, 3)) for _ in range(200)]
    for lam in (0.5, 2.0, 10.0):
        assert kernel_envelope_check(complex(lam), pts).C <= 8 * math.pi


def test_envelope_complex_point():
    x, y = np.zeros(3), np.array([2.0, 0, 0])
    lam = 3 - 1j
    fit = kernel_envelope_check(lam, [(x, y)])
    exact = abs(FOUR_PI * np.sin(lam * 2) / (lam * 2))
    env = math.exp(2) / (1 + 2 * abs(lam))
    assert fit.C == pytest.approx(exact / env)


def test_conjugated_envelope_on_diagonal():
    lam = 2 - 0.5j
    for r in (0.5, 1.0, 2.0):
        x = np.array([r, 0, 0])
        val = abs(conjugated_extension_kernel(lam, x, x))
        env = math.exp(2 * abs(lam.imag) * r) / (1 + 2 * abs(lam.imag) * r)
        assert val <= 8 * math.pi * env


def test_sphere_rule_integrates_harmonics():
    rule = sphere_rule(10)
    assert rule.weights.sum() == pytest.approx(FOUR_PI, abs=1e-12)
    x, y, z = rule.nodes.T
    assert np.dot(rule.weights, z**2) == pytest.approx(FOUR_PI / 3, abs=1e-12)
    assert abs(np.dot(rule.weights, x * y * z**3)) < 1e-13
