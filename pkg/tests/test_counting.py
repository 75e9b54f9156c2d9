import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonance_bounds.counting import (
    CountConfig,
    Evaluator,
    ShiftedDisk,
    ZeroNearContour,
    adaptive_winding,
    analytic_sample,
    circle_path,
    count_evaluator,
    count_in_disk,
    counting_function,
    jensen_residual,
    locate_zeros,
    merge_zeros,
    regularized_count,
    regularized_count_quadrature,
    shifted_disk_admissible,
    shifted_disk_geometry,
    winding_count,
)
from resonance_bounds.grids import ball_grid
from resonance_bounds.oracles import oracle_3d_radial, radial_total
from resonance_bounds.potentials import BallIndicator


def loop(f, n=256, r=1.0):
    lams = [r * np.exp(2j * np.pi * k / n) for k in range(n)] + [r + 0j]
    return [analytic_sample(f, lam) for lam in lams]


@pytest.mark.parametrize(
    "f, expected",
    [(lambda z: z**3, 3), (lambda z: 1.0 + 0 * z, 0), (lambda z: (z - 0.5) * (z + 2), 1)],
)
def test_winding_examples(f, expected):
    assert winding_count(loop(f)) == expected


def test_winding_needs_closed_fine_loop():
    s = loop(lambda z: z)
    with pytest.raises(ValueError):
        winding_count(s[:-1])
    with pytest.raises(ValueError):
        winding_count(loop(lambda z: z**40, n=16))


def test_adaptive_refines_fast_phase():
    ev = Evaluator(lambda z: z**40, analytic=True)
    w = adaptive_winding(ev, circle_path(0j, 1.0), n_nodes=64)
    assert w.total == 40


def test_integer_stable_under_doubling():
    f = lambda z: (z - 0.3j) ** 2 * (z + 0.7) * np.exp(z)
    counts = {adaptive_winding(Evaluator(f, analytic=True), circle_path(0j, 1.0), n_nodes=n).total for n in (16, 32, 64, 128)}
    assert counts == {3}


def test_contact_is_reported():
    ev = Evaluator(lambda z: z - 1.0, analytic=True)
    with pytest.raises(ZeroNearContour):
        adaptive_winding(ev, circle_path(0j, 1.0), n_nodes=4)


def test_locate_planted_zero():
    ev = Evaluator(lambda z: 1 + z / 2, analytic=True)
    (z,) = locate_zeros(ev, (-3.0, 3.0, -3.0, 3.0))
    assert abs(z.location + 2) < 1e-9 and z.multiplicity == 1


def test_locate_nothing_for_constant():
    assert locate_zeros(Evaluator(lambda z: 1.0 + 0 * z, analytic=True), (-5.0, 5.0, -5.0, 5.0)) == []


def test_locate_multiplicities_match_winding():
    roots = [0.3 + 0.2j, -0.5j, -0.5j, 1.1 - 0.4j, -0.9 + 0.9j]
    f = lambda z: np.prod([z - r for r in roots])
    ev = Evaluator(f, analytic=True)
    zs = merge_zeros(locate_zeros(ev, (-1.5, 1.5, -1.5, 1.5)))
    outer = adaptive_winding(ev, circle_path(0j, 2.2), n_nodes=64).total
    assert sum(m for _, m in zs) == outer == 5
    double = [z for z, m in zs if m == 2]
    assert len(double) == 1 and abs(double[0] + 0.5j) < 1e-6


def test_real_potential_zeros_pair_up():
    # f(z) conj-symmetric under z -> -conj(z), like H for real V
    roots = [1.2 - 0.3j, -1.2 - 0.3j, 0.4 - 0.9j, -0.4 - 0.9j, -0.6j]
    f = lambda z: np.prod([z - r for r in roots])
    zs = [z for z, _ in merge_zeros(locate_zeros(Evaluator(f, analytic=True), (-2.0, 2.0, -2.0, 1.0)))]
    for z in zs:
        assert min(abs(-z.conjugate() - w) for w in zs) < 1e-6


def test_regularized_count_examples():
    assert regularized_count([0.5], 1.0) == pytest.approx(math.log(2))
    assert regularized_count([], 3.0) == 0.0
    with pytest.raises(ValueError):
        regularized_count([0j], 1.0)


zero_sets = st.lists(
    st.tuples(st.floats(0.05, 5.0), st.floats(0, 2 * math.pi), st.integers(1, 3)),
    min_size=0,
    max_size=12,
)


@settings(max_examples=60, deadline=None)
@given(zs=zero_sets, r=st.floats(0.1, 6.0))
def test_regularized_count_two_formulas(zs, r):
    zeros = [(rho * np.exp(1j * th), m) for rho, th, m in zs]
    assert abs(regularized_count(zeros, r) - regularized_count_quadrature(zeros, r)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(zs=zero_sets, r=st.floats(0.1, 6.0))
def test_counting_function_vs_regularized(zs, r):
    zeros = [(rho * np.exp(1j * th), m) for rho, th, m in zs]
    s = 2.0
    assert counting_function(zeros, r) <= regularized_count(zeros, s * r) / math.log(s) + 1e-12


def test_jensen_examples():
    assert jensen_residual(lambda z: 1 - z**2 / 4, 4.0, [2.0, -2.0]) < 1e-10
    assert jensen_residual(np.exp, 2.0, []) < 1e-10


def test_shifted_disk_geometry():
    assert shifted_disk_geometry(ShiftedDisk(1j, 1.0)) == pytest.approx((-1, math.sqrt(3), 1))
    assert shifted_disk_geometry(ShiftedDisk(2j, 1.0)) == pytest.approx((-1, math.sqrt(5), 1))
    with pytest.raises(ValueError):
        ShiftedDisk(1 + 1j, 1.0)
    with pytest.raises(ValueError):
        ShiftedDisk(1j, 0.0)


def test_shifted_disk_matches_theorem_hypothesis():
    A, v0, r, delta, eps = 2.0, 1.5, 0.7, 0.5, 0.3
    disk = ShiftedDisk.from_norms(A, v0, r)
    assert 2 * abs(disk.lambda0) == pytest.approx(A * v0**2)
    lhs = math.sqrt(1 + delta) * r + eps * math.sqrt(A * v0**2 * r + r**2)
    assert shifted_disk_admissible(disk, lhs + 1e-12, delta, eps)
    assert not shifted_disk_admissible(disk, lhs - 1e-9, delta, eps)


def test_count_for_zero_potential():
    rep = count_in_disk(BallIndicator(R=1.0, h=0.0), ball_grid(1.0, 4, 3, 4), 3.0)
    assert rep.n == 0 and rep.N == 0


def test_count_evaluator_perturbs_radius():
    ev = Evaluator(lambda z: (z - 2.0) * (z - 0.5j), analytic=True)
    rep = count_evaluator(ev, 2.0, CountConfig(n_nodes=64, locate=True))
    assert rep.radius_used != 2.0
    assert rep.n == len(rep.zeros) == (2 if rep.radius_used > 2 else 1)

    far = Evaluator(lambda z: (z - 0.5) * (z + 0.4j), analytic=True)
    rep = count_evaluator(far, 2.0, CountConfig(n_nodes=256, locate=True))
    assert rep.jensen_N == pytest.approx(rep.N, abs=1e-8)
    doc = rep.to_json()
    assert '"schema": "count-report/1"' in doc


def test_determinant_count_small_well():
    # V = -10 on the unit ball: an l=1 bound state / anti-bound pair near 0.2i, -0.19i
    g = ball_grid(1.0, n_radial=10, degree=9, n_azimuth=10)
    V = BallIndicator(R=1.0, h=-10.0)
    expected = radial_total(oracle_3d_radial(-10.0, 1.0, 1.5))
    rep = count_in_disk(V, g, 1.5, CountConfig(alpha=1, branch="polar", n_nodes=64))
    assert rep.n == expected == 6
    assert rep.meta["kind"] == "determinant zeros"
