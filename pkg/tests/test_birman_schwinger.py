import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonance_bounds.birman_schwinger import (
    BSMatrix,
    SingularSpectrum,
    assemble_bs,
    bs_difference,
    dump_matrix,
    fit_decay,
    load_matrix,
    schatten_norm,
    singular_values,
    sqrt_factors,
    stone_factorized,
    weak_schatten_norm,
)
from resonance_bounds.grids import ball_grid, cartesian_grid, required_sphere_degree, sphere_rule
from resonance_bounds.potentials import BallIndicator, dilate


@pytest.fixture(scope="module")
def grid():
    return ball_grid(1.0, n_radial=8, degree=7, n_azimuth=8)


def test_zero_lambda_real_symmetric_positive(grid):
    M = assemble_bs(BallIndicator(R=1.0, h=1.0), grid, 0j, diagonal="cell_average").dense
    assert np.allclose(M.imag, 0, atol=1e-15)
    assert np.allclose(M, M.T, atol=1e-15)
    assert np.all(M.real > 0)


def test_subtraction_diagonal_bias_shrinks():
    # subtracted self-terms can dip below zero on coarse cells; the spurious
    # negative spectrum must vanish under refinement
    lows = []
    for n in (8, 12, 16):
        M = assemble_bs(BallIndicator(R=1.0, h=1.0), ball_grid(1.0, n, n - 1, n), 0j).dense.real
        off = M - np.diag(np.diag(M))
        assert off.min() >= 0
        lows.append(np.linalg.eigvalsh(M).min())
    assert lows[0] < lows[1] < lows[2] < 0
    assert abs(lows[2]) < 0.03


def test_conjugation_symmetry(grid):
    V = BallIndicator(R=1.0, h=1.0)
    a = assemble_bs(V, grid, 2 + 1j).dense
    b = assemble_bs(V, grid, -2 + 1j).dense
    assert np.max(np.abs(a - b.conj())) < 1e-14
    sa = assemble_bs(V, grid, 2 - 0.3j).singular_values
    sb = assemble_bs(V, grid, -2 - 0.3j).singular_values
    assert np.max(np.abs(sa - sb)) < 1e-10 * sa[0]


def test_principal_branch_phase(grid):
    a = assemble_bs(BallIndicator(R=1.0, h=1.0), grid, 1.5).dense
    b = assemble_bs(BallIndicator(R=1.0, h=1j), grid, 1.5).dense
    assert np.max(np.abs(b - np.exp(1j * np.pi / 4) * a)) < 1e-14


def test_polar_branch_factors():
    v = np.array([-4.0, 1j, 2 + 2j])
    mod, root = sqrt_factors(v, "polar")
    assert np.allclose(mod * root, v)
    assert np.allclose(mod, np.sqrt(np.abs(v)))
    with pytest.raises(ValueError):
        sqrt_factors(v, "other")


def test_block_path_matches_dense(grid):
    V = BallIndicator(R=1.0, h=-3 + 1j)
    a = assemble_bs(V, grid, 2 - 0.5j)
    b = assemble_bs(V, grid, 2 - 0.5j, use_symmetry=False)
    assert a.blocks is not None and b.entries is not None
    assert np.max(np.abs(a.dense - b.dense)) < 1e-13
    assert np.allclose(np.sort_complex(a.eigenvalues), np.sort_complex(np.linalg.eigvals(b.dense)), atol=1e-12)


def test_cover_check_rejects_small_grid():
    with pytest.raises(ValueError):
        assemble_bs(BallIndicator(R=2.0, h=1.0), ball_grid(1.0, 4, 5, 4), 1.0)


def test_singular_values_examples():
    assert np.all(singular_values(np.zeros((3, 3))).values == 0)
    assert np.allclose(singular_values(np.diag([3.0, 1.0, 2.0])).values, [3, 2, 1])
    A = np.random.default_rng(1).normal(size=(6, 6))
    assert np.allclose(singular_values(2.5 * A).values, 2.5 * singular_values(A).values, rtol=1e-13)
    with pytest.raises(ValueError):
        SingularSpectrum(np.array([1.0, 2.0]))


def test_schatten_norms():
    S = SingularSpectrum(np.array([1.0, 1.0, 1.0, 0.0]))
    assert schatten_norm(S, 3) == pytest.approx(3 ** (1 / 3))
    harmonic = SingularSpectrum(1.0 / np.arange(1, 1001))
    assert np.isfinite(weak_schatten_norm(harmonic, 1.5))
    with pytest.raises(ValueError):
        weak_schatten_norm(harmonic, 1.0)


def test_difference_kernel(grid):
    V = BallIndicator(R=1.0, h=1.0)
    assert np.max(np.abs(bs_difference(V, grid, 0j).dense)) == 0
    lam = 3 - 0.5j
    D = bs_difference(V, grid, lam).dense
    ref = assemble_bs(V, grid, lam).dense - assemble_bs(V, grid, -lam).dense
    off = ~np.eye(D.shape[0], dtype=bool)
    assert np.max(np.abs(D - ref)[off]) < 1e-12
    rule = sphere_rule(required_sphere_degree(lam, 2.0))
    F = stone_factorized(V, grid, lam, rule)
    assert np.max(np.abs(F - D)) < 1e-8


def test_fit_decay_planted_laws():
    k = np.arange(1, 401)
    p = fit_decay(SingularSpectrum(k**-0.25))
    assert p.slope == pytest.approx(-0.25, abs=0.01)
    e = fit_decay(SingularSpectrum(np.exp(-0.3 * np.sqrt(k))), model="stretched_exp")
    assert e.slope == pytest.approx(-0.3, abs=0.01) and e.r2 > 0.999
    with pytest.raises(ValueError):
        fit_decay(SingularSpectrum(np.array([1.0, 0.5])))


def test_dilation_small_grid(grid):
    V = BallIndicator(R=1.0, h=2 - 1j)
    for s in (2.0, 4.0):
        a = assemble_bs(dilate(V, s), grid.scaled(1 / s), 3 + 1j).singular_values
        b = assemble_bs(V, grid, (3 + 1j) / s).singular_values
        assert np.max(np.abs(a - b)) < 1e-10 * b[0]


def test_refinement_converges():
    V = BallIndicator(R=1.0, h=1.0)
    s = [assemble_bs(V, ball_grid(1.0, n, n - 1, n), 2.0).singular_values[:8] for n in (8, 12, 16)]
    d1 = np.max(np.abs(s[1] - s[0]) / s[1])
    d2 = np.max(np.abs(s[2] - s[1]) / s[2])
    assert d2 < d1 / 2


def test_dump_round_trip(tmp_path, grid):
    M = assemble_bs(BallIndicator(R=1.0, h=1j), grid, 1 + 1j)
    path = tmp_path / "m.bin"
    dump_matrix(M, path)
    assert np.array_equal(load_matrix(path, M.size), M.dense)


def test_bsmatrix_requires_one_storage(grid):
    with pytest.raises(ValueError):
        BSMatrix(1.0, grid, None)
    with pytest.raises(FloatingPointError):
        BSMatrix(1.0, grid, None, entries=np.array([[np.nan]]))


@settings(max_examples=15, deadline=None)
@given(pts=st.integers(3, 12), seed=st.integers(0, 1000))
def test_unstructured_grid_assembles(pts, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.5, 0.5, (pts, 3))
    w = np.full(pts, (4 * np.pi / 3) / pts)
    g = cartesian_grid(x, w)
    M = assemble_bs(BallIndicator(R=1.0, h=1.0), g, 1.0 + 0.5j, cover_tol=np.inf)
    assert M.size == pts
    assert np.all(np.isfinite(M.singular_values))
