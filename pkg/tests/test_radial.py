import time

import numpy as np
import pytest

from sphbt.radial import (
    MomentumGrid,
    RadialGrid,
    RadialVector,
    basis_function,
    corrected_momenta,
    dsbt_apply,
    fourier_apply,
    ftb_apply_fast,
    make_plan,
    seed_momenta,
)
from sphbt.reference import gaussian_orbital, riccati_bessel, sbt_quadrature

RNG = np.random.default_rng(2024)


def orth_error(M):
    return np.abs(M @ M.T - np.eye(M.shape[0])).max()


# --- grids ------------------------------------------------------------------------


def test_grids():
    g = RadialGrid.from_extent(0.4, 102.4)
    assert g.count == 256 and g.extent == pytest.approx(102.4)
    assert g.nodes[0] == pytest.approx(0.2) and np.all(np.diff(g.nodes) > 0)
    even, odd = MomentumGrid.for_degree(2, g), MomentumGrid.for_degree(3, g)
    assert even.parity_offset == 1 and even.upper == 256
    assert odd.parity_offset == 0 and odd.upper == 255
    assert even.nodes.size == odd.nodes.size == 256
    assert odd.weights[0] == pytest.approx(0.5 * odd.step)
    assert np.all(even.weights == pytest.approx(np.pi / 102.4))


def test_grid_validation():
    with pytest.raises(ValueError):
        RadialGrid(-0.1, 10)
    with pytest.raises(ValueError):
        RadialGrid(0.1, 1)


# --- plans ------------------------------------------------------------------------


def test_degree_zero_is_identity():
    plan = make_plan(0, RadialGrid(0.1, 128))
    assert np.array_equal(plan.dense_ftb(), np.eye(128))
    f = RNG.standard_normal(128)
    assert np.array_equal(plan.ftb(f), f)


def test_degree_one_completion_row():
    plan = make_plan(1, RadialGrid(0.1, 64))
    assert plan.extra_rows.shape == (1, 64)
    top = plan.kgrid.upper
    expected = np.full(64, np.sqrt(2.0 / (2 * top + 1)))
    expected[0] *= np.sqrt(0.5)
    assert np.allclose(plan.extra_rows[0], expected, rtol=1e-14, atol=0)


def test_orthogonality_example():
    plan = make_plan(5, RadialGrid(0.1, 256))
    assert orth_error(plan.dense_ftb()) < 1e-11


@pytest.mark.parametrize("N", [64, 256, 1024])
@pytest.mark.parametrize("ell", [1, 2, 7, 16, 24, 32])
def test_orthogonality_invariant(ell, N):
    T = make_plan(ell, RadialGrid(0.1, N)).dense_ftb()
    assert orth_error(T) < 1e-11
    assert np.abs(np.linalg.norm(T, axis=1) - 1).max() < 1e-12


def test_alphas_tend_to_one():
    plan = make_plan(6, RadialGrid(0.1, 2048))
    a = plan.alphas[plan.n0 - plan.p :]
    assert np.all(a >= 1.0) and np.all(np.diff(a) < 0)
    assert a[-1] - 1 < 1e-4


@pytest.mark.parametrize("ell", [1, 4, 9, 16])
def test_completion_rows_orthogonal_to_regular_rows(ell):
    plan = make_plan(ell, RadialGrid(0.1, 300))
    T = plan.dense_ftb()
    ne = plan.n0 - plan.p
    assert np.abs(T[:ne] @ T[ne:].T).max() < 1e-12


def test_plan_domain_errors():
    with pytest.raises(ValueError):
        make_plan(20, RadialGrid(0.1, 8))
    with pytest.raises(ValueError):
        make_plan(-1, RadialGrid(0.1, 8))


# --- Fourier stage ---------------------------------------------------------------


def test_fourier_unit_vector():
    g = RadialGrid(0.2, 128)
    plan = make_plan(0, g)
    k3 = 3 * np.pi / g.extent
    psi = np.sin(k3 * g.nodes) * np.sqrt(2 * g.step / g.extent)
    f = fourier_apply(plan, RadialVector(psi, "coordinate", 0)).values
    e = np.zeros(128)
    e[2] = 1.0
    assert np.allclose(f, e, atol=1e-13)


@pytest.mark.parametrize("ell", [0, 1, 2, 3])
def test_fourier_round_trip_and_norm(ell):
    plan = make_plan(ell, RadialGrid(0.1, 200))
    x = RNG.standard_normal(200) + 1j * RNG.standard_normal(200)
    f = plan.fourier(x)
    assert np.abs(plan.fourier(f, inverse=True) - x).max() < 1e-13
    assert abs(np.linalg.norm(f) - np.linalg.norm(x)) < 1e-13
    F = plan.fourier_matrix()
    assert orth_error(F) < 1e-13


def test_representation_checks():
    plan = make_plan(2, RadialGrid(0.1, 32))
    v = RadialVector(np.ones(32), "fourier", 2)
    with pytest.raises(ValueError):
        fourier_apply(plan, v)
    with pytest.raises(ValueError):
        ftb_apply_fast(plan, RadialVector(np.ones(32), "fourier", 3))
    with pytest.raises(ValueError):
        plan.fourier(np.ones(31))
    with pytest.raises(ValueError):
        dsbt_apply(plan, RadialVector(np.ones(32), "coordinate", 2), "sideways")


# --- fast FtB ------------------------------------------------------------------------


def test_fast_matches_dense_example():
    plan = make_plan(4, RadialGrid(0.1, 512))
    f = RNG.standard_normal(512)
    b = ftb_apply_fast(plan, RadialVector(f, "fourier", 4)).values
    assert np.abs(b - plan.dense_ftb() @ f).max() < 1e-10 * np.linalg.norm(f)


@pytest.mark.parametrize("N", [100, 1000, 4096])
@pytest.mark.parametrize("ell", [1, 2, 5, 8, 13, 16])
def test_fast_matches_dense(ell, N):
    plan = make_plan(ell, RadialGrid(0.1, N))
    T = plan.dense_ftb()
    f = RNG.standard_normal((N, 2))
    tol = 1e-10 * np.linalg.norm(f, axis=0).max()
    assert np.abs(plan.ftb(f) - T @ f).max() < tol
    assert np.abs(plan.ftb(f, inverse=True) - T.T @ f).max() < tol


@pytest.mark.parametrize("ell", [24, 32])
def test_fast_matches_dense_high_degree(ell):
    plan = make_plan(ell, RadialGrid(0.1, 2048))
    f = RNG.standard_normal(2048)
    assert np.abs(plan.ftb(f) - plan.dense_ftb() @ f).max() < 1e-7 * np.linalg.norm(f)


@pytest.mark.parametrize("ell", [1, 3, 6])
def test_monomial_recurrence_small_degree(ell):
    plan = make_plan(ell, RadialGrid(0.1, 256))
    f = RNG.standard_normal(256)
    T = plan.dense_ftb()
    assert np.abs(plan.ftb(f, method="monomial") - T @ f).max() < 1e-10 * np.linalg.norm(f)
    assert np.abs(plan.ftb(f, inverse=True, method="monomial") - T.T @ f).max() < 1e-10 * np.linalg.norm(f)


def test_fast_complex_and_batched():
    plan = make_plan(7, RadialGrid(0.1, 300))
    x = RNG.standard_normal((300, 3, 2)) + 1j * RNG.standard_normal((300, 3, 2))
    out = plan.ftb(x)
    assert out.shape == x.shape
    assert np.allclose(out[:, 1, 0], plan.dense_ftb() @ x[:, 1, 0], atol=1e-12)


@pytest.mark.parametrize("compiled", [True, False])
@pytest.mark.parametrize("ell", [2, 9])
def test_numpy_and_compiled_sweeps_agree(ell, compiled, monkeypatch):
    from sphbt import _ftb_kernels

    if compiled and not _ftb_kernels.AVAILABLE:
        pytest.skip("numba not installed")
    monkeypatch.setattr(_ftb_kernels, "AVAILABLE", compiled)
    plan = make_plan(ell, RadialGrid(0.1, 700))
    T = plan.dense_ftb()
    x = RNG.standard_normal((700, 2)) + 1j * RNG.standard_normal((700, 2))
    assert np.abs(plan.ftb(x) - T @ x).max() < 1e-12
    assert np.abs(plan.ftb(x, inverse=True) - T.T @ x).max() < 1e-12


def _best_time(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def test_linear_scaling():
    times = []
    for N in (2**15, 2**16):
        plan = make_plan(8, RadialGrid(1.0, N))
        f = RNG.standard_normal(N)
        plan.ftb(f)
        times.append(_best_time(lambda: plan.ftb(f)))
    assert times[1] / times[0] < 2.5


# --- full transform --------------------------------------------------------------


@pytest.mark.parametrize("ell", [0, 1, 4, 11])
def test_dsbt_round_trip_and_norm(ell):
    plan = make_plan(ell, RadialGrid(0.1, 400))
    x = RNG.standard_normal(400) + 1j * RNG.standard_normal(400)
    b = dsbt_apply(plan, RadialVector(x, "coordinate", ell))
    assert b.representation.value == "bessel"
    back = dsbt_apply(plan, b, "inverse").values
    assert np.abs(back - x).max() < 1e-12
    assert abs(np.linalg.norm(b.values) - np.linalg.norm(x)) < 1e-12


def gaussian_error(ell, dr, rmax):
    grid = RadialGrid.from_extent(dr, rmax)
    plan = make_plan(ell, grid)
    coef = plan.forward(gaussian_orbital(ell, grid.nodes) * np.sqrt(dr)) / np.sqrt(plan.kgrid.weights)
    k = plan.kgrid.nodes
    reg = slice(plan.n0 - plan.p, None)
    return np.abs(coef[reg] - gaussian_orbital(ell, k[reg])).max()


def test_gaussian_orbital_error_quarters_per_doubling():
    errs = [gaussian_error(2, 0.4, rmax) for rmax in (102.4, 204.8)]
    assert errs[0] < 1e-3
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_convergence_order_in_dk():
    rmaxes = np.array([51.2, 102.4, 204.8, 409.6])
    errs = np.array([gaussian_error(3, 0.4, r) for r in rmaxes])
    slope = np.polyfit(np.log(np.pi / rmaxes), np.log(errs), 1)[0]
    assert 1.8 <= slope <= 2.2


def test_degree_one_against_quadrature():
    devs = []
    for rmax in (51.2, 102.4):
        grid = RadialGrid.from_extent(0.4, rmax)
        plan = make_plan(1, grid)
        psi = lambda r: r * r * np.exp(-0.5 * (r - 2.0) ** 2)
        coef = plan.forward(psi(grid.nodes) * np.sqrt(0.4)) / np.sqrt(plan.kgrid.weights)
        k = plan.kgrid.nodes[1:]
        ref = sbt_quadrature(psi, 1, k, rmax, 0.4)
        devs.append(np.abs(coef[1:] - ref).max())
    assert 3.0 < devs[0] / devs[1] < 5.0


# --- corrected momenta -----------------------------------------------------------------


def test_corrected_momenta_degree_zero():
    plan = make_plan(0, RadialGrid(0.2, 100))
    assert np.array_equal(corrected_momenta(plan), plan.kgrid.nodes)


@pytest.mark.parametrize("ell", [1, 2, 3, 6])
def test_corrected_momenta_solve_the_boundary_condition(ell):
    plan = make_plan(ell, RadialGrid(0.2, 256))
    k = corrected_momenta(plan)[plan.n0 - plan.p :]
    chi, dchi = riccati_bessel(ell, k * plan.grid.extent)
    cond = dchi if ell % 2 else chi
    assert np.abs(cond).max() < 1e-10
    assert np.all(np.diff(k) > 0)


def test_corrected_momenta_match_seed_formula():
    # ell = 3, n = 20: the seed error should fall like dk^4 / k_n at fixed k_n
    gaps = []
    for N in (256, 512):
        plan = make_plan(3, RadialGrid(0.2 * 256 / N * 2, N))
        n = 20 * N // 256
        i = n - plan.p
        gaps.append(abs(corrected_momenta(plan)[i] - seed_momenta(plan)[i]))
        dk = plan.kgrid.step
        assert gaps[-1] < 5 * dk**4 / plan.kgrid.nodes[i] * 3**4
    assert gaps[0] / gaps[1] > 6


# --- basis functions ---------------------------------------------------------------------


def test_basis_function_degree_zero_is_sine():
    plan = make_plan(0, RadialGrid(0.2, 128))
    r = plan.grid.nodes
    for n in (1, 17, 127):
        assert np.abs(basis_function(plan, n) - np.sin(n * plan.kgrid.step * r)).max() < 1e-12


def test_basis_function_tends_to_bessel():
    k, devs = 0.490873843, []
    for rmax in (51.2, 102.4, 204.8):
        plan = make_plan(2, RadialGrid.from_extent(0.4, rmax))
        n = int(round(k / plan.kgrid.step))
        r = plan.grid.nodes
        f = basis_function(plan, n)
        devs.append(np.abs(f - riccati_bessel(2, k * r)[0])[r <= 10].max())
    assert devs[0] > devs[1] > devs[2]


def test_completion_basis_function_is_non_regular():
    plan = make_plan(6, RadialGrid(0.1, 512))
    r = plan.grid.nodes
    small = slice(0, 5)
    slope = lambda f: np.polyfit(np.log(r[small]), np.log(np.abs(f[small])), 1)[0]
    assert slope(basis_function(plan, plan.p)) < 2.0
    assert slope(basis_function(plan, plan.n0 + 20)) > 6.0


def test_basis_function_index_check():
    plan = make_plan(2, RadialGrid(0.1, 32))
    with pytest.raises(ValueError):
        basis_function(plan, 0)
    with pytest.raises(ValueError):
        basis_function(plan, 33)
