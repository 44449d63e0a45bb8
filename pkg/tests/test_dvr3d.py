import numpy as np
import pytest

from sphbt.dvr3d import (
    HamiltonianSpec,
    SpectralField,
    SpectralTransform,
    SphericalField,
    angular_transform,
    apply_hamiltonian,
    build_angular_basis,
    node_coordinates,
    node_scale,
    spectral_transform,
)
from sphbt.errors import ConfigurationError, NumericError
from sphbt.radial import RadialGrid
from sphbt.tdse import imaginary_time_solve

RNG = np.random.default_rng(99)


def rand(shape):
    return RNG.standard_normal(shape) + 1j * RNG.standard_normal(shape)


# --- angular basis ------------------------------------------------------------------


def test_two_point_rule():
    b = build_angular_basis(2)
    assert np.allclose(np.sort(b.nodes), [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    assert np.allclose(b.weights, 1.0, atol=1e-15)
    for p in range(4):
        assert (b.weights * b.nodes**p).sum() == pytest.approx((1 + (-1) ** p) / (p + 1), abs=1e-15)


@pytest.mark.parametrize("nt", [1, 3, 16, 40])
def test_gauss_legendre_exactness(nt):
    b = build_angular_basis(nt, 1)
    assert abs(b.weights.sum() - 2) < 1e-14
    for p in range(2 * nt):
        exact = (1 + (-1) ** p) / (p + 1)
        assert abs((b.weights * b.nodes**p).sum() - exact) < 1e-13


@pytest.mark.parametrize("nt,nphi", [(16, 1), (6, 5), (5, 8)])
def test_polar_functions_orthonormal(nt, nphi):
    b = build_angular_basis(nt, nphi)
    for P in b.polar:
        assert np.abs(P @ P.T - np.eye(nt)).max() < 1e-12


def test_basis_validation():
    with pytest.raises(ConfigurationError):
        build_angular_basis(0)
    with pytest.raises(ConfigurationError):
        build_angular_basis(3, 0)


# --- angular transform ------------------------------------------------------------------


def test_isotropic_field_has_one_channel():
    g = RadialGrid(0.2, 20)
    b = build_angular_basis(6, 4)
    f = SphericalField.sample(g, b, lambda x, y, z: np.exp(-np.sqrt(x * x + y * y + z * z)))
    y = angular_transform(b, f.values)
    m0 = int(np.nonzero(b.m_values == 0)[0][0])
    mask = np.zeros(y.shape, bool)
    mask[:, 0, m0] = True
    assert np.abs(y[~mask]).max() < 1e-13 * np.abs(y).max()


@pytest.mark.parametrize("nt,nphi", [(4, 1), (5, 6), (3, 7)])
@pytest.mark.parametrize("variant", ["plain", "modified"])
def test_angular_unitary(nt, nphi, variant):
    b = build_angular_basis(nt, nphi)
    x = rand((7, nt, nphi))
    y = angular_transform(b, x, "forward", variant)
    assert abs(np.linalg.norm(y) - np.linalg.norm(x)) < 1e-12
    assert np.abs(angular_transform(b, y, "inverse", variant) - x).max() < 1e-12


def test_modified_differs_by_phase():
    b = build_angular_basis(5, 4)
    x = rand((3, 5, 4))
    plain = angular_transform(b, x, "forward", "plain")
    mod = angular_transform(b, x, "forward", "modified")
    assert np.allclose(mod, plain * (1j) ** b.degrees[None], atol=1e-14)


def test_angular_shape_check():
    b = build_angular_basis(3, 2)
    with pytest.raises(ValueError):
        angular_transform(b, np.zeros((4, 3, 1)))
    with pytest.raises(ValueError):
        angular_transform(b, np.zeros((4, 3, 2)), "sideways")


# --- spectral transform --------------------------------------------------------------------


@pytest.mark.parametrize("method", ["dense", "fast"])
@pytest.mark.parametrize("nt,nphi", [(4, 1), (4, 3)])
def test_spectral_round_trip(method, nt, nphi):
    g = RadialGrid(0.2, 64)
    b = build_angular_basis(nt, nphi)
    tr = SpectralTransform(g, b, method)
    f = SphericalField.sample(g, b, lambda x, y, z: (1 + x + 0.5j * y * z) * np.exp(-(x * x + y * y + z * z) / 4))
    c = spectral_transform(tr, f)
    assert isinstance(c, SpectralField)
    assert abs(c.norm() - f.norm()) < 1e-12 * f.norm()
    back = spectral_transform(tr, c, "inverse")
    assert np.abs(back.values - f.values).max() < 1e-11
    x = rand((64, nt, nphi))
    assert abs(np.linalg.norm(tr.forward(x)) - np.linalg.norm(x)) < 1e-12 * np.linalg.norm(x)


def test_dense_and_fast_agree():
    g = RadialGrid(0.2, 80)
    b = build_angular_basis(6, 1)
    x = rand((80, 6, 1))
    a = SpectralTransform(g, b, "dense").forward(x)
    c = SpectralTransform(g, b, "fast").forward(x)
    assert np.abs(a - c).max() < 1e-12


def test_unified_grid_is_a_bijection():
    g = RadialGrid(0.2, 50)
    b = build_angular_basis(4, 1)
    tr = SpectralTransform(g, b, "dense")
    for l in range(4):
        B = tr.matrix(l)
        assert np.abs(B @ B.T - np.eye(50)).max() < 1e-12
    # odd l: the n = 0 completion row sits in the top slot
    assert list(tr.completion_slots(1)) == [49]
    assert list(tr.completion_slots(3)) == [49, 0]
    assert list(tr.completion_slots(2)) == [0]
    assert np.allclose(tr.momenta, np.arange(1, 51) * np.pi / g.extent)


def test_plane_wave_concentrates_at_its_momentum():
    # a wide Gaussian window keeps k r within reach of the angular basis
    g = RadialGrid.from_extent(0.2, 51.2)
    b = build_angular_basis(16, 1)
    tr = SpectralTransform(g, b)
    n = 10
    k = tr.momenta[n - 1]
    f = SphericalField.sample(g, b, lambda x, y, z: np.exp(1j * k * z - (x * x + y * y + z * z) / 128))
    c = tr.forward(f.values)
    for a in range(8):
        assert abs(int(np.argmax(np.abs(c[:, a, 0]))) - (n - 1)) <= 1
        # Rayleigh expansion: channel l carries the phase i**l
        z = c[n - 1, a, 0] / 1j**a
        assert z.real > 0 and abs(z.imag) < 1e-8 * abs(z)
    phi = np.abs(tr.to_momentum_nodes(c))
    j = int(np.argmax(b.nodes))
    assert np.unravel_index(np.argmax(phi), phi.shape)[:2] == (n - 1, j)


def test_spectral_transform_type_checks():
    g = RadialGrid(0.2, 16)
    b = build_angular_basis(2)
    tr = SpectralTransform(g, b)
    with pytest.raises(ValueError):
        spectral_transform(tr, SpectralField(np.zeros((16, 2, 1)), g, b))
    with pytest.raises(ValueError):
        spectral_transform(tr, SphericalField(np.zeros((16, 2, 1)), g, b), "inverse")
    with pytest.raises(ConfigurationError):
        SpectralTransform(g, b, "sparse")


def test_node_helpers():
    g = RadialGrid(0.5, 4)
    b = build_angular_basis(3, 2)
    x, y, z = node_coordinates(g, b)
    assert np.allclose(np.sqrt(x * x + y * y + z * z), g.nodes[:, None, None])
    s = node_scale(g, b)
    assert np.sum((s / g.nodes[:, None, None]) ** 2) == pytest.approx(4 * np.pi * g.step * g.count)


# --- Hamiltonian -------------------------------------------------------------------------------


@pytest.mark.parametrize("corrected", [False, True])
def test_free_spectral_vectors_are_eigenvectors(corrected):
    g = RadialGrid(0.2, 40)
    b = build_angular_basis(3, 1)
    tr = SpectralTransform(g, b)
    K = tr.kinetic(corrected)
    spec = HamiltonianSpec(corrected_momenta=corrected)
    for idx in [(0, 0, 0), (10, 1, 0), (39, 2, 0), (5, 2, 0)]:
        e = np.zeros((40, 3, 1))
        e[idx] = 1.0
        psi = tr.inverse(e)
        assert np.abs(apply_hamiltonian(spec, tr, psi) - K[idx] * psi).max() < 1e-12 * max(1, K[idx])


def test_corrected_kinetic_keeps_ordering():
    g = RadialGrid(0.2, 128)
    b = build_angular_basis(5, 1)
    tr = SpectralTransform(g, b)
    plain, corr = tr.kinetic(False), tr.kinetic(True)
    for a in range(5):
        reg = np.setdiff1d(np.arange(128), tr.completion_slots(a))
        assert np.array_equal(np.argsort(plain[reg, a, 0]), np.argsort(corr[reg, a, 0]))
        assert np.all(corr[:, a, 0] <= plain[:, a, 0] + 1e-15)
        assert np.all(corr[tr.completion_slots(a), a, 0] == 0.5 * tr.momenta[-1] ** 2)
    assert np.array_equal(plain[:, 0, 0], corr[:, 0, 0])


@pytest.mark.parametrize("nphi", [1, 4])
def test_hamiltonian_hermitian_with_field(nphi):
    g = RadialGrid(0.25, 48)
    b = build_angular_basis(5, nphi)
    tr = SpectralTransform(g, b)
    x, y, z = node_coordinates(g, b)
    spec = HamiltonianSpec(-1.0 / np.sqrt(x * x + y * y + (z - 0.3) ** 2), lambda t: (0.1, -0.2, 0.3), True)
    u, v = rand(x.shape), rand(x.shape)
    lhs = np.vdot(u, apply_hamiltonian(spec, tr, v))
    rhs = np.conj(np.vdot(v, apply_hamiltonian(spec, tr, u)))
    assert abs(lhs - rhs) < 1e-11 * abs(lhs)


def test_oscillator_ground_state_energy():
    g = RadialGrid.from_extent(0.2, 12.8)
    b = build_angular_basis(2, 1)
    tr = SpectralTransform(g, b)
    U = 0.5 * g.nodes[:, None, None] ** 2 * np.ones((1, 2, 1))
    spec = HamiltonianSpec(U)
    st = imaginary_time_solve(spec, tr, 1, tol=1e-10)[0]
    psi = st.state.values
    rq = np.vdot(psi, apply_hamiltonian(spec, tr, psi)).real
    assert rq == pytest.approx(1.5, abs=1e-5)


def test_non_finite_potential_is_reported():
    g = RadialGrid(0.2, 10)
    b = build_angular_basis(2)
    tr = SpectralTransform(g, b)
    U = np.zeros((10, 2, 1))
    U[3, 1, 0] = np.inf
    with pytest.raises(NumericError, match=r"\(3, 1, 0\)"):
        apply_hamiltonian(HamiltonianSpec(U), tr, np.ones((10, 2, 1)))
