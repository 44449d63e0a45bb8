import numpy as np
import pytest

from sphbt.dvr3d import (
    HamiltonianSpec,
    SpectralTransform,
    SphericalField,
    apply_hamiltonian,
    build_angular_basis,
    node_coordinates,
)
from sphbt.errors import ConfigurationError, ConvergenceError
from sphbt.radial import RadialGrid
from sphbt.reference import driven_oscillator_solution
from sphbt.tdse import (
    OscillatorDrive,
    PotentialSpec,
    PulseSpec,
    build_potential,
    density_slice,
    effective_potential,
    field_at,
    imaginary_time_solve,
    length_gauge_potential,
    norm,
    overlap_error,
    propagate,
    split_step,
    trial_states,
)
from sphbt.tdse import _imaginary_stepper


@pytest.fixture(scope="module")
def small():
    g = RadialGrid.from_extent(0.2, 12.8)
    b = build_angular_basis(4, 1)
    return g, b, SpectralTransform(g, b)


# --- fields ---------------------------------------------------------------------------


def test_oscillator_drive_values():
    A, qE = field_at(OscillatorDrive(0.25, 1.0), 0.0)
    assert np.allclose(A, 0.0) and np.allclose(qE, [0, 0, 0.25])
    A, qE = field_at(OscillatorDrive(0.25, 2.0), 0.3)
    assert A[2] == pytest.approx(-0.25 * np.sin(0.6))
    assert qE[2] == pytest.approx(0.5 * np.cos(0.6))


def test_pulse_defaults_and_support():
    p = PulseSpec(xuv_frequency=1.6)
    assert (p.ir_frequency, p.ir_amplitude, p.ir_duration) == (0.062832, 0.05, 200.0)
    assert (p.xuv_amplitude, p.xuv_fwhm) == (0.25, 10.0)
    q = PulseSpec(xuv_frequency=1.6, xuv_amplitude=0.0, ir_delay=12.0)
    for t in (12.0 + 100.0, 12.0 - 100.0, 500.0):
        A, E = field_at(q, t)
        assert np.all(A == 0) and np.all(E == 0)
    assert np.abs(field_at(q, 30.0)[0]).max() > 0


@pytest.mark.parametrize("pulse", [PulseSpec(xuv_frequency=1.6), OscillatorDrive(0.25, 2.0)])
def test_field_is_minus_derivative_of_vector_potential(pulse):
    h = 1e-5
    for t in (-7.0, 0.4, 3.3):
        dA = (pulse.vector_potential(t + h) - pulse.vector_potential(t - h)) / (2 * h)
        assert np.allclose(pulse.field(t), -dA, atol=1e-8)


def test_pulse_validation():
    with pytest.raises(ConfigurationError):
        PulseSpec(xuv_frequency=1.0, ir_duration=0.0)
    with pytest.raises(ConfigurationError):
        PulseSpec(xuv_frequency=1.0, ir_direction=(0.0, 0.0, 0.0))
    with pytest.raises(ConfigurationError):
        PotentialSpec("two-center", separation=-1.0)


# --- real time -----------------------------------------------------------------------------


def test_free_step_is_a_kinetic_phase(small):
    g, b, tr = small
    rng = np.random.default_rng(1)
    psi = rng.standard_normal((g.count, 4, 1)) + 0j
    out = split_step(psi, 0.0, 0.05, HamiltonianSpec(), tr)
    expect = tr.forward(psi) * np.exp(-0.5j * 0.05 * 2 * tr.kinetic())
    assert np.abs(tr.forward(out) - expect).max() < 1e-12
    assert abs(np.linalg.norm(out) - np.linalg.norm(psi)) < 1e-13 * np.linalg.norm(psi)


def test_free_gaussian_packet_dispersion():
    g = RadialGrid.from_extent(0.1, 51.2)
    b = build_angular_basis(1, 1)
    tr = SpectralTransform(g, b)

    def packet(t):
        a = 1 + 1j * t
        f = lambda x, y, z: np.pi**-0.75 * a**-1.5 * np.exp(-(x * x + y * y + z * z) / (2 * a))
        return SphericalField.sample(g, b, f).values

    rep = propagate(packet(0.0), 0.0, 2.0, 0.01, HamiltonianSpec(), tr, reference=packet, record_every=50)
    assert max(rep.deltas) < 1e-10


def driven(g, b, tr, gauge="velocity", corrected=False):
    U = build_potential(PotentialSpec("oscillator"), tr)
    drive = OscillatorDrive(0.25, 1.0)
    if gauge == "velocity":
        return HamiltonianSpec(U, drive.vector_potential, corrected)
    return HamiltonianSpec(length_gauge_potential(U, drive, tr), None, corrected)


def test_norm_conservation_per_step_and_long_run(small):
    g, b, tr = small
    spec = driven(g, b, tr)
    sol = driven_oscillator_solution(0.25, 1.0, t_max=1.0)
    psi = SphericalField.sample(g, b, lambda x, y, z: sol(0.0, x, y, z)).values
    nxt = split_step(psi, 0.0, 0.01, spec, tr)
    assert abs(np.linalg.norm(nxt) - np.linalg.norm(psi)) < 1e-13
    with pytest.warns(RuntimeWarning, match="r_max"):
        rep = propagate(psi, 0.0, 100.0, 0.01, spec, tr, record_every=2000)
    assert len(rep.times) == 6
    assert abs(rep.norms[-1] - rep.norms[0]) < 1e-9


def test_second_order_in_time_step(small):
    g, b, tr = small
    spec = driven(g, b, tr)
    sol = driven_oscillator_solution(0.25, 1.0, t_max=3.0)
    psi = SphericalField.sample(g, b, lambda x, y, z: sol(0.0, x, y, z)).values
    final = {tau: propagate(psi, 0.0, 2.0, tau, spec, tr).final.values for tau in (0.1, 0.05, 0.025, 0.1 / 16)}
    ref = final[0.1 / 16]
    errs = [np.linalg.norm(final[t] - ref) for t in (0.1, 0.05, 0.025)]
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(slopes - 2) < 0.2)


def test_gauges_agree(small):
    g, b, tr = small
    deltas = []
    for gauge in ("velocity", "length"):
        sol = driven_oscillator_solution(0.25, 1.0, gauge, t_max=6.0)
        ref = lambda t: SphericalField.sample(g, b, lambda x, y, z: sol(t, x, y, z)).values
        rep = propagate(ref(0.0), 0.0, 5.0, 0.005, driven(g, b, tr, gauge), tr, reference=ref, record_every=1000)
        assert rep.deltas[0] < 1e-14
        deltas.append(rep.deltas[-1])
    assert 1 / 3 < deltas[0] / deltas[1] < 3


def test_propagate_validation_and_observers(small):
    g, b, tr = small
    psi = SphericalField.sample(g, b, lambda x, y, z: np.exp(-(x * x + y * y + z * z)))
    with pytest.raises(ConfigurationError):
        propagate(psi, 1.0, 1.0, 0.1, HamiltonianSpec(), tr)
    seen = []
    rep = propagate(psi, 0.0, 0.5, 0.1, HamiltonianSpec(), tr, record_every=2, energy=True,
                    observers=[lambda t, p: seen.append(t)])
    assert np.allclose(seen, [0.0, 0.2, 0.4, 0.5])
    assert np.allclose(rep.energies, rep.energies[0])
    assert rep.as_rows()[0][0] == 0.0


# --- imaginary time -----------------------------------------------------------------------


def test_oscillator_ground_energy(small):
    g, b, tr = small
    spec = HamiltonianSpec(build_potential(PotentialSpec("oscillator"), tr))
    st = imaginary_time_solve(spec, tr, 1)[0]
    assert st.energy == pytest.approx(1.5, abs=1e-6)
    assert abs(st.state.norm() - 1) < 1e-12


def test_rayleigh_quotient_never_increases(small):
    g, b, tr = small
    U = build_potential(PotentialSpec("oscillator"), tr)
    spec = HamiltonianSpec(U)
    psi = trial_states(["2s"], g, b)[0] + trial_states(["1s"], g, b)[0]
    energies = []
    # drive the relaxation with the solver's own stepper to watch every step
    tau = g.step**2 / 4
    step = _imaginary_stepper(tr, np.exp(-0.5 * tau * U), np.exp(-tau * tr.kinetic()))
    psi = psi / np.linalg.norm(psi)
    for _ in range(300):
        psi = step(psi)
        psi = psi / np.linalg.norm(psi)
        energies.append(np.vdot(psi, apply_hamiltonian(spec, tr, psi)).real)
    assert np.all(np.diff(energies) < 1e-12)


def test_excited_states_are_orthogonal():
    g = RadialGrid.from_extent(0.2, 25.6)
    b = build_angular_basis(3, 1)
    tr = SpectralTransform(g, b)
    U = build_potential(PotentialSpec("coulomb"), tr)
    labels = ["1s", "2s", "2p"]
    states = imaginary_time_solve(HamiltonianSpec(U, None, True), tr, 3, tol=1e-8,
                                  trial_states=trial_states(labels, g, b), estimator="decay")
    for i in range(3):
        for j in range(i):
            assert abs(np.vdot(states[i].state.values, states[j].state.values)) < 1e-8
    assert states[0].energy == pytest.approx(-0.5059, abs=2e-3)
    assert states[1].energy == pytest.approx(-0.125, abs=2e-3)


def test_imaginary_time_errors(small):
    g, b, tr = small
    spec = HamiltonianSpec(build_potential(PotentialSpec("oscillator"), tr))
    with pytest.raises(ConvergenceError) as err:
        imaginary_time_solve(spec, tr, 1, max_steps=40)
    assert err.value.residual is not None
    with pytest.raises(ConfigurationError):
        imaginary_time_solve(spec, tr, 0)
    with pytest.raises(ConfigurationError):
        imaginary_time_solve(spec, tr, 1, estimator="median")
    with pytest.raises(ConfigurationError):
        imaginary_time_solve(HamiltonianSpec(None, lambda t: (0, 0, 1)), tr, 1)


def test_trial_state_labels(small):
    g, b, tr = small
    assert len(trial_states(["1s", "3d"], g, b)) == 2
    assert len(trial_states(["1sg", "2su"], g, b, separation=2.0)) == 2
    for bad in (["1p"], ["s1"], ["5g"]):
        with pytest.raises(ConfigurationError):
            trial_states(bad, g, b)
    with pytest.raises(ConfigurationError):
        trial_states(["1s"], g, b, separation=2.0)


# --- potentials ---------------------------------------------------------------------------------


def far_field_error(dr, rmax=102.4):
    g = RadialGrid.from_extent(dr, rmax)
    b = build_angular_basis(1, 1)
    u = effective_potential(SpectralTransform(g, b), 1.0)[:, 0, 0]
    return g.nodes, np.abs(u + 1 / g.nodes)


def test_effective_potential_far_field():
    # the residual is a discretization effect of order dr**2 / r**3
    r, err = far_field_error(0.05)
    assert err[r >= 60].max() < 1e-8
    r2, err2 = far_field_error(0.1)
    at = lambda rr, e, x: e[np.argmin(np.abs(rr - x))]
    assert 3.5 < at(r2, err2, 20.0) / at(r, err, 20.0) < 4.5
    assert 6.0 < at(r, err, 10.0) / at(r, err, 20.0) < 10.0


def test_effective_potential_single_centre_energy():
    g = RadialGrid.from_extent(0.2, 51.2)
    b = build_angular_basis(1, 1)
    tr = SpectralTransform(g, b)
    spec = HamiltonianSpec(build_potential(PotentialSpec("effective"), tr, corrected=True), None, True)
    st = imaginary_time_solve(spec, tr, 1, tau=0.2**2 / 5, estimator="decay", tol=1e-9,
                              trial_states=trial_states(["1s"], g, b))[0]
    assert st.energy == pytest.approx(-0.500967, abs=5e-5)


def test_centre_on_a_node_is_rejected():
    g = RadialGrid(0.2, 32)
    b = build_angular_basis(1, 1)
    tr = SpectralTransform(g, b)
    with pytest.raises(ConfigurationError, match="shift"):
        x, y, z = node_coordinates(g, b)
        effective_potential(tr, 1.0, center=(x[3, 0, 0], y[3, 0, 0], z[3, 0, 0]))


# --- observables ----------------------------------------------------------------------------------


def test_observables(small):
    g, b, tr = small
    f = SphericalField.sample(g, b, lambda x, y, z: np.pi**-0.75 * np.exp(-(x * x + y * y + z * z) / 2))
    assert norm(f) == pytest.approx(1.0, abs=1e-10)
    assert overlap_error(f, f.values / norm(f)) < 1e-14
    r, P = density_slice(f, "axis")
    assert np.allclose(P, np.pi**-1.5 * np.exp(-r * r))
    x, z, D = density_slice(f, "plane")
    assert x.shape == z.shape == D.shape == (g.count, 8)
    assert np.allclose(D, np.pi**-1.5 * np.exp(-(x * x + z * z)))
    with pytest.raises(ValueError):
        density_slice(f, "volume")
