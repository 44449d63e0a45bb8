"""Split-operator propagation, pulses, potentials and observables.

All quantities are in atomic units.  The vector potential follows
``A(t) = -int q E dt'`` so the Hamiltonian reads
``H = p**2/2 - A(t).p + U(r, t)``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .dvr3d import (
    AngularBasis,
    HamiltonianSpec,
    SpectralTransform,
    SphericalField,
    angular_transform,
    apply_hamiltonian,
    momentum_coupling,
    node_coordinates,
    node_scale,
    real_matmul,
)
from .errors import ConfigurationError, ConvergenceError, NumericError
from .radial import RadialGrid
from .reference import hydrogen_orbital

__all__ = [
    "PulseSpec",
    "OscillatorDrive",
    "field_at",
    "PotentialKind",
    "PotentialSpec",
    "build_potential",
    "effective_potential",
    "length_gauge_potential",
    "trial_states",
    "split_step",
    "Propagator",
    "propagate",
    "PropagationReport",
    "imaginary_time_solve",
    "EigenState",
    "overlap_error",
    "density_slice",
    "norm",
]

_EZ = (0.0, 0.0, 1.0)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if v.shape != (3,) or not n > 0:
        raise ConfigurationError(f"polarization must be a nonzero 3-vector, got {v!r}")
    if abs(n - 1.0) > 1e-12:
        raise ConfigurationError(f"polarization must be a unit vector, got norm {n}")
    return v


# --- pulses ---------------------------------------------------------------------


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian XUV pump plus a cos**2-envelope IR probe.

    ``A_UV(t) = -A_UV exp(-2 ln2 t**2 / w_UV**2) cos(w t)`` and
    ``A_IR(t) = -A_IR cos**2(pi (t - t_IR) / tau_IR) cos(w_IR (t - t_IR))``
    for ``|t - t_IR| < tau_IR / 2`` (zero outside).
    """

    xuv_frequency: float
    xuv_amplitude: float = 0.25
    xuv_fwhm: float = 10.0
    ir_amplitude: float = 0.05
    ir_frequency: float = 0.062832
    ir_duration: float = 200.0
    ir_delay: float = 0.0
    xuv_direction: tuple[float, float, float] = _EZ
    ir_direction: tuple[float, float, float] = _EZ

    def __post_init__(self):
        if not self.ir_duration > 0:
            raise ConfigurationError(f"ir_duration must be positive, got {self.ir_duration}")
        if not self.xuv_fwhm > 0:
            raise ConfigurationError(f"xuv_fwhm must be positive, got {self.xuv_fwhm}")
        _unit(self.xuv_direction)
        _unit(self.ir_direction)

    def _xuv(self, t):
        g = np.exp(-2.0 * np.log(2.0) * t * t / self.xuv_fwhm**2)
        w = self.xuv_frequency
        a = -self.xuv_amplitude * g * np.cos(w * t)
        dg = -4.0 * np.log(2.0) * t / self.xuv_fwhm**2 * g
        da = -self.xuv_amplitude * (dg * np.cos(w * t) - w * g * np.sin(w * t))
        return a, da

    def _ir(self, t):
        s = t - self.ir_delay
        if abs(s) >= 0.5 * self.ir_duration:
            return 0.0, 0.0
        u = np.pi * s / self.ir_duration
        w = self.ir_frequency
        env, denv = np.cos(u) ** 2, -np.pi / self.ir_duration * np.sin(2 * u)
        a = -self.ir_amplitude * env * np.cos(w * s)
        da = -self.ir_amplitude * (denv * np.cos(w * s) - w * env * np.sin(w * s))
        return a, da

    def vector_potential(self, t: float) -> np.ndarray:
        return self._xuv(t)[0] * np.asarray(self.xuv_direction) + self._ir(t)[0] * np.asarray(self.ir_direction)

    def field(self, t: float) -> np.ndarray:
        """``q E(t) = -dA/dt``."""
        return -(self._xuv(t)[1] * np.asarray(self.xuv_direction) + self._ir(t)[1] * np.asarray(self.ir_direction))


@dataclass(frozen=True)
class OscillatorDrive:
    """``A(t) = -A0 sin(w t) n``, ``q E(t) = w A0 cos(w t) n``."""

    amplitude: float = 0.25
    frequency: float = 1.0
    direction: tuple[float, float, float] = _EZ

    def vector_potential(self, t: float) -> np.ndarray:
        return -self.amplitude * np.sin(self.frequency * t) * _unit(self.direction)

    def field(self, t: float) -> np.ndarray:
        return self.frequency * self.amplitude * np.cos(self.frequency * t) * _unit(self.direction)


def field_at(pulse: PulseSpec | OscillatorDrive, t: float) -> tuple[np.ndarray, np.ndarray]:
    """``(A(t), q E(t))`` as 3-vectors."""
    return pulse.vector_potential(t), pulse.field(t)


# --- potentials -------------------------------------------------------------------


class PotentialKind(str, enum.Enum):
    OSCILLATOR = "oscillator"
    COULOMB = "coulomb"
    EFFECTIVE = "effective"
    TWO_CENTER = "two-center"


@dataclass(frozen=True)
class PotentialSpec:
    """Static potential selection; ``separation`` and ``axis`` apply to two centres."""

    kind: PotentialKind = PotentialKind.COULOMB
    charge: float = 1.0
    separation: float = 2.0
    axis: tuple[float, float, float] = _EZ

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))
        if not self.charge > 0:
            raise ConfigurationError(f"charge must be positive, got {self.charge}")
        if self.kind is PotentialKind.TWO_CENTER and not self.separation > 0:
            raise ConfigurationError(f"separation must be positive, got {self.separation}")


def _distance(transform: SpectralTransform, center) -> np.ndarray:
    x, y, z = node_coordinates(transform.grid, transform.basis)
    c = np.asarray(center, dtype=float)
    d = np.sqrt((x - c[0]) ** 2 + (y - c[1]) ** 2 + (z - c[2]) ** 2)
    if np.min(d) < 1e-12:
        raise ConfigurationError(
            f"a grid node coincides with the centre {tuple(c)}; shift the grid or the centre"
        )
    return d


def effective_potential(
    transform: SpectralTransform, Z: float = 1.0, center=(0.0, 0.0, 0.0), corrected: bool = False
) -> np.ndarray:
    """Soft single-centre potential that makes the hydrogen-like 1s state exact.

    ``u~ = [Y^T B^T (E - K) B Y phi] / phi`` for the sampled 1s orbital
    ``phi`` of charge ``Z`` at ``center``, blended with ``-Z / |r - r_a|``
    through the mask ``f = exp(-Z |r - r_a|)``.
    """
    d = _distance(transform, center)
    orbital = Z**1.5 / np.sqrt(np.pi) * np.exp(-Z * d)
    phi = orbital * node_scale(transform.grid, transform.basis)
    c = transform.forward(phi)
    # (K + u~) phi = E phi on the nodes
    hphi = transform.inverse((-0.5 * Z * Z - transform.kinetic(corrected)) * c).real
    mask = np.exp(-Z * d)
    coulomb = -Z / d
    live = mask > 0
    if np.any(live & (phi == 0)):
        raise NumericError("the sampled 1s orbital vanishes where the mask is still active")
    u = coulomb.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        ut = np.where(live, hphi / np.where(live, phi, 1.0), 0.0)
    u[live] = mask[live] * ut[live] - (1.0 - mask[live]) * Z / d[live]
    return u


def build_potential(spec: PotentialSpec, transform: SpectralTransform, corrected: bool = False) -> np.ndarray:
    """Node-sampled static potential."""
    if spec.kind is PotentialKind.OSCILLATOR:
        r = transform.grid.nodes[:, None, None]
        return np.broadcast_to(0.5 * r * r, (transform.n_points,) + transform.basis.degrees.shape).copy()
    if spec.kind is PotentialKind.COULOMB:
        return -spec.charge / _distance(transform, (0.0, 0.0, 0.0))
    if spec.kind is PotentialKind.EFFECTIVE:
        return effective_potential(transform, spec.charge, (0.0, 0.0, 0.0), corrected)
    half = 0.5 * spec.separation * _unit(spec.axis)
    return effective_potential(transform, spec.charge, half, corrected) + effective_potential(
        transform, spec.charge, -half, corrected
    )


def length_gauge_potential(
    static: np.ndarray, pulse: PulseSpec | OscillatorDrive, transform: SpectralTransform
) -> Callable[[float], np.ndarray]:
    """``t -> U0 - q E(t) . r`` for coordinate-gauge runs."""
    x, y, z = node_coordinates(transform.grid, transform.basis)

    def potential(t: float) -> np.ndarray:
        e = pulse.field(t)
        return static - (e[0] * x + e[1] * y + e[2] * z)

    return potential


# --- real-time propagation ---------------------------------------------------------


class Propagator:
    """Second-order split-operator stepping for one Hamiltonian.

    Caches the kinetic phases and, for a static potential, the potential
    phases for the step size in use.
    """

    def __init__(self, spec: HamiltonianSpec, transform: SpectralTransform):
        self.spec = spec
        self.transform = transform
        self._tau = None

    def _prepare(self, tau: float, shape) -> None:
        if self._tau == tau:
            return
        kin = self.transform.kinetic(self.spec.corrected_momenta)
        self._kin_half = np.exp(-0.5j * tau * kin)
        self._kin_full = self._kin_half**2
        self._pot_half = None
        if self.spec.potential is not None and not callable(self.spec.potential):
            self._pot_half = np.exp(-0.5j * tau * self.spec.potential_at(0.0, shape))
        self._tau = tau

    def step(self, psi: np.ndarray, t: float, tau: float) -> np.ndarray:
        if not tau > 0:
            raise ConfigurationError(f"time step must be positive, got {tau}")
        self._prepare(tau, psi.shape)
        tm = t + 0.5 * tau
        if self._pot_half is not None:
            uh = self._pot_half
        elif self.spec.potential is None:
            uh = None
        else:
            uh = np.exp(-0.5j * tau * self.spec.potential_at(tm, psi.shape))
        tr = self.transform
        x = psi * uh if uh is not None else psi.astype(complex)
        c = tr.forward(x)
        A = self.spec.vector_at(tm)
        if A is None:
            c = c * self._kin_full
        else:
            c = c * self._kin_half
            phi = tr.to_momentum_nodes(c)
            phi *= np.exp(1j * tau * momentum_coupling(tr, A))
            c = tr.from_momentum_nodes(phi) * self._kin_half
        x = tr.inverse(c)
        return x * uh if uh is not None else x


def split_step(
    psi: np.ndarray, t: float, tau: float, spec: HamiltonianSpec, transform: SpectralTransform
) -> np.ndarray:
    """One symmetric split-operator step from ``t`` to ``t + tau``."""
    return Propagator(spec, transform).step(np.asarray(psi), t, tau)


@dataclass
class PropagationReport:
    times: list[float] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)
    deltas: list[float] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    final: SphericalField | None = None
    slices: dict = field(default_factory=dict)
    boundary_fraction: float = 0.0

    def as_rows(self) -> list[tuple]:
        rows = []
        for i, t in enumerate(self.times):
            rows.append(
                (
                    t,
                    self.norms[i],
                    self.deltas[i] if self.deltas else np.nan,
                    self.energies[i] if self.energies else np.nan,
                )
            )
        return rows


def propagate(
    initial: SphericalField | np.ndarray,
    t0: float,
    t_fin: float,
    tau: float,
    spec: HamiltonianSpec,
    transform: SpectralTransform,
    reference: Callable[[float], np.ndarray] | None = None,
    record_every: int = 100,
    energy: bool = False,
    observers: Iterable[Callable[[float, np.ndarray], None]] = (),
    slices: Sequence[str] = (),
) -> PropagationReport:
    """Integrate from ``t0`` to ``t_fin`` with steps of (at most) ``tau``.

    ``reference(t)`` returns node samples of an exact solution; when given,
    ``delta(t) = |1 - <ref|psi>|`` is recorded.  ``observers`` are called as
    ``f(t, psi)`` at every record point.
    """
    if not t_fin > t0:
        raise ConfigurationError(f"need t0 < t_fin, got {t0} and {t_fin}")
    psi = initial.values if isinstance(initial, SphericalField) else np.asarray(initial)
    psi = psi.astype(complex)
    nsteps = int(np.ceil((t_fin - t0) / tau - 1e-9))
    tau = (t_fin - t0) / nsteps
    prop = Propagator(spec, transform)
    report = PropagationReport()
    observers = tuple(observers)

    def record(t):
        report.times.append(t)
        report.norms.append(float(np.linalg.norm(psi)))
        if reference is not None:
            report.deltas.append(overlap_error(psi, reference(t)))
        if energy:
            report.energies.append(float(np.vdot(psi, apply_hamiltonian(spec, transform, psi, t)).real))
        for obs in observers:
            obs(t, psi)

    record(t0)
    for s in range(nsteps):
        t = t0 + s * tau
        psi = prop.step(psi, t, tau)
        if not np.all(np.isfinite(psi)):
            raise NumericError(f"non-finite state after step {s + 1} (t = {t + tau:.6g})")
        if (s + 1) % record_every == 0 or s + 1 == nsteps:
            record(t0 + (s + 1) * tau)

    grid, basis = transform.grid, transform.basis
    report.final = SphericalField(psi, grid, basis)
    edge = max(1, grid.count // 50)
    report.boundary_fraction = float(np.sum(np.abs(psi[-edge:]) ** 2) / np.sum(np.abs(psi) ** 2))
    if report.boundary_fraction > 1e-8:
        warnings.warn(
            f"{report.boundary_fraction:.2e} of the norm sits near r_max; the box may be too small",
            RuntimeWarning,
            stacklevel=2,
        )
    for kind in slices:
        report.slices[kind] = density_slice(report.final, kind)
    return report


# --- imaginary time -------------------------------------------------------------------


@dataclass
class EigenState:
    energy: float
    state: SphericalField
    steps: int
    residual: float


_ORBITAL = {"s": 0, "p": 1, "d": 2, "f": 3, "g": 4}


def trial_states(
    labels: Sequence[str],
    grid: RadialGrid,
    basis: AngularBasis,
    charge: float = 1.0,
    separation: float | None = None,
    axis=_EZ,
) -> list[np.ndarray]:
    """Node-sampled seeds for :func:`imaginary_time_solve`.

    Atomic labels such as ``"2p"`` give the hydrogen-like orbital with
    ``m = 0``.  With ``separation`` set, ``"1sg"`` / ``"2su"`` give the even
    and odd sums of 1s orbitals on the two centres at ``+-separation/2 axis``.
    """
    x, y, z = node_coordinates(grid, basis)
    scale = node_scale(grid, basis)
    out = []
    for label in labels:
        key = label.strip().lower()
        if separation is not None:
            if key not in ("1sg", "2su"):
                raise ConfigurationError(f"two-centre states are '1sg' and '2su', got {label!r}")
            h = 0.5 * separation * _unit(axis)
            a = hydrogen_orbital(1, 0, x - h[0], y - h[1], z - h[2], charge)
            b = hydrogen_orbital(1, 0, x + h[0], y + h[1], z + h[2], charge)
            out.append((a + b if key == "1sg" else a - b) * scale)
            continue
        if len(key) != 2 or not key[0].isdigit() or key[1] not in _ORBITAL:
            raise ConfigurationError(f"state label must look like '2p', got {label!r}")
        n, ell = int(key[0]), _ORBITAL[key[1]]
        if ell >= n:
            raise ConfigurationError(f"no state {label!r}: need l < n")
        if ell > int(basis.degrees.max()):
            raise ConfigurationError(
                f"state {label!r} needs l = {ell} but the angular basis stops at l = {basis.degrees.max()}"
            )
        out.append(hydrogen_orbital(n, ell, x, y, z, charge) * scale)
    return out


def _rayleigh(spec, transform, psi) -> float:
    return float(np.vdot(psi, apply_hamiltonian(spec, transform, psi)).real / np.vdot(psi, psi).real)


def imaginary_time_solve(
    spec: HamiltonianSpec,
    transform: SpectralTransform,
    n_states: int = 1,
    tau: float | None = None,
    tol: float = 1e-10,
    trial_states: Sequence[np.ndarray] | None = None,
    max_steps: int = 200_000,
    check_every: int = 20,
    estimator: str = "rayleigh",
) -> list[EigenState]:
    """Lowest states by relaxation in imaginary time.

    Each state is relaxed with ``S = exp(-U tau/2) exp(-K tau) exp(-U tau/2)``,
    renormalised and orthogonalised against the states found before it at
    every step.  Converged when the energy estimate changes by less than
    ``tol`` per unit imaginary time.  The default step is ``dr**2 / 4``.

    ``estimator="rayleigh"`` reports ``<psi|H|psi>``.  ``"decay"`` reports
    ``-ln(|S psi|) / tau``, the eigenvalue of the split-step operator itself,
    which carries an ``O(tau**2)`` splitting shift.

    ``trial_states`` seed the relaxation; a state inherits the symmetry of
    its seed, so use seeds with the wanted angular character.
    """
    if n_states < 1:
        raise ConfigurationError(f"n_states must be >= 1, got {n_states}")
    if estimator not in ("rayleigh", "decay"):
        raise ConfigurationError(f"estimator must be 'rayleigh' or 'decay', got {estimator!r}")
    if spec.vector_potential is not None:
        raise ConfigurationError("imaginary-time relaxation needs a field-free Hamiltonian")
    grid, basis = transform.grid, transform.basis
    shape = (grid.count,) + basis.degrees.shape
    tau = grid.step**2 / 4.0 if tau is None else float(tau)
    if not tau > 0:
        raise ConfigurationError(f"imaginary time step must be positive, got {tau}")
    U = spec.potential_at(0.0, shape)
    if callable(spec.potential):
        raise ConfigurationError("imaginary-time relaxation needs a static potential")
    real = basis.n_phi == 1 and not np.iscomplexobj(U)
    u_half = np.exp(-0.5 * tau * U)
    kin = np.exp(-tau * transform.kinetic(spec.corrected_momenta))
    step = _imaginary_stepper(transform, u_half, kin)

    if trial_states is None:
        x, y, z = node_coordinates(grid, basis)
        r = grid.nodes[:, None, None]
        seeds = [np.exp(-r) * (1 + 0.1 * z) * node_scale(grid, basis)]
        rng = np.random.default_rng(12345)
        for _ in range(n_states - 1):
            seeds.append(rng.standard_normal(shape) * np.exp(-r / 4) * node_scale(grid, basis))
    else:
        if len(trial_states) < n_states:
            raise ConfigurationError(f"need {n_states} trial states, got {len(trial_states)}")
        seeds = [np.asarray(s) for s in trial_states[:n_states]]

    found: list[EigenState] = []
    lower: list[np.ndarray] = []
    for idx in range(n_states):
        psi = seeds[idx].real.astype(float) if real else seeds[idx].astype(complex)
        psi = _orthonormalize(psi, lower)
        # the decay estimate needs one step before it means anything
        energy = _rayleigh(spec, transform, psi) if estimator == "rayleigh" else np.nan
        dE = np.inf
        for s in range(1, max_steps + 1):
            raw = _project_out(step(psi), lower)
            size = np.linalg.norm(raw)
            psi = raw / size
            if s % check_every == 0:
                if estimator == "decay":
                    e_new = -np.log(size) / tau
                else:
                    e_new = _rayleigh(spec, transform, psi)
                dE = abs(e_new - energy) / (check_every * tau)
                energy = float(e_new)
                if dE < tol:
                    break
        else:
            raise ConvergenceError(
                f"state {idx} did not converge in {max_steps} steps (dE/dt = {dE:.3e})", residual=dE
            )
        lower.append(psi)
        found.append(EigenState(energy, SphericalField(psi, grid, basis), s, dE))
    return found


def _project_out(psi: np.ndarray, lower: Sequence[np.ndarray]) -> np.ndarray:
    for v in lower:
        psi = psi - np.vdot(v, psi) * v
    return psi


def _orthonormalize(psi: np.ndarray, lower: Sequence[np.ndarray]) -> np.ndarray:
    psi = _project_out(psi, lower)
    return psi / np.linalg.norm(psi)


def _imaginary_stepper(transform: SpectralTransform, u_half: np.ndarray, kin: np.ndarray):
    """``psi -> exp(-U tau/2) B^T exp(-K tau) B exp(-U tau/2) psi``."""
    if transform.method == "dense":
        # fold the kinetic factor into one radial matrix per angular momentum
        merged = {}
        for l, (a, b) in transform.groups.items():
            B = transform.matrix(l)
            merged[l] = (B.T * kin[:, a[0], b[0]][None, :]) @ B

        def step(psi):
            y = angular_transform(transform.basis, psi * u_half, "forward")
            out = np.empty(y.shape, dtype=y.dtype)
            for l, (a, b) in transform.groups.items():
                out[:, a, b] = real_matmul(merged[l], y[:, a, b])
            return angular_transform(transform.basis, out, "inverse") * u_half

        return step

    def step(psi):
        return transform.inverse(kin * transform.forward(psi * u_half)) * u_half

    return step


# --- observables ------------------------------------------------------------------------


def norm(psi) -> float:
    values = psi.values if isinstance(psi, SphericalField) else np.asarray(psi)
    return float(np.linalg.norm(values))


def overlap_error(psi, reference) -> float:
    """``delta = |1 - <reference|psi>|``."""
    a = psi.values if isinstance(psi, SphericalField) else np.asarray(psi)
    b = reference.values if isinstance(reference, SphericalField) else np.asarray(reference)
    return float(abs(1.0 - np.vdot(b, a)))


def density_slice(state: SphericalField, kind: str = "axis"):
    """Probability density ``|Psi|**2`` with the grid scaling removed.

    ``"axis"``: ``(r, P)`` along the polar node closest to ``theta = 0``.
    ``"plane"``: ``(x, z, P)`` on the ``y = 0`` half planes ``phi = 0`` and
    ``phi = pi`` (for ``N_phi = 1`` the field is axially symmetric and the
    ``phi = 0`` values are mirrored).
    """
    P = state.density()
    grid, basis = state.grid, state.basis
    r = grid.nodes
    if kind == "axis":
        j = int(np.argmax(basis.nodes))
        return r, P[:, j, 0]
    if kind == "plane":
        s = np.sqrt(1.0 - basis.nodes**2)
        k_pi = int(np.argmin(np.abs(basis.phi - np.pi))) if basis.n_phi > 1 else 0
        x = np.concatenate([np.outer(r, s), -np.outer(r, s)], axis=1)
        z = np.concatenate([np.outer(r, basis.nodes)] * 2, axis=1)
        dens = np.concatenate([P[:, :, 0], P[:, :, k_pi]], axis=1)
        return x, z, dens
    raise ValueError(f"unknown slice kind {kind!r}; use 'axis' or 'plane'")
