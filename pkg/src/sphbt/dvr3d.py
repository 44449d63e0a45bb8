"""Discrete variable representation on a spherical grid.

Fields are sampled on ``(r_i, eta_j, phi_k)`` with ``eta_j`` the
Gauss-Legendre nodes in ``cos(theta)`` and ``phi_k = 2 pi (k - 1) / N_phi``,
scaled as ``psi_ijk = Psi * r_i * sqrt(dr * deta_j * dphi)`` so the plain
Euclidean norm is the L2 norm.  Arrays have shape ``(N_r, N_theta, N_phi)``.

Spectral coefficients ``c[n, a, b]`` use the same shape: ``a`` counts
polar channels and ``b`` the azimuthal number ``m = m_values[b]``; the
channel ``(a, b)`` has angular momentum ``l = |m| + a``.  The radial index
``n`` runs over the unified momentum grid ``k~_n = n dk``, ``n = 1..N``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import ConfigurationError, NumericError
from .radial import RadialGrid, RadialTransformPlan, corrected_momenta, make_plan

__all__ = [
    "AngularBasis",
    "build_angular_basis",
    "angular_transform",
    "SphericalField",
    "SpectralField",
    "SpectralTransform",
    "spectral_transform",
    "HamiltonianSpec",
    "apply_hamiltonian",
    "momentum_coupling",
    "node_coordinates",
    "node_scale",
]

#: Above this many bytes of dense radial matrices the fast path is used.
DENSE_BUDGET_BYTES = 1 << 30


def _normalized_legendre(l: int, m: int, eta: np.ndarray) -> np.ndarray:
    """``P_l^m`` scaled to unit norm on ``[-1, 1]`` (Condon-Shortley phase)."""
    logc = 0.5 * (np.log(l + 0.5) + special.gammaln(l - m + 1) - special.gammaln(l + m + 1))
    return np.exp(logc) * special.lpmv(m, l, eta)


@dataclass(frozen=True, eq=False)
class AngularBasis:
    """Gauss-Legendre polar nodes, uniform azimuth and the matching harmonics."""

    n_theta: int
    n_phi: int
    nodes: np.ndarray
    weights: np.ndarray
    phi: np.ndarray
    m_values: np.ndarray
    # polar[b] maps polar nodes j to channels a for azimuthal number m_values[b]
    polar: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def dphi(self) -> float:
        return 2.0 * np.pi / self.n_phi

    @cached_property
    def degrees(self) -> np.ndarray:
        """``l`` of every channel, shape ``(N_theta, N_phi)``."""
        return np.abs(self.m_values)[None, :] + np.arange(self.n_theta)[:, None]

    @cached_property
    def directions(self) -> np.ndarray:
        """Unit vectors ``n_jk``, shape ``(3, N_theta, N_phi)``."""
        s = np.sqrt(1.0 - self.nodes**2)[:, None]
        c, p = np.cos(self.phi)[None, :], np.sin(self.phi)[None, :]
        z = np.broadcast_to(self.nodes[:, None], (self.n_theta, self.n_phi))
        return np.stack([s * c, s * p, z])

    @cached_property
    def scale(self) -> np.ndarray:
        """``sqrt(deta_j * dphi)``, shape ``(N_theta, N_phi)``."""
        return np.sqrt(self.weights[:, None] * self.dphi) * np.ones((1, self.n_phi))


def build_angular_basis(n_theta: int, n_phi: int = 1) -> AngularBasis:
    """Quadrature and harmonics for ``N_theta`` polar and ``N_phi`` azimuthal nodes.

    For each azimuthal number the ``N_theta`` functions with
    ``l = |m| .. |m| + N_theta - 1`` are orthonormalised on the quadrature
    (Gram-Schmidt in increasing ``l``).  For ``m = 0`` the rule is exact and
    this leaves the normalised Legendre polynomials unchanged.
    """
    if int(n_theta) != n_theta or n_theta < 1:
        raise ConfigurationError(f"n_theta must be a positive integer, got {n_theta}")
    if int(n_phi) != n_phi or n_phi < 1:
        raise ConfigurationError(f"n_phi must be a positive integer, got {n_phi}")
    eta, w = np.polynomial.legendre.leggauss(int(n_theta))
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    m_values = np.rint(np.fft.fftfreq(n_phi) * n_phi).astype(int)
    polar = []
    for m in m_values:
        am = abs(int(m))
        raw = np.array([_normalized_legendre(am + a, am, eta) for a in range(n_theta)])
        raw = raw * np.sqrt(w)[None, :]
        q, r = np.linalg.qr(raw.T)
        q = q * np.sign(np.diag(r))[None, :]
        polar.append(np.ascontiguousarray(q.T))
    return AngularBasis(int(n_theta), int(n_phi), eta, w, phi, m_values, tuple(polar))


def _check_shape(basis: AngularBasis, x: np.ndarray) -> None:
    if x.ndim != 3 or x.shape[1:] != (basis.n_theta, basis.n_phi):
        raise ValueError(
            f"field shape {x.shape} does not match angular basis (N_r, {basis.n_theta}, {basis.n_phi})"
        )


def angular_transform(
    basis: AngularBasis, x: np.ndarray, direction: str = "forward", variant: str = "plain"
) -> np.ndarray:
    """Apply ``Y`` (``variant="plain"``) or ``Y~ = i**l Y`` (``"modified"``).

    Forward projects node values onto channels; inverse is the adjoint.
    """
    x = np.asarray(x)
    _check_shape(basis, x)
    if direction not in ("forward", "inverse"):
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    if variant not in ("plain", "modified"):
        raise ValueError(f"variant must be 'plain' or 'modified', got {variant!r}")
    phase = None
    if variant == "modified":
        phase = (1j) ** (basis.degrees % 4)
    # with a single azimuthal node everything is real, so real input stays real
    if direction == "forward":
        y = np.fft.fft(x, axis=2, norm="ortho") if basis.n_phi > 1 else x
        out = np.empty(y.shape, dtype=np.result_type(y, float))
        for b, P in enumerate(basis.polar):
            out[:, :, b] = y[:, :, b] @ P.T
        return out * phase if phase is not None else out
    c = x * phase.conj() if phase is not None else x
    out = np.empty(c.shape, dtype=np.result_type(c, float))
    for b, P in enumerate(basis.polar):
        out[:, :, b] = c[:, :, b] @ P
    return np.fft.ifft(out, axis=2, norm="ortho") if basis.n_phi > 1 else out


# --- fields -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SphericalField:
    """Scaled node samples of a wave function on the DVR grid."""

    values: np.ndarray
    grid: RadialGrid
    basis: AngularBasis

    def __post_init__(self):
        _check_shape(self.basis, np.asarray(self.values))
        if np.asarray(self.values).shape[0] != self.grid.count:
            raise ValueError("radial size of the field does not match the grid")

    @classmethod
    def sample(cls, grid: RadialGrid, basis: AngularBasis, func: Callable) -> "SphericalField":
        """Sample ``func(x, y, z)`` and apply the DVR scaling."""
        x, y, z = node_coordinates(grid, basis)
        vals = np.asarray(func(x, y, z), dtype=complex)
        return cls(vals * node_scale(grid, basis), grid, basis)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def density(self) -> np.ndarray:
        """``|Psi(r_i, theta_j, phi_k)|**2`` with the grid scaling removed."""
        return np.abs(self.values / node_scale(self.grid, self.basis)) ** 2


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients ``c[n, a, b]`` on the unified momentum grid."""

    values: np.ndarray
    grid: RadialGrid
    basis: AngularBasis

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def node_coordinates(grid: RadialGrid, basis: AngularBasis):
    """Cartesian ``(x, y, z)`` of every node, each of shape ``(N_r, N_theta, N_phi)``."""
    r = grid.nodes[:, None, None]
    n = basis.directions
    return r * n[0][None], r * n[1][None], r * n[2][None]


def node_scale(grid: RadialGrid, basis: AngularBasis) -> np.ndarray:
    """``r_i sqrt(dr deta_j dphi)`` broadcast to the field shape."""
    return grid.nodes[:, None, None] * np.sqrt(grid.step) * basis.scale[None]


# --- spectral transform --------------------------------------------------------


class SpectralTransform:
    """``B Y`` and its adjoint for one radial grid and angular basis.

    Holds one radial plan per angular momentum.  ``method="dense"`` keeps the
    ``N x N`` radial matrices (fast for the moderate ``N`` of time
    propagation), ``"fast"`` uses the ``O(l N)`` transforms, and ``"auto"``
    picks dense when all matrices fit in :data:`DENSE_BUDGET_BYTES`.
    """

    def __init__(self, grid: RadialGrid, basis: AngularBasis, method: str = "auto"):
        self.grid = grid
        self.basis = basis
        degrees = basis.degrees
        self.lvalues = np.unique(degrees)
        self.plans: dict[int, RadialTransformPlan] = {int(l): make_plan(int(l), grid) for l in self.lvalues}
        self.groups = {int(l): np.nonzero(degrees == l) for l in self.lvalues}
        if method == "auto":
            need = grid.count**2 * 8 * len(self.lvalues)
            method = "dense" if need <= DENSE_BUDGET_BYTES else "fast"
        if method not in ("dense", "fast"):
            raise ConfigurationError(f"unknown transform method {method!r}")
        self.method = method
        self._matrices: dict[int, np.ndarray] = {}
        self._kinetic: dict[bool, np.ndarray] = {}
        if method == "dense":
            for l, plan in self.plans.items():
                B = plan.dense()
                self._matrices[l] = _to_unified(l, B)

    @property
    def n_points(self) -> int:
        return self.grid.count

    @cached_property
    def momenta(self) -> np.ndarray:
        """Unified momentum grid ``k~_n = n dk``, ``n = 1..N``."""
        return np.arange(1, self.n_points + 1) * (np.pi / self.grid.extent)

    def matrix(self, l: int) -> np.ndarray:
        """Dense radial matrix for degree ``l`` in unified row order."""
        if l not in self._matrices:
            return _to_unified(l, self.plans[l].dense())
        return self._matrices[l]

    def kinetic(self, corrected: bool = False) -> np.ndarray:
        """Diagonal kinetic energies ``k_nl**2 / 2`` in spectral layout."""
        key = bool(corrected)
        if key not in self._kinetic:
            self._kinetic[key] = self._build_kinetic(key)
        return self._kinetic[key]

    def _build_kinetic(self, corrected: bool) -> np.ndarray:
        out = np.empty((self.n_points,) + self.basis.degrees.shape)
        top = 0.5 * self.momenta[-1] ** 2
        for l, (a, b) in self.groups.items():
            plan = self.plans[l]
            k = corrected_momenta(plan) if corrected else plan.kgrid.nodes
            kin = _to_unified(l, 0.5 * k**2)
            # completion rows carry non-regular, high-momentum content
            kin[self.completion_slots(l)] = top
            out[:, a, b] = kin[:, None]
        return out

    def completion_slots(self, l: int) -> np.ndarray:
        """Unified-grid slots holding completion rows (``n < n0``) for degree ``l``."""
        plan = self.plans[l]
        q = np.arange(plan.n0 - plan.p)
        return (q - 1) % self.n_points if l % 2 == 1 else q

    # radial stage only

    def radial_forward(self, y: np.ndarray) -> np.ndarray:
        out = np.empty(y.shape, dtype=np.result_type(y, float))
        for l, (a, b) in self.groups.items():
            x = y[:, a, b]
            if self.method == "dense":
                out[:, a, b] = real_matmul(self._matrices[l], x)
            else:
                out[:, a, b] = _to_unified(l, self.plans[l].forward(x))
        return out

    def radial_inverse(self, c: np.ndarray) -> np.ndarray:
        out = np.empty(c.shape, dtype=np.result_type(c, float))
        for l, (a, b) in self.groups.items():
            x = c[:, a, b]
            if self.method == "dense":
                out[:, a, b] = real_matmul(self._matrices[l].T, x)
            else:
                out[:, a, b] = self.plans[l].inverse(_from_unified(l, x))
        return out

    # full transforms

    def forward(self, psi: np.ndarray) -> np.ndarray:
        return self.radial_forward(angular_transform(self.basis, psi, "forward"))

    def inverse(self, c: np.ndarray) -> np.ndarray:
        return angular_transform(self.basis, self.radial_inverse(c), "inverse")

    def to_momentum_nodes(self, c: np.ndarray) -> np.ndarray:
        """``Y~^dagger c``: plane-wave amplitudes on ``(k~_n, eta_j, phi_k)``."""
        return angular_transform(self.basis, c, "inverse", "modified")

    def from_momentum_nodes(self, phi: np.ndarray) -> np.ndarray:
        return angular_transform(self.basis, phi, "forward", "modified")


def _to_unified(l: int, b: np.ndarray) -> np.ndarray:
    # odd l: the n = 0 coefficient moves to the unused top slot n = N
    return np.roll(b, -1, axis=0) if l % 2 == 1 else b


def _from_unified(l: int, c: np.ndarray) -> np.ndarray:
    return np.roll(c, 1, axis=0) if l % 2 == 1 else c


def real_matmul(M: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``M @ x`` for real ``M`` without promoting ``M`` to complex."""
    if not np.iscomplexobj(x):
        return M @ x
    x = np.ascontiguousarray(x)
    shape = x.shape
    flat = x.reshape(shape[0], -1).view(np.float64)
    return np.ascontiguousarray(M @ flat).view(np.complex128).reshape(shape)


def spectral_transform(
    transform: SpectralTransform, field: SphericalField | SpectralField, direction: str = "forward"
):
    """Typed wrapper: ``SphericalField -> SpectralField`` and back."""
    if direction == "forward":
        if not isinstance(field, SphericalField):
            raise ValueError("forward spectral transform expects a SphericalField")
        return SpectralField(transform.forward(field.values), field.grid, field.basis)
    if direction == "inverse":
        if not isinstance(field, SpectralField):
            raise ValueError("inverse spectral transform expects a SpectralField")
        return SphericalField(transform.inverse(field.values), field.grid, field.basis)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


# --- Hamiltonian ------------------------------------------------------------------


@dataclass(frozen=True)
class HamiltonianSpec:
    """Pieces of ``H = p**2/2 - A(t).p + U(r, t)`` on the DVR grid.

    ``potential`` is a node array or a callable ``t -> node array``;
    ``vector_potential`` a callable ``t -> (Ax, Ay, Az)`` or ``None``.
    """

    potential: np.ndarray | Callable[[float], np.ndarray] | None = None
    vector_potential: Callable[[float], Sequence[float]] | None = None
    corrected_momenta: bool = False

    def potential_at(self, t: float, shape: tuple[int, ...]) -> np.ndarray:
        if self.potential is None:
            return np.zeros(shape)
        U = self.potential(t) if callable(self.potential) else self.potential
        U = np.broadcast_to(np.asarray(U), shape)
        bad = np.argwhere(~np.isfinite(U))
        if bad.size:
            raise NumericError(f"potential is not finite at node (i, j, k) = {tuple(int(v) for v in bad[0])}")
        return U

    def vector_at(self, t: float) -> np.ndarray | None:
        if self.vector_potential is None:
            return None
        A = np.asarray(self.vector_potential(t), dtype=float)
        return None if not np.any(A) else A


def momentum_coupling(transform: SpectralTransform, A: np.ndarray) -> np.ndarray:
    """``A . P`` on the momentum nodes, shape ``(N, N_theta, N_phi)``."""
    proj = np.tensordot(A, transform.basis.directions, axes=(0, 0))
    return transform.momenta[:, None, None] * proj[None]


def apply_hamiltonian(
    spec: HamiltonianSpec, transform: SpectralTransform, psi: np.ndarray, t: float = 0.0
) -> np.ndarray:
    """``H(t) psi`` for node samples ``psi``."""
    psi = np.asarray(psi)
    c = transform.forward(psi)
    out_c = transform.kinetic(spec.corrected_momenta) * c
    A = spec.vector_at(t)
    if A is not None:
        phi = transform.to_momentum_nodes(c)
        out_c = out_c - transform.from_momentum_nodes(momentum_coupling(transform, A) * phi)
    return transform.inverse(out_c) + spec.potential_at(t, psi.shape) * psi
