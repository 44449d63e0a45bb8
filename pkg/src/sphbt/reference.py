"""Independent oracles used by the tests and the scenario drivers.

Nothing here is used by the fast transform or the propagator; these are
deliberately separate, slower, textbook implementations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from math import exp, lgamma, log
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import eval_genlaguerre, eval_legendre

from .errors import ConfigurationError

__all__ = [
    "sph_bessel",
    "riccati_bessel",
    "QuadratureRule",
    "QuadratureSpec",
    "sbt_quadrature",
    "gaussian_norm",
    "gaussian_orbital",
    "gaussian_orbital_transform",
    "OscillatorSolution",
    "driven_oscillator_solution",
    "hydrogen_exact_energy",
    "hydrogen_orbital",
    "H2PLUS_EXACT",
]

#: Spheroidal-coordinate reference energies of H2+ at R = 2 (hartree).
H2PLUS_EXACT = {"1sg": -1.102634, "2su": -0.667534}


# --- spherical Bessel functions ---------------------------------------------


def _sph_jn_table(lmax: int, x: np.ndarray) -> np.ndarray:
    """``j_0 .. j_lmax`` at ``x >= 0``; shape ``(lmax + 1,) + x.shape``."""
    shape = x.shape
    x = x.ravel()
    out = np.zeros((lmax + 1,) + x.shape)
    small = x < 1e-3
    xs = np.where(small, 1.0, x)
    j0 = np.where(small, 1.0 - x**2 / 6.0 + x**4 / 120.0, np.sin(xs) / xs)
    out[0] = j0
    if lmax == 0:
        return out.reshape((1,) + shape)

    up = x >= lmax
    if np.any(up):
        xu = x[up]
        prev = np.sin(xu) / xu
        cur = np.sin(xu) / xu**2 - np.cos(xu) / xu
        out[1][up] = cur
        for ell in range(1, lmax):
            prev, cur = cur, (2 * ell + 1) / xu * cur - prev
            out[ell + 1][up] = cur

    down = ~up
    if np.any(down):
        xd = x[down]
        # ratios j_l / j_{l-1} from the continued fraction, started well above lmax
        start = lmax + 20 + int(np.sqrt(40.0 * (lmax + 1)))
        ratio = np.zeros_like(xd)
        ratios = np.empty((lmax + 1,) + xd.shape)
        for ell in range(start, 0, -1):
            ratio = xd / (2 * ell + 1 - xd * ratio)
            if ell <= lmax:
                ratios[ell] = ratio
        val = out[0][down]
        for ell in range(1, lmax + 1):
            val = val * ratios[ell]
            out[ell][down] = val
    return out.reshape((lmax + 1,) + shape)


def sph_bessel(ell: int, x, derivative: bool = True):
    """Spherical Bessel function ``j_l(x)`` and, by default, ``j_l'(x)``.

    Upward recurrence where ``x >= l`` and a continued-fraction (Miller)
    downward ratio recurrence below, normalised by ``j_0``.
    """
    if ell < 0:
        raise ValueError(f"degree must be non-negative, got {ell}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("argument must be non-negative")
    tab = _sph_jn_table(ell + 1, x)
    j = tab[ell]
    if not derivative:
        return float(j) if j.ndim == 0 else j
    if ell == 0:
        dj = -tab[1]
    else:
        dj = (ell * tab[ell - 1] - (ell + 1) * tab[ell + 1]) / (2 * ell + 1)
    if j.ndim == 0:
        return float(j), float(dj)
    return j, dj


def riccati_bessel(ell: int, x):
    """``chi_l(x) = x j_l(x)`` and ``chi_l'(x) = j_l(x) + x j_l'(x)``."""
    x = np.asarray(x, dtype=float)
    j, dj = sph_bessel(ell, x)
    return x * j, j + x * dj


# --- quadrature SBT ----------------------------------------------------------


class QuadratureRule(str, enum.Enum):
    TRAPEZOID = "trapezoid"
    GAUSS_LEGENDRE = "gauss-legendre"


@dataclass(frozen=True)
class QuadratureSpec:
    """Oversampling relative to the working grid step and the panel rule."""

    oversample: int = 16
    rule: QuadratureRule = QuadratureRule.GAUSS_LEGENDRE

    def __post_init__(self):
        object.__setattr__(self, "rule", QuadratureRule(self.rule))
        if self.oversample < 8:
            raise ConfigurationError(f"oracle oversample must be >= 8, got {self.oversample}")

    def nodes(self, step: float, extent: float) -> tuple[np.ndarray, np.ndarray]:
        panels = int(round(extent / step))
        if self.rule is QuadratureRule.TRAPEZOID:
            r = np.linspace(0.0, extent, panels * self.oversample + 1)
            w = np.full(r.shape, r[1] - r[0])
            w[[0, -1]] *= 0.5
            return r, w
        x, w = np.polynomial.legendre.leggauss(self.oversample)
        h = extent / panels
        left = np.arange(panels)[:, None] * h
        return (left + 0.5 * h * (x + 1.0)).ravel(), np.tile(0.5 * h * w, panels)


def sbt_quadrature(
    psi: Callable[[np.ndarray], np.ndarray],
    ell: int,
    k,
    extent: float,
    step: float,
    spec: QuadratureSpec = QuadratureSpec(),
) -> np.ndarray:
    """``c_l(k) = sqrt(2/pi) int_0^rmax chi_l(k r) psi(r) dr`` by fine quadrature.

    ``step`` is the working grid step; the oracle uses ``spec.oversample``
    nodes per step.
    """
    r, w = spec.nodes(step, extent)
    f = np.asarray(psi(r)) * w
    k = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.empty(k.shape, dtype=np.result_type(f, float))
    for idx, kv in enumerate(k):
        chi = kv * r * sph_bessel(ell, kv * r, derivative=False)
        out[idx] = np.sqrt(2.0 / np.pi) * np.dot(chi, f)
    return out


# --- Gaussian orbitals ----------------------------------------------------------


def gaussian_norm(ell: int) -> float:
    """``A_l`` giving ``int_0^inf (A_l r^(l+1) e^(-r^2/2))^2 dr = 1``."""
    return exp(0.5 * (log(2.0) - lgamma(ell + 1.5)))


def gaussian_orbital(ell: int, r):
    """Unit-norm radial Gaussian orbital ``A_l r^(l+1) exp(-r^2/2)``."""
    r = np.asarray(r, dtype=float)
    return gaussian_norm(ell) * r ** (ell + 1) * np.exp(-0.5 * r * r)


def gaussian_orbital_transform(ell: int, k):
    """Its spherical Bessel transform, which has the same form in ``k``."""
    return gaussian_orbital(ell, k)


# --- driven oscillator -----------------------------------------------------------


@dataclass(frozen=True)
class OscillatorSolution:
    """Exact state of the unit isotropic oscillator driven along ``z``.

    The drive is ``A(t) = -A0 sin(w t)``, ``qE(t) = w A0 cos(w t)``.  In the
    length gauge the ground-state Gaussian rides the classical trajectory
    ``zeta(t)``; the velocity-gauge state (coupling ``-A p``) differs by the
    phase ``exp(i A z + i int A^2/2)``.
    """

    amplitude: float
    frequency: float
    gauge: str = "velocity"
    t_max: float = 100.0

    def __post_init__(self):
        if self.gauge not in ("length", "velocity"):
            raise ValueError(f"gauge must be 'length' or 'velocity', got {self.gauge!r}")

    def drive(self, t):
        return self.frequency * self.amplitude * np.cos(self.frequency * t)

    def vector_potential(self, t):
        return -self.amplitude * np.sin(self.frequency * t)

    @cached_property
    def _trajectory(self):
        # state: zeta, zeta', int (zeta'^2/2 - zeta^2/2)
        def rhs(t, y):
            return [y[1], self.drive(t) - y[0], 0.5 * y[1] ** 2 - 0.5 * y[0] ** 2]

        sol = solve_ivp(
            rhs, (0.0, self.t_max), [0.0, 0.0, 0.0], method="DOP853",
            rtol=1e-13, atol=1e-15, dense_output=True,
        )
        if not sol.success:
            raise RuntimeError(sol.message)
        return sol.sol

    def trajectory(self, t):
        """``(zeta, zeta', action)`` at time(s) ``t`` in ``[0, t_max]``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_max):
            raise ValueError(f"time outside [0, {self.t_max}]")
        return self._trajectory(t)

    def closed_form_zeta(self, t):
        """Analytic ``zeta(t)`` for the cosine drive (used to check the integrator)."""
        w, a = self.frequency, self.amplitude
        t = np.asarray(t, dtype=float)
        if abs(w - 1.0) < 1e-12:
            return 0.5 * a * t * np.sin(t)
        return w * a / (1.0 - w * w) * (np.cos(w * t) - np.cos(t))

    def gauge_phase(self, t, z):
        w, a = self.frequency, self.amplitude
        squared = 0.25 * a * a * (t - np.sin(2 * w * t) / (2 * w))
        return self.vector_potential(t) * z + squared

    def __call__(self, t: float, x, y, z):
        zeta, dzeta, action = self.trajectory(t)
        x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
        rho2 = x * x + y * y + (z - zeta) ** 2
        phase = dzeta * z - 1.5 * t - action
        if self.gauge == "velocity":
            phase = phase + self.gauge_phase(t, z)
        return np.pi ** -0.75 * np.exp(-0.5 * rho2 + 1j * phase)


def driven_oscillator_solution(
    A0: float, omega: float, gauge: str = "velocity", t_max: float = 100.0
) -> OscillatorSolution:
    """Sampler ``psi(t, x, y, z)`` of the exact driven-oscillator state."""
    return OscillatorSolution(A0, omega, gauge, t_max)


def hydrogen_exact_energy(n: int, Z: float = 1.0) -> float:
    """Bound-state energy ``-Z^2 / (2 n^2)`` in hartree."""
    if n < 1:
        raise ValueError(f"principal quantum number must be >= 1, got {n}")
    return -Z * Z / (2.0 * n * n)


def hydrogen_orbital(n: int, ell: int, x, y, z, Z: float = 1.0):
    """Bound orbital ``psi_{n l 0}`` (``m = 0``, quantisation axis ``z``)."""
    if not 0 <= ell < n:
        raise ValueError(f"need 0 <= l < n, got n={n}, l={ell}")
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    r = np.sqrt(x * x + y * y + z * z)
    rho = 2.0 * Z * r / n
    log_norm = 0.5 * (
        3.0 * log(2.0 * Z / n) + lgamma(n - ell) - log(2.0 * n) - lgamma(n + ell + 1)
    )
    radial = exp(log_norm) * rho**ell * np.exp(-0.5 * rho) * eval_genlaguerre(n - ell - 1, 2 * ell + 1, rho)
    cos_t = np.divide(z, r, out=np.ones_like(r), where=r > 0)
    return radial * np.sqrt((2 * ell + 1) / (4.0 * np.pi)) * eval_legendre(ell, cos_t)
