"""Discrete Legendre orthogonal polynomials and their discrete derivatives.

``P_l(i, N)`` is the degree-``l`` polynomial in ``i`` orthogonal under plain
summation over the integer nodes ``i = 0..N`` and normalised by
``P_l(0, N) = 1``.  In hypergeometric language it is the Hahn polynomial
``Q_l(i; 0, 0, N)``, which gives a stable three-term recurrence in the degree.

The "derivative" ``P'_l(i, N)`` used by the fast Bessel transform is a scaled
backward difference of ``P_l(., N - 1)``; see :func:`ddlop_eval`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

__all__ = [
    "Strategy",
    "DlopBasis",
    "DdlopCoeffs",
    "LMAX_DEFAULT",
    "shifted_legendre_coeffs",
    "falling_factorial",
    "dlop_eval",
    "dlop_table",
    "dlop_values",
    "dlop_norm",
    "ddlop_eval",
    "ddlop_power_coeffs",
]

#: Default cap on the transform degree.  Overridable everywhere it is used.
LMAX_DEFAULT = 64


class Strategy(str, enum.Enum):
    RECURRENCE = "degree-recurrence"
    EXACT = "exact-coefficient"


def _check_degree(ell: int, N: int) -> None:
    if N <= 0:
        raise ValueError(f"grid extent must be positive, got N={N}")
    if ell < 0:
        raise ValueError(f"degree must be non-negative, got {ell}")
    if ell > N:
        raise ValueError(f"no DLOP of degree {ell} on {N + 1} nodes (need degree <= N)")


@lru_cache(maxsize=None)
def shifted_legendre_coeffs(ell: int) -> tuple[int, ...]:
    """Integer coefficients of ``P_l(1 - 2x) = sum_j c_j x**j``."""
    return tuple((-1) ** j * comb(ell, j) * comb(ell + j, j) for j in range(ell + 1))


def falling_factorial(x, j: int):
    """``x (x-1) ... (x-j+1)``; works for ints, Fractions and numpy arrays."""
    out = 1
    for t in range(j):
        out = out * (x - t)
    return out


def _exact_value(ell: int, i, N: int) -> Fraction:
    # numpy scalars would overflow inside Fraction arithmetic
    i = Fraction(i.item() if isinstance(i, np.generic) else i)
    N = int(N)
    total = Fraction(0)
    for j, c in enumerate(shifted_legendre_coeffs(ell)):
        total += c * falling_factorial(i, j) / Fraction(falling_factorial(N, j))
    return total


def _nodes_by_difference(ell: int, N: int) -> np.ndarray:
    """``P_l(i, N)`` at ``i = 0..N`` from the difference equation in ``i``.

    ``l(l+1) y(x) = B(x) [y(x+1) - y(x)] + D(x) [y(x-1) - y(x)]`` with
    ``B = (x+1)(x-N)``, ``D = x(x-N-1)``, run up to the midpoint and
    reflected by parity.  Accurate where the degree recurrence is not,
    i.e. for degrees comparable to ``N``.
    """
    y = np.empty(N + 1)
    y[0] = 1.0
    lam = ell * (ell + 1.0)
    y[1] = 1.0 - lam / N
    half = N // 2
    for x in range(1, half):
        B = (x + 1.0) * (x - N)
        D = x * (x - N - 1.0)
        y[x + 1] = y[x] + (lam * y[x] + D * (y[x] - y[x - 1])) / B
    i = np.arange(half + 1, N + 1)
    y[i] = (-1) ** ell * y[N - i]
    return y


def _at_minus_one(ell: int, N) -> np.ndarray:
    """``P_l(-1, N)``; every term of the falling-factorial sum is positive there."""
    N = np.asarray(N, dtype=float)
    total = np.ones(N.shape)
    term = np.ones(N.shape)
    for j in range(1, ell + 1):
        # C(l,j) C(l+j,j) j! / N^(j) from the previous term
        term = term * (ell - j + 1) * (ell + j) / j / (N - j + 1)
        total = total + term
    return total


def _high_degree(ell: int, N) -> np.ndarray:
    return np.asarray(ell, dtype=float) * 3.0 > np.asarray(N, dtype=float)


def _patch_integer_points(ell: int, x: np.ndarray, N: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Replace values at integer points in ``[-1, N]`` by the accurate evaluations."""
    x, N = np.broadcast_arrays(x, N)
    vals = np.array(np.broadcast_to(vals, x.shape))
    integer = (x == np.round(x)) & (x >= -1) & (x <= N)
    at_m1 = integer & (x == -1)
    if np.any(at_m1):
        vals[at_m1] = _at_minus_one(ell, N[at_m1])
    vals[integer & (x == 0)] = 1.0
    vals[integer & (x == N)] = (-1.0) ** ell
    inner = integer & (x > 0) & (x < N) & _high_degree(ell, N) & (N == np.round(N))
    if np.any(inner) and ell > 0:
        for n in np.unique(N[inner]):
            sel = inner & (N == n)
            vals[sel] = _nodes_by_difference(ell, int(n))[x[sel].astype(int)]
    return vals


def dlop_table(lmax: int, i, N: int) -> np.ndarray:
    """All of ``P_0 .. P_lmax`` at the points ``i``.

    Uses the Hahn recurrence in the degree; at integer points, degrees above
    ``N / 3`` come from the difference equation in ``i`` instead.  ``i`` may
    be any real array (points outside ``[0, N]`` extend the polynomial).
    Returns shape ``(lmax + 1,) + i.shape``.
    """
    _check_degree(lmax, N)
    x = np.asarray(i, dtype=float)
    out = np.empty((lmax + 1,) + x.shape)
    out[0] = 1.0
    if lmax == 0:
        return out
    out[1] = 1.0 - 2.0 * x / N
    for k in range(1, lmax):
        a = (k + 1) * (N - k) / (2.0 * (2 * k + 1))
        c = k * (k + N + 1) / (2.0 * (2 * k + 1))
        out[k + 1] = ((a + c - x) * out[k] - c * out[k - 1]) / a
    for ell in range(1, lmax + 1):
        out[ell] = _patch_integer_points(ell, x, np.asarray(float(N)), out[ell])
    return out


def dlop_values(ell: int, i, N) -> np.ndarray:
    """``P_l(i, N)`` for one degree, with ``N`` broadcastable against ``i``.

    Same evaluation rules as :func:`dlop_table` but keeps only two rows of
    the recurrence, so it is the one to use on large batches of
    (point, extent) pairs.
    """
    x = np.asarray(i, dtype=float)
    N = np.asarray(N, dtype=float)
    if np.any(N < ell) or np.any(N <= 0):
        raise ValueError(f"no DLOP of degree {ell} for extents down to {N.min()}")
    prev = np.ones(np.broadcast_shapes(x.shape, N.shape))
    if ell == 0:
        return prev
    cur = 1.0 - 2.0 * x / N
    for k in range(1, ell):
        a = (k + 1) * (N - k) / (2.0 * (2 * k + 1))
        c = k * (k + N + 1) / (2.0 * (2 * k + 1))
        prev, cur = cur, ((a + c - x) * cur - c * prev) / a
    return _patch_integer_points(ell, x, N, cur * np.ones_like(prev))


def dlop_eval(ell: int, i, N: int, strategy: Strategy | str = Strategy.RECURRENCE):
    """Value of ``P_l(i, N)``.

    With ``strategy="exact-coefficient"`` the falling-factorial expansion is
    summed in rational arithmetic and a :class:`~fractions.Fraction` (or an
    object array of them) is returned.
    """
    strategy = Strategy(strategy)
    _check_degree(ell, N)
    if strategy is Strategy.EXACT:
        if np.ndim(i) == 0:
            return _exact_value(ell, i, N)
        return np.array([_exact_value(ell, v, N) for v in np.ravel(i)], dtype=object).reshape(
            np.shape(i)
        )
    vals = dlop_table(ell, i, N)[ell]
    return float(vals) if np.ndim(i) == 0 else vals


def dlop_norm(ell: int, N: int) -> float:
    """``sum_i P_l(i, N)**2``, from the closed falling-factorial form."""
    _check_degree(ell, N)
    ratio = float(N + ell + 1)
    for j in range(ell):
        ratio *= (N + ell - j) / (N - j)
    return ratio / (2 * ell + 1)


def ddlop_eval(ell: int, i, N):
    """Discrete derivative ``P'_l(i, N)``.

    ``2 / (1 + P_l(-1, N-1)) * [P_l(i, N-1) - P_l(i-1, N-1)]``, a polynomial
    of degree ``l - 1`` in ``i``.  Zero for ``l = 0``.  ``N`` may be an
    array broadcastable against ``i``.
    """
    if ell == 0:
        shape = np.broadcast_shapes(np.shape(i), np.shape(N))
        return 0.0 if shape == () else np.zeros(shape)
    if np.any(np.asarray(N) - 1 < ell):
        raise ValueError(f"DDLOP of degree {ell} needs N - 1 >= {ell}, got N={N}")
    x = np.asarray(i, dtype=float)
    M = np.asarray(N, dtype=float) - 1.0
    pm1 = _at_minus_one(ell, M)
    vals = 2.0 / (1.0 + pm1) * (dlop_values(ell, x, M) - dlop_values(ell, x - 1.0, M))
    return float(vals) if np.ndim(vals) == 0 else vals


# --- power expansion of P'_l(n - m, 2n) in m --------------------------------


def _poly_mul_linear(p: list[Fraction], a: Fraction) -> list[Fraction]:
    """Multiply polynomial ``p(m)`` by ``(a - m)``."""
    out = [Fraction(0)] * (len(p) + 1)
    for k, c in enumerate(p):
        out[k] += a * c
        out[k + 1] -= c
    return out


@lru_cache(maxsize=4096)
def _xi_exact(ell: int, n: int) -> tuple[Fraction, ...]:
    M = 2 * n - 1
    coeffs = shifted_legendre_coeffs(ell)
    # P_l(x, M) at x = n - m and x = n - 1 - m, as polynomials in m
    diff = [Fraction(0)] * ell
    ff_a: list[Fraction] = [Fraction(1)]
    ff_b: list[Fraction] = [Fraction(1)]
    denom = Fraction(1)
    for j in range(1, ell + 1):
        ff_a = _poly_mul_linear(ff_a, Fraction(n - (j - 1)))
        ff_b = _poly_mul_linear(ff_b, Fraction(n - 1 - (j - 1)))
        denom *= M - (j - 1)
        w = coeffs[j] / denom
        for k in range(min(j, ell)):
            diff[k] += w * (ff_a[k] - ff_b[k])
        # the m**j terms of both falling factorials cancel
    pm1 = sum(
        (c * (-1) ** j * factorial(j) / falling_factorial(Fraction(M), j)
         for j, c in enumerate(coeffs)),
        Fraction(0),
    )
    pref = 2 / (1 + pm1)
    return tuple(-pref * d for d in diff)


@dataclass(frozen=True)
class DdlopCoeffs:
    """``xi`` such that ``P'_l(n - m, 2n) = -sum_nu xi[nu] m**nu``."""

    degree: int
    grid_index: int
    xi: np.ndarray
    exact: tuple[Fraction, ...] = field(repr=False, default=())

    def __call__(self, m):
        """Evaluate the expansion, i.e. ``P'_l(n - m, 2n)``."""
        m = np.asarray(m, dtype=float)
        return -np.polynomial.polynomial.polyval(m, self.xi) if self.degree else np.zeros_like(m)


def ddlop_power_coeffs(ell: int, n: int) -> DdlopCoeffs:
    """Exact monomial coefficients of the DDLOP row kernel.

    Only rows ``n >= ceil((l + 1) / 2)`` exist; below that there is no DLOP
    of degree ``l`` on ``2n`` nodes.
    """
    n0 = (ell + 2) // 2
    if ell < 0 or n < max(n0, 1):
        raise ValueError(f"row n={n} does not exist for degree {ell} (need n >= {max(n0, 1)})")
    if ell == 0:
        return DdlopCoeffs(0, n, np.zeros(0), ())
    exact = _xi_exact(ell, n)
    return DdlopCoeffs(ell, n, np.array([float(v) for v in exact]), exact)


@dataclass(frozen=True)
class DlopBasis:
    """The family ``P_0 .. P_lmax`` on the nodes ``0..N``."""

    max_degree: int
    grid_extent: int
    evaluation_strategy: Strategy = Strategy.RECURRENCE

    def __post_init__(self):
        _check_degree(self.max_degree, self.grid_extent)
        object.__setattr__(self, "evaluation_strategy", Strategy(self.evaluation_strategy))

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.grid_extent + 1)

    def values(self, i=None) -> np.ndarray:
        """Table of shape ``(max_degree + 1, len(i))``; defaults to all nodes."""
        i = self.nodes if i is None else np.asarray(i)
        if self.evaluation_strategy is Strategy.EXACT:
            return np.array(
                [[float(_exact_value(l, v, self.grid_extent)) for v in np.ravel(i)]
                 for l in range(self.max_degree + 1)]
            )
        return dlop_table(self.max_degree, i, self.grid_extent)

    def norms(self) -> np.ndarray:
        return np.array([dlop_norm(l, self.grid_extent) for l in range(self.max_degree + 1)])

    def __call__(self, ell: int, i):
        if ell > self.max_degree:
            raise ValueError(f"degree {ell} above basis maximum {self.max_degree}")
        return dlop_eval(ell, i, self.grid_extent, self.evaluation_strategy)
