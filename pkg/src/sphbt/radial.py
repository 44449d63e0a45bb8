"""Orthogonal fast discrete spherical Bessel transform on a uniform grid.

The transform of degree ``l`` is factorised as ``b = T F psi``:

* ``F`` is an orthonormal sine (even ``l``) or cosine (odd ``l``) transform
  from the half-integer radial nodes ``r_i = (i - 1/2) dr`` onto the momentum
  nodes ``k_n = n dk``, ``dk = pi / rmax``, applied with an FFT;
* ``T`` (Fourier-to-Bessel, FtB) is an orthogonal matrix whose regular rows
  are built from discrete Legendre derivative polynomials and whose first
  few rows complete the basis with discrete Legendre polynomials.

Vectors live in three representations: coordinate samples
``psi_i = psi(r_i) sqrt(dr)``, Fourier coefficients ``f_n`` and Bessel
coefficients ``b_n = c_l(k_n) sqrt(w_n)``.  Arrays are transformed along
axis 0 and may carry any trailing batch dimensions.

Fast application of ``T`` costs ``O(l N)``.  The kernel of a regular row,
``P'_l(n - m, 2n)``, is a degree ``l - 1`` polynomial in ``m``; rather than
expanding it in raw monomials ``m**nu`` (which loses roughly ``5.8**l``
relative accuracy to cancellation) rows are grouped into blocks
``[a, b]`` with ``b / a`` close to one and expanded in Chebyshev
polynomials ``T_nu(m / b)``.  Running sums are carried from block to block
by exact polynomial rescaling.  The literal monomial scheme is kept as
``method="monomial"`` for small ``l``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import fft as sfft
from scipy import special

from .dlop import LMAX_DEFAULT, _at_minus_one, ddlop_eval, ddlop_power_coeffs, dlop_norm, dlop_values
from . import _ftb_kernels as _kernels
from .errors import NumericError

__all__ = [
    "RadialGrid",
    "MomentumGrid",
    "Representation",
    "RadialVector",
    "RadialTransformPlan",
    "make_plan",
    "fourier_apply",
    "ftb_apply_fast",
    "dsbt_apply",
    "corrected_momenta",
    "basis_function",
]

#: Allowed growth of a row kernel over its Chebyshev block; sets block widths.
_BLOCK_GROWTH = 30.0


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid ``r_i = (i - 1/2) dr``, ``i = 1..N``."""

    step: float
    count: int

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"radial step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"need at least 2 radial points, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_extent(cls, step: float, extent: float) -> "RadialGrid":
        n = round(extent / step)
        if abs(n * step - extent) > 1e-9 * extent:
            raise ValueError(f"rmax={extent} is not a multiple of dr={step}")
        return cls(step, n)

    @property
    def extent(self) -> float:
        return self.step * self.count

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(1, self.count + 1) - 0.5) * self.step


@dataclass(frozen=True)
class MomentumGrid:
    """Momentum nodes ``k_n = n dk`` for ``n = p..N + p - 1``."""

    step: float
    count: int
    parity_offset: int

    @classmethod
    def for_degree(cls, ell: int, grid: RadialGrid) -> "MomentumGrid":
        return cls(np.pi / grid.extent, grid.count, 1 if ell % 2 == 0 else 0)

    @property
    def upper(self) -> int:
        return self.count + self.parity_offset - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.parity_offset, self.upper + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.indices * self.step

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.count, self.step)
        if self.parity_offset == 0:
            w[0] *= 0.5
        return w


def first_regular(ell: int) -> int:
    """``n_0 = ceil((l + 1) / 2)``, the first row with a DDLOP kernel."""
    return (ell + 2) // 2


class Representation(str, enum.Enum):
    COORDINATE = "coordinate"
    FOURIER = "fourier"
    BESSEL = "bessel"


@dataclass(frozen=True)
class RadialVector:
    """Samples of one radial channel, tagged with their representation."""

    values: np.ndarray
    representation: Representation
    degree: int

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values))
        object.__setattr__(self, "representation", Representation(self.representation))


@dataclass(frozen=True)
class _Block:
    start: int  # first row n
    stop: int  # last row n (inclusive); also the Chebyshev scale
    coeffs: np.ndarray  # (stop - start + 1, n_nu)
    alphas: np.ndarray  # (stop - start + 1,)
    rescale: np.ndarray | None  # maps this block's basis onto the previous one


class _FlatBlocks(NamedTuple):
    V: np.ndarray  # Chebyshev basis of each block row in its block's scale
    C: np.ndarray  # kernel coefficients per row
    alphas: np.ndarray
    starts: np.ndarray  # offsets of the blocks into the rows above
    lengths: np.ndarray
    low: np.ndarray  # first block's basis over the rows before it
    rescale: np.ndarray  # (blocks, n_nu, n_nu); entry 0 unused
    W: np.ndarray  # V and C interleaved per row, for the compiled sweep


@dataclass(frozen=True, eq=False)
class RadialTransformPlan:
    """Everything needed to apply the degree-``l`` transform on one grid.

    Build with :func:`make_plan`.  Rows and columns of ``T`` are indexed by
    position ``q = n - p``, so every array here has length ``N``.
    """

    degree: int
    grid: RadialGrid
    kgrid: MomentumGrid
    alphas: np.ndarray
    extra_rows: np.ndarray  # (n0 - p, N)
    head_rows: np.ndarray  # dense regular rows n0 .. n_direct - 1, columns p .. n_direct - 1
    blocks: tuple[_Block, ...] = field(repr=False)
    parity_set: np.ndarray = field(repr=False)

    # --- layout --------------------------------------------------------

    @property
    def fourier_kind(self) -> str:
        return "sine" if self.degree % 2 == 0 else "cosine"

    @property
    def n_points(self) -> int:
        return self.grid.count

    @property
    def p(self) -> int:
        return self.kgrid.parity_offset

    @property
    def n0(self) -> int:
        return first_regular(self.degree)

    @property
    def n_direct(self) -> int:
        return self.n0 + self.head_rows.shape[0]

    @cached_property
    def column_weights(self) -> np.ndarray:
        """``sqrt(1 - delta_{m0} / 2)`` over the columns."""
        w = np.ones(self.n_points)
        if self.p == 0:
            w[0] = np.sqrt(0.5)
        return w

    @property
    def sign(self) -> int:
        """``(-1)**ceil(l/2)``, so that ``f_n = c~_l(k_n) sqrt(w_n)``."""
        return -1 if ((self.degree + 1) // 2) % 2 else 1

    @cached_property
    def xi_table(self) -> np.ndarray:
        """Monomial coefficients ``xi[n - n0, nu]`` of the regular-row kernels.

        Built on first use from exact rational arithmetic; only the
        ``"monomial"`` method needs them.
        """
        rows = range(self.n0, self.kgrid.upper + 1)
        return np.array([ddlop_power_coeffs(self.degree, n).xi for n in rows])

    # --- Fourier stage -------------------------------------------------

    def fourier(self, x: np.ndarray, inverse: bool = False) -> np.ndarray:
        x = self._check(x)
        if self.degree % 2 == 0:
            out = (sfft.idst if inverse else sfft.dst)(x, type=2, norm="ortho", axis=0)
        else:
            out = (sfft.idct if inverse else sfft.dct)(x, type=2, norm="ortho", axis=0)
        return out if self.sign > 0 else -out

    def fourier_matrix(self) -> np.ndarray:
        """Dense ``F``; rows are momenta, columns are radial nodes."""
        kr = np.outer(self.kgrid.nodes, self.grid.nodes)
        F = np.sin(kr) if self.degree % 2 == 0 else np.cos(kr)
        scale = np.full(self.n_points, np.sqrt(2.0 / self.n_points))
        if self.degree % 2 == 0:
            scale[-1] = np.sqrt(1.0 / self.n_points)
        else:
            scale[0] = np.sqrt(1.0 / self.n_points)
        return self.sign * scale[:, None] * F

    # --- FtB stage -----------------------------------------------------

    def ftb(self, x: np.ndarray, inverse: bool = False, method: str = "fast") -> np.ndarray:
        """Apply ``T`` (or ``T^T`` when ``inverse``).

        ``method`` is ``"fast"`` (blocked Chebyshev, the default),
        ``"monomial"`` (power expansion, accurate only for small ``l``) or
        ``"dense"`` (materialised matrix).
        """
        x = self._check(x)
        if self.degree == 0:
            return x.copy()
        if method == "dense":
            T = self.dense_ftb()
            return np.tensordot(T.T if inverse else T, x, axes=(1, 0))
        if method == "monomial":
            return _monomial_inverse(self, x) if inverse else _monomial_forward(self, x)
        if method != "fast":
            raise ValueError(f"unknown FtB method {method!r}")
        return _blocked_inverse(self, x) if inverse else _blocked_forward(self, x)

    @cached_property
    def _flat(self) -> _FlatBlocks:
        """Per-row block data laid end to end for vectorized application."""
        ps = self.parity_set
        bl = self.blocks
        V = np.concatenate([_basis(np.arange(b.start, b.stop + 1), b.stop, ps) for b in bl])
        lengths = np.array([b.stop - b.start + 1 for b in bl])
        starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        low = _basis(np.arange(self.p, bl[0].start), bl[0].stop, ps)
        eye = np.eye(len(ps))
        Cf = np.concatenate([b.coeffs for b in bl])
        return _FlatBlocks(
            V,
            Cf,
            np.concatenate([b.alphas for b in bl]),
            starts,
            lengths,
            low,
            np.stack([eye if b.rescale is None else b.rescale for b in bl]),
            np.ascontiguousarray(np.stack([V, Cf], axis=1)),
        )

    @cached_property
    def _dense_T(self) -> np.ndarray:
        T = self._build_dense_ftb()
        T.flags.writeable = False
        return T

    def _build_dense_ftb(self) -> np.ndarray:
        N, p, n0 = self.n_points, self.p, self.n0
        T = np.zeros((N, N))
        T[: n0 - p] = self.extra_rows
        w = self.column_weights
        rows = np.arange(n0, self.kgrid.upper + 1)
        for chunk in np.array_split(rows, max(1, len(rows) * N // 2_000_000)):
            if chunk.size == 0:
                continue
            m = np.arange(p, self.kgrid.upper + 1)
            n = chunk[:, None]
            i = n - m[None, :]
            kern = np.where(i > 0, ddlop_eval(self.degree, np.maximum(i, 1), 2 * n), 0.0)
            block = kern * w[None, :]
            block[np.arange(chunk.size), chunk - p] = _diagonal(self.degree, chunk)
            T[chunk - p] = self.alphas[chunk - p, None] * block
        return T

    def dense_ftb(self) -> np.ndarray:
        """Materialised ``T`` (cached).  ``O(N**2)`` memory; for checks and small ``N``."""
        if self.degree == 0:
            return np.eye(self.n_points)
        return self._dense_T

    def dense(self) -> np.ndarray:
        """Materialised full transform ``B = T F`` (not cached)."""
        return self.forward(np.eye(self.n_points))

    # --- composition ---------------------------------------------------

    def forward(self, psi: np.ndarray, method: str = "fast") -> np.ndarray:
        return self.ftb(self.fourier(psi), method=method)

    def inverse(self, b: np.ndarray, method: str = "fast") -> np.ndarray:
        return self.fourier(self.ftb(b, inverse=True, method=method), inverse=True)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[:1] != (self.n_points,):
            raise ValueError(f"expected {self.n_points} samples along axis 0, got shape {x.shape}")
        return x


# --- plan construction ------------------------------------------------------


def _diagonal(ell: int, n: np.ndarray) -> np.ndarray:
    # 1 + P'(0, 2n) / 2 written as 2 / (1 + a), a = P(-1, 2n - 1) > 0; the
    # direct sum cancels to a few digits when a is large (high l, small n).
    return 2.0 / (1.0 + _at_minus_one(ell, 2 * np.asarray(n) - 1))


def _regular_alphas(ell: int, n: np.ndarray) -> np.ndarray:
    # Row norm of I - L: the weighted-sum identity collapses
    # sum_m (delta - L)^2 to 1 - P'(0, 2n)^2 / 4 = 4a / (1 + a)^2.
    a = _at_minus_one(ell, 2 * np.asarray(n) - 1)
    return (1.0 + a) / (2.0 * np.sqrt(a))


def _block_ratio(ell: int, growth: float) -> float:
    if ell <= 1:
        return np.inf
    return np.cosh(np.arccosh(growth) / (ell - 1)) - 1.0


def _cheb_rescale(parity_set: np.ndarray, s: float) -> np.ndarray:
    """``R`` with ``T_nu(s x) = sum_mu R[nu, mu] T_mu(x)`` on ``parity_set``."""
    deg = int(parity_set[-1])
    x = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    V = C.chebvander(x, deg)
    vals = C.chebvander(s * x, deg)[:, parity_set]
    coef = np.linalg.solve(V, vals)  # (deg + 1, n_nu): column nu holds T_nu(s x)
    return coef[parity_set].T


def _block_coeffs(ell: int, rows: np.ndarray, scale: int, parity_set: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients of ``m -> P'_l(n - m, 2n)`` on ``[-scale, scale]``."""
    d = ell  # points for a degree l - 1 polynomial
    x = np.cos(np.pi * (np.arange(d) + 0.5) / d)
    V = C.chebvander(x, d - 1)
    n = rows[:, None].astype(float)
    vals = ddlop_eval(ell, n - scale * x[None, :], 2 * n)
    coef = np.linalg.solve(V, vals.T).T
    return coef[:, parity_set]


def make_plan(ell: int, grid: RadialGrid, lmax: int = LMAX_DEFAULT) -> RadialTransformPlan:
    """Precompute the degree-``ell`` transform on ``grid``."""
    if ell < 0 or ell > lmax:
        raise ValueError(f"degree {ell} outside [0, {lmax}]")
    kg = MomentumGrid.for_degree(ell, grid)
    N, p, n0, top = grid.count, kg.parity_offset, first_regular(ell), kg.upper
    if top < n0 + 1:
        raise ValueError(f"grid of {N} points too small for degree {ell} (need N >= {n0 + 2 - p})")

    alphas = np.ones(N)
    # completion rows: DLOP of degree 2n - p on the reflected momentum index
    m = kg.indices
    cw = np.ones(N)
    if p == 0:
        cw[0] = np.sqrt(0.5)
    extra = []
    for n in range(p, n0):
        deg = 2 * n - p
        alphas[n - p] = np.sqrt(2.0 / dlop_norm(deg, 2 * top))
        extra.append(alphas[n - p] * dlop_values(deg, top - m, 2 * top) * cw)
    extra_rows = np.array(extra).reshape(n0 - p, N)

    regular = np.arange(n0, top + 1)
    if ell > 0:
        alphas[n0 - p :] = _regular_alphas(ell, regular)

    parity_set = np.arange((ell - 1) % 2, max(ell, 1), 2) if ell > 0 else np.zeros(0, int)
    ratio = _block_ratio(ell, _BLOCK_GROWTH)
    n_direct = n0 if not np.isfinite(ratio) else max(n0, int(np.ceil(2.0 / ratio)))
    n_direct = min(max(n_direct, n0 + 1), top + 1)

    head = np.zeros((n_direct - n0, n_direct - p))
    if ell > 0 and n_direct > n0:
        nn = np.arange(n0, n_direct)[:, None]
        mm = np.arange(p, n_direct)[None, :]
        i = nn - mm
        kern = np.where(i > 0, ddlop_eval(ell, np.maximum(i, 1), 2 * nn), 0.0)
        kern = kern * cw[None, : n_direct - p]
        kern[np.arange(n_direct - n0), np.arange(n0, n_direct) - p] = _diagonal(ell, nn[:, 0])
        head = alphas[n0 - p : n_direct - p, None] * kern

    blocks = []
    if ell > 0:
        a = n_direct
        prev_scale = None
        while a <= top:
            b = min(top, max(a, int(np.floor(a * (1.0 + ratio))) if np.isfinite(ratio) else top))
            rows = np.arange(a, b + 1)
            rescale = None if prev_scale is None else _cheb_rescale(parity_set, prev_scale / b)
            blocks.append(
                _Block(a, b, _block_coeffs(ell, rows, b, parity_set), alphas[rows - p], rescale)
            )
            prev_scale = b
            a = b + 1

    return RadialTransformPlan(
        degree=ell,
        grid=grid,
        kgrid=kg,
        alphas=alphas,
        extra_rows=extra_rows,
        head_rows=head,
        blocks=tuple(blocks),
        parity_set=parity_set,
    )


# --- fast FtB: blocked Chebyshev ---------------------------------------------


def _basis(m: np.ndarray, scale: int, parity_set: np.ndarray) -> np.ndarray:
    return C.chebvander(m / scale, int(parity_set[-1]))[:, parity_set]


def _compiled(plan: RadialTransformPlan, x: np.ndarray, g, out: np.ndarray, inverse: bool) -> None:
    """Run the compiled block sweep column by column on real and imaginary parts."""
    fl = plan._flat
    N = x.shape[0]
    cols = [np.ascontiguousarray(c) for c in x.reshape(N, -1).T]
    gcols = None if g is None else [np.ascontiguousarray(c) for c in g.reshape(N, -1).T]
    o2 = out.reshape(N, -1)
    low = fl.low * plan.column_weights[: fl.low.shape[0], None] if inverse else fl.low
    args = (fl.W, fl.alphas, fl.starts, fl.rescale, low)
    for j, col in enumerate(cols):
        parts = (np.real, np.imag) if np.iscomplexobj(col) else (np.real,)
        for part in parts:
            res = np.ascontiguousarray(part(o2[:, j]), dtype=float)
            xr = np.ascontiguousarray(part(col), dtype=float)
            if inverse:
                _kernels.inverse_sweep(*args, xr, res)
            else:
                gr = np.ascontiguousarray(part(gcols[j]), dtype=float)
                _kernels.forward_sweep(*args, gr, xr, res)
            if part is np.imag:
                o2[:, j].imag = res
            elif np.iscomplexobj(o2):
                o2[:, j].real = res
            else:
                o2[:, j] = res
    if not np.shares_memory(o2, out):
        out[...] = o2.reshape(out.shape)


def _blocked_forward(plan: RadialTransformPlan, f: np.ndarray) -> np.ndarray:
    p, n0 = plan.p, plan.n0
    ex = (1,) * (f.ndim - 1)
    g = f * plan.column_weights.reshape((-1,) + ex)
    out = np.empty(f.shape, dtype=np.result_type(f, float))
    ne = n0 - p
    out[:ne] = np.tensordot(plan.extra_rows, f, axes=(1, 0))
    nd = plan.n_direct
    out[ne : nd - p] = np.tensordot(plan.head_rows, f[: nd - p], axes=(1, 0))
    if not plan.blocks:
        return out
    fl = plan._flat
    r0 = nd - p
    if _kernels.AVAILABLE:
        _compiled(plan, f, g, out, inverse=False)
        return out
    terms = fl.V.reshape(fl.V.shape + ex) * g[r0:, None]
    # block-local running sums from one global cumsum
    cs = np.cumsum(terms, axis=0)
    before = np.concatenate([np.zeros_like(cs[:1]), cs[fl.starts[1:] - 1]])
    totals = np.add.reduceat(terms, fl.starts, axis=0)
    moments = np.tensordot(fl.low, g[:r0], axes=(0, 0))
    carried = np.empty_like(totals)
    for k, blk in enumerate(plan.blocks):
        if blk.rescale is not None:
            moments = np.tensordot(blk.rescale, moments, axes=(1, 0))
        carried[k] = moments
        moments = moments + totals[k]
    run = cs - 0.5 * terms + np.repeat(carried - before, fl.lengths, axis=0)
    corr = np.einsum("kj,kj...->k...", fl.C, run)
    out[r0:] = fl.alphas.reshape((-1,) + ex) * (f[r0:] + corr)
    return out


def _blocked_inverse(plan: RadialTransformPlan, b: np.ndarray) -> np.ndarray:
    p, n0 = plan.p, plan.n0
    ne = n0 - p
    nd = plan.n_direct
    out = np.tensordot(plan.extra_rows.T, b[:ne], axes=(1, 0)).astype(
        np.result_type(b, float), copy=False
    )
    out[: nd - p] += np.tensordot(plan.head_rows.T, b[ne : nd - p], axes=(1, 0))
    if not plan.blocks:
        return out
    fl = plan._flat
    ex = (1,) * (b.ndim - 1)
    r0 = nd - p
    if _kernels.AVAILABLE:
        _compiled(plan, b, None, out, inverse=True)
        return out
    ab = fl.alphas.reshape((-1,) + ex) * b[r0:]
    beta = fl.C.reshape(fl.C.shape + ex) * ab[:, None]
    # block-local suffix sums from one global reversed cumsum
    rc = np.flip(np.cumsum(np.flip(beta, 0), axis=0), 0)
    after = np.concatenate([rc[fl.starts[1:]], np.zeros_like(rc[:1])])
    totals = np.add.reduceat(beta, fl.starts, axis=0)
    carried = np.empty_like(totals)
    carry = np.zeros_like(totals[0])
    for k in range(len(plan.blocks) - 1, -1, -1):
        carried[k] = carry
        carry = totals[k] + carry
        if plan.blocks[k].rescale is not None:
            carry = np.tensordot(plan.blocks[k].rescale.T, carry, axes=(1, 0))
    tail = rc - 0.5 * beta + np.repeat(carried - after, fl.lengths, axis=0)
    out[r0:] += ab + np.einsum("kj,kj...->k...", fl.V, tail)
    low = np.tensordot(fl.low, carry, axes=(1, 0))
    out[:r0] += low * plan.column_weights[:r0].reshape((-1,) + ex)
    return out


# --- literal monomial recurrences ---------------------------------------------


def _monomial_forward(plan: RadialTransformPlan, f: np.ndarray) -> np.ndarray:
    p, n0, ell = plan.p, plan.n0, plan.degree
    ne = n0 - p
    out = np.empty(f.shape, dtype=np.result_type(f, float))
    out[:ne] = np.tensordot(plan.extra_rows, f, axes=(1, 0))
    xi = plan.xi_table
    extra_dims = (1,) * (f.ndim - 1)
    m = plan.kgrid.indices.astype(float)
    g = f * plan.column_weights.reshape((-1,) + extra_dims)
    pw = m[:, None] ** np.arange(ell)[None, :]  # 0**0 = 1 keeps the sqrt(1/2) f_0 term
    terms = pw.reshape(pw.shape + extra_dims) * g[:, None]
    s = np.cumsum(terms, axis=0) - 0.5 * terms  # s_{nu n} with the half weight at m = n
    rows = slice(n0 - p, None)
    a = plan.alphas[rows].reshape((-1,) + extra_dims)
    out[rows] = a * f[rows] - a * np.einsum("kj,kj...->k...", xi, s[rows])
    return out


def _monomial_inverse(plan: RadialTransformPlan, b: np.ndarray) -> np.ndarray:
    p, n0, ell = plan.p, plan.n0, plan.degree
    ne = n0 - p
    extra_dims = (1,) * (b.ndim - 1)
    out = np.tensordot(plan.extra_rows.T, b[:ne], axes=(1, 0)).astype(
        np.result_type(b, float), copy=False
    )
    xi = plan.xi_table
    rows = slice(n0 - p, None)
    a = plan.alphas[rows].reshape((-1,) + extra_dims)
    beta = xi.reshape(xi.shape + extra_dims) * (a * b[rows])[:, None]
    st = np.flip(np.cumsum(np.flip(beta, 0), axis=0), 0) - 0.5 * beta  # s~_{nu m}, m >= n0
    m = plan.kgrid.indices.astype(float)
    pw = m[:, None] ** np.arange(ell)[None, :]
    out[rows] += a * b[rows] - np.einsum("kj,kj...->k...", pw[rows], st)
    low = st[0] + 0.5 * beta[0]  # s~_{nu, n0 + 1/2}
    cw = plan.column_weights[:ne].reshape((-1,) + extra_dims)
    out[:ne] -= cw * np.tensordot(pw[:ne], low, axes=(1, 0))
    return out


# --- representation-checked entry points --------------------------------------

_FORWARD = ("forward", "inverse")


def _direction(direction: str) -> bool:
    if direction not in _FORWARD:
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return direction == "inverse"


def _expect(x: RadialVector, plan: RadialTransformPlan, rep: Representation) -> None:
    if x.representation is not rep:
        raise ValueError(f"expected a {rep.value} vector, got {x.representation.value}")
    if x.degree != plan.degree:
        raise ValueError(f"vector degree {x.degree} does not match plan degree {plan.degree}")


def fourier_apply(plan: RadialTransformPlan, x: RadialVector, direction: str = "forward") -> RadialVector:
    inverse = _direction(direction)
    _expect(x, plan, Representation.FOURIER if inverse else Representation.COORDINATE)
    out = plan.fourier(x.values, inverse=inverse)
    rep = Representation.COORDINATE if inverse else Representation.FOURIER
    return RadialVector(out, rep, plan.degree)


def ftb_apply_fast(
    plan: RadialTransformPlan, x: RadialVector, direction: str = "forward", method: str = "fast"
) -> RadialVector:
    inverse = _direction(direction)
    _expect(x, plan, Representation.BESSEL if inverse else Representation.FOURIER)
    out = plan.ftb(x.values, inverse=inverse, method=method)
    rep = Representation.FOURIER if inverse else Representation.BESSEL
    return RadialVector(out, rep, plan.degree)


def dsbt_apply(plan: RadialTransformPlan, x: RadialVector, direction: str = "forward") -> RadialVector:
    if _direction(direction):
        return fourier_apply(plan, ftb_apply_fast(plan, x, "inverse"), "inverse")
    return ftb_apply_fast(plan, fourier_apply(plan, x, "forward"), "forward")


# --- corrected momenta -------------------------------------------------------------


def _riccati(ell: int, x: np.ndarray):
    """``chi_l(x) = x j_l(x)`` and its first two derivatives."""
    j = special.spherical_jn(ell, x)
    dj = special.spherical_jn(ell, x, derivative=True)
    chi = x * j
    dchi = j + x * dj
    d2chi = (ell * (ell + 1) / x**2 - 1.0) * chi
    return chi, dchi, d2chi


def corrected_momenta(plan: RadialTransformPlan, tol: float = 1e-12) -> np.ndarray:
    """Momenta ``k_nl`` at which ``chi_l(k r)`` meets the basis boundary condition.

    Even ``l``: ``chi_l(k rmax) = 0``; odd ``l``: ``chi_l'(k rmax) = 0``.  The
    ``j``-th positive root is assigned to row ``n0 + j - 1``.  Completion
    rows ``n < n0`` have no regular Bessel counterpart and keep ``k_n``.
    Returns an array aligned with ``plan.kgrid.nodes``.
    """
    ell, R = plan.degree, plan.grid.extent
    kg = plan.kgrid
    k = kg.nodes.copy()
    if ell == 0:
        return k
    want = kg.upper - plan.n0 + 1
    odd = ell % 2 == 1

    def cond(x):
        chi, dchi, d2chi = _riccati(ell, x)
        return (dchi, d2chi) if odd else (chi, dchi)

    x = np.arange(max(0.5 * ell, 0.25), (kg.upper + 1.5) * np.pi, np.pi / 16)
    g = cond(x)[0]
    idx = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
    if idx.size < want:
        missing = plan.n0 + idx.size
        raise NumericError(f"root bracketing failed for degree {ell} at row n={missing}")
    lo, hi = x[idx[:want]].copy(), x[idx[:want] + 1].copy()
    glo = cond(lo)[0]
    root = 0.5 * (lo + hi)
    for _ in range(100):
        val, der = cond(root)
        same = np.sign(val) == np.sign(glo)
        lo = np.where(same, root, lo)
        glo = np.where(same, val, glo)
        hi = np.where(same, hi, root)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = root - val / der
        ok = (newton > lo) & (newton < hi) & np.isfinite(newton)
        new = np.where(ok, newton, 0.5 * (lo + hi))
        done = np.abs(new - root) <= tol * np.abs(root)
        root = new
        if np.all(done):
            break
    resid = np.abs(cond(root)[0])
    bad = np.nonzero(resid > 1e-10 * max(1.0, ell))[0]
    if bad.size:
        raise NumericError(f"corrected momentum did not converge at row n={plan.n0 + bad[0]}")
    k[plan.n0 - plan.p :] = root / R
    return k


def seed_momenta(plan: RadialTransformPlan) -> np.ndarray:
    """Closed-form first-order estimate ``k_n - l(l+1) dk^2 / (2 pi^2 k_n)``."""
    k = plan.kgrid.nodes
    dk = plan.kgrid.step
    ell = plan.degree
    with np.errstate(divide="ignore"):
        return np.where(k > 0, k - ell * (ell + 1) * dk**2 / (2 * np.pi**2 * k), k)


# --- basis functions ------------------------------------------------------------


def basis_function(plan: RadialTransformPlan, n: int, method: str = "fast") -> np.ndarray:
    """Coordinate-space samples of the ``n``-th transform basis vector.

    Scaled so that the result tends to ``chi_l(k_n r_i)`` as ``dk -> 0``
    (exactly ``sin(k_n r_i)`` for ``l = 0`` and ``n < N``).
    """
    kg = plan.kgrid
    if not kg.parity_offset <= n <= kg.upper:
        raise ValueError(f"mode index {n} outside [{kg.parity_offset}, {kg.upper}]")
    e = np.zeros(plan.n_points)
    e[n - kg.parity_offset] = 1.0
    w = kg.weights[n - kg.parity_offset]
    return np.sqrt(np.pi / (2.0 * w * plan.grid.step)) * plan.inverse(e, method=method)
