"""Compiled block sweeps for the fast FtB, used when numba is importable.

The kernels act on one real vector.  ``W[row, 0]`` holds the row's
Chebyshev values in its block scale and ``W[row, 1]`` its kernel
coefficients, interleaved so each row is one contiguous read.  Callers
split complex input and loop over batch columns.
"""

from __future__ import annotations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

AVAILABLE = numba is not None


def _forward(W, alphas, starts, rescale, low, g, f, out):
    nb, nnu = starts.shape[0], W.shape[2]
    r0 = low.shape[0]
    mom = np.zeros(nnu)
    tmp = np.zeros(nnu)
    for j in range(r0):
        for nu in range(nnu):
            mom[nu] += low[j, nu] * g[j]
    for k in range(nb):
        if k > 0:
            for nu in range(nnu):
                s = 0.0
                for mu in range(nnu):
                    s += rescale[k, nu, mu] * mom[mu]
                tmp[nu] = s
            for nu in range(nnu):
                mom[nu] = tmp[nu]
        end = starts[k + 1] if k + 1 < nb else W.shape[0]
        for row in range(starts[k], end):
            x = g[r0 + row]
            corr = 0.0
            for nu in range(nnu):
                t = W[row, 0, nu] * x
                corr += W[row, 1, nu] * (mom[nu] + 0.5 * t)
                mom[nu] += t
            out[r0 + row] = alphas[row] * (f[r0 + row] + corr)


def _inverse(W, alphas, starts, rescale, low, b, out):
    nb, nnu = starts.shape[0], W.shape[2]
    r0 = low.shape[0]
    carry = np.zeros(nnu)
    tmp = np.zeros(nnu)
    for k in range(nb - 1, -1, -1):
        end = starts[k + 1] if k + 1 < nb else W.shape[0]
        for row in range(end - 1, starts[k] - 1, -1):
            ab = alphas[row] * b[r0 + row]
            acc = ab
            for nu in range(nnu):
                beta = W[row, 1, nu] * ab
                acc += W[row, 0, nu] * (carry[nu] + 0.5 * beta)
                carry[nu] += beta
            out[r0 + row] += acc
        if k > 0:
            for mu in range(nnu):
                s = 0.0
                for nu in range(nnu):
                    s += rescale[k, nu, mu] * carry[nu]
                tmp[mu] = s
            for mu in range(nnu):
                carry[mu] = tmp[mu]
    for j in range(r0):
        s = 0.0
        for nu in range(nnu):
            s += low[j, nu] * carry[nu]
        out[j] += s


if AVAILABLE:
    forward_sweep = numba.njit(cache=True, nogil=True)(_forward)
    inverse_sweep = numba.njit(cache=True, nogil=True)(_inverse)
else:  # pragma: no cover
    forward_sweep = inverse_sweep = None
