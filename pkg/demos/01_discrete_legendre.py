"""Discrete Legendre orthogonal polynomials and their discrete derivative.

The transform is built from polynomials orthogonal on the integer points
0..N.  This script shows their orthogonality, how they approach the
continuous Legendre polynomials, and the discrete derivative used in the
transform kernel.
"""

import numpy as np
from scipy.special import eval_legendre

from sphbt import ddlop_eval, dlop_eval, dlop_norm, dlop_table

N = 40
i = np.arange(N + 1)

# Orthogonality: the Gram matrix is diagonal with closed-form norms.
P = dlop_table(6, i, N)
gram = P @ P.T
norms = np.array([dlop_norm(l, N) for l in range(7)])
print("max off-diagonal of the Gram matrix:", np.abs(gram - np.diag(np.diag(gram))).max())
print("max |diag - closed-form norm|:      ", np.abs(np.diag(gram) - norms).max())

# Large N: P_l(i, N) tends to the Legendre polynomial at 1 - 2 i / N.
for n in (20, 80, 320):
    j = np.arange(n + 1)
    err = np.abs(dlop_eval(3, j, n) - eval_legendre(3, 1 - 2 * j / n)).max()
    print(f"N = {n:4d}: max |P_3(i, N) - P_3(1 - 2i/N)| = {err:.2e}")

# The discrete derivative tends to d/di of the continuous polynomial.
for n in (50, 100, 200):
    j = np.arange(1, n)
    exact = -2 / n * np.polynomial.legendre.Legendre.basis(4).deriv()(1 - 2 * j / n)
    print(f"N = {n:4d}: max |P'_4 - d/di P_4| = {np.abs(ddlop_eval(4, j, n) - exact).max():.2e}")

# High degrees stay accurate: degree 64 on 65 points is still orthonormal.
P = dlop_table(64, np.arange(65), 64)
Q = P / np.sqrt([dlop_norm(l, 64) for l in range(65)])[:, None]
print("degree 64 on N = 64, max |Q Q^T - I| =", np.abs(Q @ Q.T - np.eye(65)).max())
