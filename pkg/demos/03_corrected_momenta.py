"""Transform basis functions and corrected momenta.

Row n of the transform is a sampled function close to the Riccati-Bessel
function chi_l(k_n r).  It matches chi_l(k_nl r) even better, where k_nl
are roots of chi_l (even l) or its derivative (odd l) at rmax.  Using these
corrected momenta in the kinetic energy improves TDSE accuracy.
"""

import numpy as np

from sphbt import RadialGrid, basis_function, corrected_momenta, make_plan
from sphbt.reference import riccati_bessel

ell, k = 2, 0.490873843
for rmax in (51.2, 102.4, 204.8):
    grid = RadialGrid.from_extent(0.4, rmax)
    plan = make_plan(ell, grid)
    n = int(round(k / plan.kgrid.step))
    kn = n * plan.kgrid.step
    knl = corrected_momenta(plan)[n - plan.p]
    f = basis_function(plan, n)
    r = grid.nodes
    inside = r <= 10
    plain = np.abs(f - riccati_bessel(ell, kn * r)[0])[inside].max()
    corr = np.abs(f - riccati_bessel(ell, knl * r)[0])[inside].max()
    print(
        f"rmax = {rmax:6.1f}: k_n = {kn:.6f}, k_nl = {knl:.6f}, "
        f"deviation {plain:.2e} (plain) vs {corr:.2e} (corrected), gain {plain / corr:.1f}"
    )
