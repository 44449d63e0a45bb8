"""Bound states of hydrogen and H2+ by imaginary-time relaxation.

The 3D grid is a product of the radial transform nodes and Gauss-Legendre
polar nodes.  The kinetic energy is diagonal after the spectral transform.
States are relaxed with the split-step operator and orthogonalised against
lower states.  Coarse grids keep this script fast; the sphbt `eigen`
command runs the full tables.
"""

import numpy as np

from sphbt import (
    HamiltonianSpec,
    PotentialSpec,
    RadialGrid,
    SpectralTransform,
    build_angular_basis,
    build_potential,
    imaginary_time_solve,
    trial_states,
)


def solve(kind, labels, dr=0.2, rmax=51.2, ntheta=3, separation=None):
    grid = RadialGrid.from_extent(dr, rmax)
    basis = build_angular_basis(ntheta)
    transform = SpectralTransform(grid, basis)
    U = build_potential(PotentialSpec(kind), transform, corrected=True)
    seeds = trial_states(labels, grid, basis, 1.0, separation)
    spec = HamiltonianSpec(U, None, corrected_momenta=True)
    states = imaginary_time_solve(
        spec, transform, len(labels), tau=dr * dr / 5, tol=1e-8, trial_states=seeds, estimator="decay"
    )
    return {label: st.energy for label, st in zip(labels, states)}


print("Hydrogen, bare Coulomb potential (exact -0.5 and -0.125):")
for label, e in solve("coulomb", ["1s", "2p"]).items():
    print(f"  {label}: {e:.6f}")

print("Hydrogen, effective potential with the 1s cusp built in:")
print(f"  1s: {solve('effective', ['1s'])['1s']:.6f}")

print("H2+ at R = 2, effective potentials on both nuclei (exact -1.102634):")
for nt in (4, 8):
    e = solve("two-center", ["1sg"], ntheta=nt, separation=2.0)["1sg"]
    print(f"  N_theta = {nt:2d}: 1sg {e:.6f}")
