"""Benchmark scenarios behind the ``sphbt`` command.

Each ``run_*`` function takes a resolved parameter dictionary (see
:data:`DEFAULTS`) and returns a :class:`Result` holding plain tables, so
they can be driven from Python as easily as from the command line.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dvr3d import HamiltonianSpec, SpectralTransform, SphericalField, build_angular_basis
from .errors import ConfigurationError
from .radial import RadialGrid, basis_function, corrected_momenta, make_plan
from .reference import (
    H2PLUS_EXACT,
    QuadratureSpec,
    driven_oscillator_solution,
    gaussian_orbital,
    hydrogen_exact_energy,
    riccati_bessel,
    sbt_quadrature,
)
from .tdse import (
    OscillatorDrive,
    PotentialSpec,
    PulseSpec,
    build_potential,
    density_slice,
    imaginary_time_solve,
    length_gauge_potential,
    propagate,
    trial_states,
)

__all__ = ["DEFAULTS", "SCENARIOS", "Table", "Result", "defaults_for"]

#: Parameter defaults per scenario.  Lists are sweeps; every leaf is overridable.
DEFAULTS: dict[str, dict] = {
    "transform-convergence": {
        "grid": {"dr": 0.4, "rmax": [51.2, 102.4, 204.8]},
        "degrees": [1, 2, 3, 4],
        "oracle": {"oversample": 16},
    },
    "basis-compare": {
        "grid": {"dr": 0.4, "rmax": [51.2, 102.4, 204.8]},
        "degree": 2,
        "k": 0.490873843,
        "window": 10.0,
    },
    "ftb-bench": {
        "degrees": [8],
        "sizes": [1024, 2048, 4096, 8192, 16384, 32768, 65536],
        "repeats": 3,
        "dense_max": 4096,
        "seed": 12345,
    },
    "eigen": {
        "grid": {"dr": [0.2, 0.1, 0.05], "rmax": 102.4},
        "angular": {"ntheta": [3], "nphi": 1},
        "potential": {"kind": "coulomb", "charge": 1.0, "separation": 2.0},
        "states": ["1s", "2s", "3s", "2p", "3p", "3d"],
        "corrected": True,
        "imaginary": {"tau_factor": 0.2, "estimator": "decay", "tol": 1e-9, "max_steps": 400000},
    },
    "oscillator": {
        "grid": {"dr": 0.2, "rmax": [12.8, 25.6, 51.2]},
        "angular": {"ntheta": 16, "nphi": 1},
        "field": {"amplitude": 0.25, "omega": [1.0, 2.0]},
        "gauge": ["velocity"],
        "corrected": [False, True],
        "time": {"t_fin": 10.0, "tau": 0.001},
        "record_every": 500,
    },
    "streak": {
        "grid": {"dr": 0.2, "rmax": 204.8},
        "full_scale": False,
        "angular": {"ntheta": 16, "nphi": 1},
        "potential": {"charge": 1.0, "separation": 2.0},
        "corrected": True,
        "pulse": {
            "xuv_amplitude": 0.25,
            "xuv_fwhm": 10.0,
            "ir_amplitude": 0.05,
            "ir_frequency": 0.062832,
            "ir_duration": 200.0,
            "ir_delay": [0.0],
        },
        "time": {"tau_factor": 0.25},
        "imaginary": {"tau_factor": 0.2, "estimator": "decay", "tol": 1e-9, "max_steps": 400000},
        "record_every": 1000,
        "peak_min_r": 30.0,
    },
}

#: Extent used by ``streak`` when ``full_scale`` is set.
FULL_SCALE_RMAX = 409.6


def defaults_for(subcommand: str) -> dict:
    if subcommand not in DEFAULTS:
        raise ConfigurationError(f"unknown subcommand {subcommand!r}; choose from {sorted(DEFAULTS)}")
    return copy.deepcopy(DEFAULTS[subcommand])


@dataclass
class Table:
    """A named table; ``meta`` lands in the ``#`` header of the CSV file."""

    name: str
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


@dataclass
class Result:
    tables: list[Table]
    summary: dict = field(default_factory=dict)

    def table(self, name: str) -> Table:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _ratios(values) -> list[float]:
    values = list(values)
    return [np.nan] + [a / b if b else np.nan for a, b in zip(values[:-1], values[1:])]


# --- radial transform scenarios -----------------------------------------------------


def run_transform_convergence(p: dict) -> Result:
    """Gaussian-orbital coefficient errors against a fine-quadrature oracle."""
    dr = p["grid"]["dr"]
    oracle = QuadratureSpec(oversample=p["oracle"]["oversample"])
    curves = Table("curves", ["ell", "rmax", "k", "coefficient", "oracle", "deviation"])
    summary = Table("summary", ["ell", "rmax", "dk", "max_error", "ratio_to_previous"])
    for ell in _as_list(p["degrees"]):
        errors = []
        for rmax in _as_list(p["grid"]["rmax"]):
            grid = RadialGrid.from_extent(dr, rmax)
            plan = make_plan(ell, grid)
            psi = gaussian_orbital(ell, grid.nodes) * np.sqrt(dr)
            k = plan.kgrid.nodes
            coef = plan.forward(psi) / np.sqrt(plan.kgrid.weights)
            # completion rows have no continuum counterpart
            regular = slice(plan.n0 - plan.p, None)
            ref = sbt_quadrature(lambda r: gaussian_orbital(ell, r), ell, k[regular], rmax, dr, oracle)
            dev = np.abs(coef[regular] - ref)
            errors.append(float(dev.max()))
            curves.rows += [(ell, rmax, a, b, c, d) for a, b, c, d in zip(k[regular], coef[regular], ref, dev)]
        for rmax, err, ratio in zip(_as_list(p["grid"]["rmax"]), errors, _ratios(errors)):
            summary.rows.append((ell, rmax, np.pi / rmax, err, ratio))
    return Result([summary, curves])


def run_basis_compare(p: dict) -> Result:
    """Transform basis function at fixed ``k`` against ``chi_l(k r)`` and ``chi_l(k_nl r)``."""
    dr, ell, k, window = p["grid"]["dr"], p["degree"], p["k"], p["window"]
    curves = Table("curves", ["rmax", "r", "basis", "chi", "chi_corrected", "dev_plain", "dev_corrected"])
    summary = Table("summary", ["rmax", "dk", "n", "k_n", "k_corrected", "dev_plain", "dev_corrected", "gain"])
    for rmax in _as_list(p["grid"]["rmax"]):
        grid = RadialGrid.from_extent(dr, rmax)
        plan = make_plan(ell, grid)
        n = int(round(k / plan.kgrid.step))
        if n < plan.n0 or n > plan.kgrid.upper:
            raise ConfigurationError(f"k = {k} maps to mode {n}, outside the regular rows for rmax = {rmax}")
        kn = n * plan.kgrid.step
        knl = float(corrected_momenta(plan)[n - plan.p])
        r = grid.nodes
        f = basis_function(plan, n)
        chi = riccati_bessel(ell, kn * r)[0]
        chic = riccati_bessel(ell, knl * r)[0]
        d0, d1 = np.abs(f - chi), np.abs(f - chic)
        inside = r <= window
        curves.rows += [(rmax, *row) for row in zip(r, f, chi, chic, d0, d1)]
        a, b = float(d0[inside].max()), float(d1[inside].max())
        summary.rows.append((rmax, plan.kgrid.step, n, kn, knl, a, b, a / b))
    summary.meta["window"] = f"r <= {window}"
    return Result([summary, curves])


def run_ftb_bench(p: dict) -> Result:
    """Wall time of the fast FtB, the Fourier stage and (small N) the dense product."""
    rng = np.random.default_rng(p["seed"])
    timings = Table("timings", ["N", "ell", "stage", "wall_time"])
    fit = Table("fit", ["ell", "stage", "loglog_slope", "seconds_per_lN"])

    def best(fn: Callable[[], object]) -> float:
        out = np.inf
        for _ in range(p["repeats"]):
            t0 = time.perf_counter()
            fn()
            out = min(out, time.perf_counter() - t0)
        return out

    for ell in _as_list(p["degrees"]):
        per_stage: dict[str, list[tuple[int, float]]] = {"ftb": [], "fourier": [], "dsbt": []}
        for N in _as_list(p["sizes"]):
            plan = make_plan(ell, RadialGrid(1.0, N))
            x = rng.standard_normal(N)
            plan.ftb(x)  # warm up caches
            stages = {
                "ftb": lambda: plan.ftb(x),
                "fourier": lambda: plan.fourier(x),
                "dsbt": lambda: plan.forward(x),
            }
            for name, fn in stages.items():
                t = best(fn)
                per_stage[name].append((N, t))
                timings.rows.append((N, ell, name, t))
            if N <= p["dense_max"]:
                T = plan.dense_ftb()
                timings.rows.append((N, ell, "dense", best(lambda: T @ x)))
        for name, pts in per_stage.items():
            Ns, ts = np.array(pts).T
            slope = float(np.polyfit(np.log(Ns), np.log(ts), 1)[0]) if len(pts) > 1 else np.nan
            coeff = float(np.dot(ell * Ns, ts) / np.dot(ell * Ns, ell * Ns)) if ell else np.nan
            fit.rows.append((ell, name, slope, coeff))
    return Result([timings, fit])


# --- TDSE scenarios -------------------------------------------------------------------


def _static_problem(p: dict, dr: float, rmax: float, ntheta: int):
    grid = RadialGrid.from_extent(dr, rmax)
    basis = build_angular_basis(ntheta, p["angular"]["nphi"])
    return grid, basis, SpectralTransform(grid, basis)


def _solve(p: dict, transform, U, seeds):
    im = p["imaginary"]
    spec = HamiltonianSpec(U, None, p["corrected"])
    return imaginary_time_solve(
        spec,
        transform,
        n_states=len(seeds),
        tau=im["tau_factor"] * transform.grid.step**2,
        tol=im["tol"],
        trial_states=seeds,
        max_steps=im["max_steps"],
        estimator=im["estimator"],
    )


def run_eigen(p: dict) -> Result:
    """Bound-state energies by imaginary-time relaxation."""
    pot = p["potential"]
    kind = PotentialSpec(pot["kind"], pot["charge"], pot["separation"])
    two = kind.kind.value == "two-center"
    labels = _as_list(p["states"])
    energies = Table(
        "energies", ["state", "n", "ell", "dr", "rmax", "ntheta", "energy", "exact", "error", "steps"]
    )
    energies.meta["potential"] = kind.kind.value
    for ntheta in _as_list(p["angular"]["ntheta"]):
        for dr in _as_list(p["grid"]["dr"]):
            grid, basis, transform = _static_problem(p, dr, p["grid"]["rmax"], ntheta)
            U = build_potential(kind, transform, corrected=p["corrected"])
            seeds = trial_states(
                labels, grid, basis, pot["charge"], pot["separation"] if two else None
            )
            for label, st in zip(labels, _solve(p, transform, U, seeds)):
                if two:
                    n, ell = int(label[0]), -1
                    exact = H2PLUS_EXACT.get(label.lower(), np.nan)
                    if pot["charge"] != 1.0 or pot["separation"] != 2.0:
                        exact = np.nan
                else:
                    n, ell = int(label[0]), "spdfg".index(label[1].lower())
                    exact = hydrogen_exact_energy(n, pot["charge"])
                energies.rows.append(
                    (label, n, ell, dr, p["grid"]["rmax"], ntheta, st.energy, exact, st.energy - exact, st.steps)
                )
    return Result([energies])


def run_oscillator(p: dict) -> Result:
    """Driven isotropic oscillator against its exact solution."""
    dr, nt = p["grid"]["dr"], p["angular"]["ntheta"]
    amp = p["field"]["amplitude"]
    t_fin, tau = p["time"]["t_fin"], p["time"]["tau"]
    history = Table("delta", ["omega", "gauge", "corrected", "rmax", "t", "delta", "norm"])
    summary = Table(
        "summary", ["omega", "gauge", "corrected", "rmax", "delta_final", "ratio_to_next_rmax"]
    )
    for omega in _as_list(p["field"]["omega"]):
        for gauge in _as_list(p["gauge"]):
            exact = driven_oscillator_solution(amp, omega, gauge, t_max=t_fin + 1.0)
            drive = OscillatorDrive(amp, omega)
            for corrected in _as_list(p["corrected"]):
                finals = []
                for rmax in _as_list(p["grid"]["rmax"]):
                    grid, basis, transform = _static_problem(p, dr, rmax, nt)

                    def reference(t, grid=grid, basis=basis):
                        return SphericalField.sample(grid, basis, lambda x, y, z: exact(t, x, y, z)).values

                    U0 = build_potential(PotentialSpec("oscillator"), transform)
                    if gauge == "velocity":
                        spec = HamiltonianSpec(U0, drive.vector_potential, corrected)
                    else:
                        spec = HamiltonianSpec(length_gauge_potential(U0, drive, transform), None, corrected)
                    rep = propagate(
                        reference(0.0), 0.0, t_fin, tau, spec, transform,
                        reference=reference, record_every=p["record_every"],
                    )
                    history.rows += [
                        (omega, gauge, corrected, rmax, t, d, nrm)
                        for t, nrm, d, _ in rep.as_rows()
                    ]
                    finals.append(rep.deltas[-1])
                # ratio delta(rmax) / delta(2 rmax)
                nxt = [a / b for a, b in zip(finals[:-1], finals[1:])] + [np.nan]
                for rmax, d, ratio in zip(_as_list(p["grid"]["rmax"]), finals, nxt):
                    summary.rows.append((omega, gauge, corrected, rmax, d, ratio))
    return Result([summary, history])


def run_streak(p: dict) -> Result:
    """H2+ in an XUV pump plus IR probe; density slices at the final time."""
    dr = p["grid"]["dr"]
    rmax = FULL_SCALE_RMAX if p["full_scale"] else p["grid"]["rmax"]
    pot = p["potential"]
    grid, basis, transform = _static_problem(p, dr, rmax, p["angular"]["ntheta"])
    U = build_potential(
        PotentialSpec("two-center", pot["charge"], pot["separation"]), transform, corrected=p["corrected"]
    )
    seed = trial_states(["1sg"], grid, basis, pot["charge"], pot["separation"])
    ground = _solve(p, transform, U, seed)[0]
    pulse_p = p["pulse"]
    tables = []
    summary = Table(
        "summary", ["ir_delay", "t0", "t_fin", "norm", "boundary_fraction", "peak_r", "ground_energy"]
    )
    summary.meta.update({"rmax": rmax, "xuv_frequency": abs(ground.energy) + 0.5})
    for delay in _as_list(pulse_p["ir_delay"]):
        pulse = PulseSpec(
            xuv_frequency=abs(ground.energy) + 0.5,
            xuv_amplitude=pulse_p["xuv_amplitude"],
            xuv_fwhm=pulse_p["xuv_fwhm"],
            ir_amplitude=pulse_p["ir_amplitude"],
            ir_frequency=pulse_p["ir_frequency"],
            ir_duration=pulse_p["ir_duration"],
            ir_delay=delay,
        )
        t0 = -0.5 * pulse.ir_duration + delay
        t_fin = 0.5 * pulse.ir_duration
        spec = HamiltonianSpec(U, pulse.vector_potential, p["corrected"])
        rep = propagate(
            ground.state, t0, t_fin, p["time"]["tau_factor"] * dr * dr, spec, transform,
            record_every=p["record_every"], slices=("axis", "plane"),
        )
        r, P = rep.slices["axis"]
        far = r >= p["peak_min_r"]
        peak = float(r[far][np.argmax(P[far])]) if np.any(far) else np.nan
        summary.rows.append((delay, t0, t_fin, rep.norms[-1], rep.boundary_fraction, peak, ground.energy))
        tag = f"{delay:g}"
        tables.append(Table(f"axis_delay_{tag}", ["r", "density"], list(zip(r, P))))
        x, z, dens = rep.slices["plane"]
        tables.append(
            Table(f"plane_delay_{tag}", ["x", "z", "density"], list(zip(x.ravel(), z.ravel(), dens.ravel())))
        )
        history = Table(f"norm_delay_{tag}", ["t", "norm"], [(t, nrm) for t, nrm, _, _ in rep.as_rows()])
        tables.append(history)
    return Result([summary] + tables, {"ground_energy": ground.energy})


SCENARIOS: dict[str, Callable[[dict], Result]] = {
    "transform-convergence": run_transform_convergence,
    "basis-compare": run_basis_compare,
    "ftb-bench": run_ftb_bench,
    "eigen": run_eigen,
    "oscillator": run_oscillator,
    "streak": run_streak,
}
