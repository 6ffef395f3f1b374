"""Solver verification against independent references."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import j0, j1, jn_zeros

from .materials import Layer, LayerStack, Material, builtin_stack
from .mesh import RadialMesh, discretize, stable_timestep
from .solver import (
    CFLViolation,
    TemperatureField,
    simulate,
    step,
    total_energy,
    uniform_field,
)


def fourier_bessel_temperature(radii, time, radius, diffusivity, initial_temp, surface_temp, terms=400):
    """Exact T(r, t) for a solid cylinder at uniform ``initial_temp`` whose surface jumps to ``surface_temp``."""
    radii = np.asarray(radii, dtype=float)
    if time <= 0:
        out = np.full_like(radii, initial_temp)
        out[np.isclose(radii, radius)] = surface_temp
        return out
    roots = jn_zeros(0, terms)
    coef = 2.0 / (roots * j1(roots))
    decay = np.exp(-roots ** 2 * diffusivity * time / radius ** 2)
    shape = j0(np.outer(radii / radius, roots))
    theta = shape @ (coef * decay)
    return surface_temp + (initial_temp - surface_temp) * theta


def homogeneous_stack(material: Material, outer_radius: float = 0.05) -> LayerStack:
    return LayerStack((Layer(material, 1.0),), outer_radius=outer_radius)


def _step_response(mesh: RadialMesh, surface_temp, initial_temp, duration, dt, snapshot_interval=None):
    init = np.full(mesh.node_count, float(initial_temp))
    init[-1] = surface_temp
    interval = duration if snapshot_interval is None else snapshot_interval
    hist = simulate(TemperatureField(0.0, init), mesh, None, duration, dt, interval, surface_temp=surface_temp)
    return hist.temps[-1]


def verification_case_constant_surface(mesh: RadialMesh, surface_temp: float, initial_temp: float,
                                       duration: float, oracle: str = "refined",
                                       cfl_safety: float = 0.9) -> float:
    """L-infinity error (K) at ``duration`` of a surface-temperature step.

    ``oracle="refined"`` compares against the same solver on 4x the
    intervals with a 16x smaller step (nodes coincide every 4th fine node);
    ``oracle="series"`` against the Fourier-Bessel solution.
    """
    if len(mesh.stack.layers) != 1:
        raise ValueError("verification needs a single-material mesh")
    dt = stable_timestep(mesh, cfl_safety)
    coarse = _step_response(mesh, surface_temp, initial_temp, duration, dt)
    if oracle == "refined":
        fine_mesh = discretize(mesh.stack, 4 * (mesh.node_count - 1) + 1)
        fine = _step_response(fine_mesh, surface_temp, initial_temp, duration, dt / 16)
        reference = fine[::4]
    elif oracle == "series":
        alpha = float(mesh.diffusivity[0])
        reference = fourier_bessel_temperature(mesh.node_radii, duration, mesh.outer_radius, alpha,
                                               initial_temp, surface_temp)
    else:
        raise ValueError(f"unknown oracle {oracle!r}")
    return float(np.max(np.abs(coarse - reference)))


def convergence_order(material: Material, node_counts=(26, 51, 101, 201), surface_temp=400.0,
                      initial_temp=300.0, diffusion_times=0.1, outer_radius=0.05):
    """Errors against the series solution and the observed orders between successive refinements."""
    stack = homogeneous_stack(material, outer_radius)
    alpha = material.conductivity_k / material.volumetric_heat_capacity
    duration = diffusion_times * outer_radius ** 2 / alpha
    errors = []
    for n in node_counts:
        mesh = discretize(stack, n)
        errors.append(verification_case_constant_surface(mesh, surface_temp, initial_temp, duration, "series"))
    orders = [math.log(errors[i] / errors[i + 1]) / math.log((node_counts[i + 1] - 1) / (node_counts[i] - 1))
              for i in range(len(errors) - 1)]
    return errors, orders


def energy_drift(mesh: RadialMesh, n_steps: int = 10_000, cfl_safety: float = 0.9) -> float:
    """Relative change in total energy over an adiabatic run from a non-uniform start."""
    r = mesh.node_radii / mesh.outer_radius
    init = TemperatureField(0.0, 250.0 + 100.0 * r ** 2 + 20.0 * np.cos(7.0 * np.pi * r))
    dt = stable_timestep(mesh, cfl_safety)
    hist = simulate(init, mesh, None, n_steps * dt, dt, n_steps * dt)
    e0, e1 = total_energy(init, mesh), total_energy(hist.final, mesh)
    return abs(e1 - e0) / e0


def alternating_perturbation(mesh: RadialMesh, base=300.0, amplitude=100.0) -> TemperatureField:
    signs = np.where(np.arange(mesh.node_count) % 2 == 0, 1.0, -1.0)
    return TemperatureField(0.0, base + amplitude * signs)


def cfl_stress(mesh: RadialMesh, fraction: float = 0.99, n_steps: int = 10_000):
    """Run the worst-case alternating field at ``fraction`` of the limit, adiabatic.

    Returns (initial max deviation, per-block max deviations) where a block is
    a tenth of the run.
    """
    dt = fraction * stable_timestep(mesh, 1.0)
    field0 = alternating_perturbation(mesh)
    mean = total_energy(field0, mesh) / total_energy(uniform_field(mesh, 1.0), mesh)
    blocks = 10
    per_block = n_steps // blocks
    hist = simulate(field0, mesh, None, blocks * per_block * dt, dt, per_block * dt)
    deviation = np.max(np.abs(hist.temps - mean), axis=1)
    return float(deviation[0]), deviation[1:]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail} ({c.seconds:.1f} s)" for c in self.checks]


def _timed(report, name, fn):
    start = time.perf_counter()
    passed, detail = fn()
    report.checks.append(CheckResult(name, passed, detail, time.perf_counter() - start))


def run_verification(node_count: int = 201) -> VerificationReport:
    """Constant-surface oracle, convergence order, energy conservation and CFL rejection."""
    report = VerificationReport()
    tpu = builtin_stack().materials[0]
    mesh = discretize(homogeneous_stack(tpu), node_count)
    diffusion_time = mesh.outer_radius ** 2 / float(mesh.diffusivity[0])

    def oracle():
        err = verification_case_constant_surface(mesh, 400.0, 300.0, diffusion_time, "refined")
        return err < 1.0, f"L-inf error {err:.3e} K vs refined run (limit 1 K = 1% of 100 K)"

    def order():
        errors, orders = convergence_order(tpu)
        ok = 1.8 <= orders[-1] <= 2.2
        return ok, "errors " + ", ".join(f"{e:.3e}" for e in errors) + \
            "; orders " + ", ".join(f"{o:.3f}" for o in orders) + " (finest must be in [1.8, 2.2])"

    def energy():
        drift = energy_drift(discretize(builtin_stack(), node_count))
        return drift < 1e-3, f"relative drift {drift:.3e} over 10^4 adiabatic steps (limit 1e-3)"

    def cfl():
        stack_mesh = discretize(builtin_stack(), node_count)
        dt = 1.01 * stable_timestep(stack_mesh, 1.0)
        try:
            step(uniform_field(stack_mesh), stack_mesh, None, dt)
        except CFLViolation:
            rejected = True
        else:
            rejected = False
        start, blocks = cfl_stress(stack_mesh)
        bounded = bool(np.all(np.diff(blocks) <= 1e-9) and blocks[-1] <= start)
        return rejected and bounded, (f"1.01x limit rejected={rejected}; 0.99x alternating start {start:.1f} K "
                                      f"-> {blocks[-1]:.3g} K after 10^4 steps, non-growing={bounded}")

    _timed(report, "constant-surface oracle", oracle)
    _timed(report, "spatial convergence order", order)
    _timed(report, "energy conservation", energy)
    _timed(report, "CFL enforcement", cfl)
    return report
