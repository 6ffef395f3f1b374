"""Explicit finite-volume integration of radial conduction in a layered cylinder.

The operator is the conservative cylindrical form (1/r) d/dr (r k dT/dr):
every face carries a flux k * 2 pi r_face * dT/dr, and each node's control
volume gains the difference of its two face fluxes. Solar heating and
infrared emission act only on the outer surface.

The centerline node is updated point-implicitly. Its explicit counterpart
(``centerline="explicit"``) has an eigenvalue of about 4.84 alpha/dr^2 and
goes unstable above roughly 0.83x the usual alpha dt/dr^2 <= 1/2 limit; the
implicit form keeps every update coefficient non-negative up to that limit.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernel
from .mesh import RadialMesh, stable_timestep
from .orbit import STEFAN_BOLTZMANN, OrbitEnvironment

ROOM_TEMP = 293.15


class SolverError(RuntimeError):
    pass


class CFLViolation(SolverError, ValueError):
    pass


class InstabilityError(SolverError):
    def __init__(self, message, step=None, node=None, time=None):
        super().__init__(message)
        self.step = step
        self.node = node
        self.time = time


class NonConvergenceError(SolverError):
    def __init__(self, message, residual, orbits):
        super().__init__(message)
        self.residual = residual
        self.orbits = orbits


@dataclass(frozen=True, eq=False)
class TemperatureField:
    time: float
    temps: np.ndarray

    def __post_init__(self):
        temps = np.array(self.temps, dtype=float)
        temps.setflags(write=False)
        object.__setattr__(self, "temps", temps)


@dataclass(frozen=True, eq=False)
class TemperatureHistory:
    """Snapshots every ``snapshot_interval`` seconds; ``temps`` is (n_snapshots, n_nodes)."""

    mesh: RadialMesh
    snapshot_interval: float
    times: np.ndarray
    temps: np.ndarray

    @property
    def snapshots(self) -> list[TemperatureField]:
        return [TemperatureField(t, row) for t, row in zip(self.times, self.temps)]

    @property
    def final(self) -> TemperatureField:
        return TemperatureField(self.times[-1], self.temps[-1])

    def swing(self) -> np.ndarray:
        """Peak-to-peak temperature per node."""
        return self.temps.max(axis=0) - self.temps.min(axis=0)


def uniform_field(mesh: RadialMesh, temp: float = ROOM_TEMP, time: float = 0.0) -> TemperatureField:
    return TemperatureField(time, np.full(mesh.node_count, float(temp)))


@dataclass(frozen=True, eq=False)
class _Operator:
    conductance: np.ndarray
    capacity: np.ndarray
    outer_area: float


@lru_cache(maxsize=64)
def _operator(mesh: RadialMesh) -> _Operator:
    conductance = mesh.face_conductivity * 2.0 * np.pi * mesh.face_radii / mesh.delta_r
    capacity = mesh.heat_capacity * mesh.cell_volumes
    return _Operator(np.ascontiguousarray(conductance), np.ascontiguousarray(capacity),
                     2.0 * np.pi * mesh.outer_radius)


def _boundary_args(env: OrbitEnvironment | None, surface_temp: float | None):
    if surface_temp is not None:
        return (_kernel.FIXED, float(surface_temp), 1.0, 0.0, 0.0, 0.0, 0.0)
    if env is None:
        return (_kernel.ADIABATIC, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0)
    return (_kernel.RADIATIVE, 0.0, env.orbit_period, env.sunlit_duration,
            env.absorbed_flux, env.emissivity_eps, env.space_sink_temp)


def _check_dt(mesh: RadialMesh, dt: float):
    limit = stable_timestep(mesh, 1.0)
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if dt > limit * (1 + 1e-12):
        raise CFLViolation(f"CFL violated: dt={dt:.6g} s exceeds alpha dt/dr^2 <= 1/2 limit {limit:.6g} s")


def _run(temps: np.ndarray, mesh, env, dt, n_steps, t0, surface_temp, centerline):
    op = _operator(mesh)
    scratch = np.empty(mesh.node_count - 1)
    step_idx, node = _kernel.advance(
        temps, op.conductance, op.capacity, op.outer_area, float(dt), int(n_steps), float(t0),
        *_boundary_args(env, surface_temp), centerline == "implicit", scratch,
    )
    if step_idx >= 0:
        t_fail = t0 + (step_idx + 1) * dt
        raise InstabilityError(
            f"temperature left (0 K, inf) at node {node} (r={mesh.node_radii[node]:.6g} m) "
            f"after step {step_idx + 1}, t={t_fail:.6g} s",
            step=step_idx + 1, node=int(node), time=t_fail,
        )


def _check_centerline(centerline):
    if centerline not in ("implicit", "explicit"):
        raise ValueError(f"centerline must be 'implicit' or 'explicit', got {centerline!r}")


def step(field: TemperatureField, mesh: RadialMesh, env: OrbitEnvironment | None, dt: float,
         *, surface_temp: float | None = None, centerline: str = "implicit") -> TemperatureField:
    """One forward-Euler step.

    ``env=None`` makes the outer surface adiabatic; ``surface_temp`` pins it.
    """
    _check_centerline(centerline)
    _check_dt(mesh, dt)
    temps = np.array(field.temps, dtype=float)
    if temps.shape != (mesh.node_count,):
        raise ValueError(f"field has {temps.shape} values, mesh has {mesh.node_count} nodes")
    _run(temps, mesh, env, dt, 1, field.time, surface_temp, centerline)
    return TemperatureField(field.time + dt, temps)


def boundary_stability_number(mesh: RadialMesh, env: OrbitEnvironment, dt: float, temp: float) -> float:
    """Linearized 4 eps sigma T^3 dt A / (rho c V) for the outer half cell."""
    op = _operator(mesh)
    h_rad = 4.0 * env.emissivity_eps * STEFAN_BOLTZMANN * temp ** 3
    return h_rad * dt * op.outer_area / op.capacity[-1]


def _substeps(interval: float, dt: float) -> tuple[int, float]:
    n = math.ceil(interval / dt - 1e-9)
    return n, interval / n


def simulate(initial: TemperatureField, mesh: RadialMesh, env: OrbitEnvironment | None,
             duration: float, dt: float | None = None, snapshot_interval: float = 60.0,
             *, surface_temp: float | None = None, centerline: str = "implicit",
             cfl_safety: float = 0.9) -> TemperatureHistory:
    """Integrate from ``initial`` for ``duration`` seconds.

    ``dt`` is shrunk if needed so a whole number of steps fits in each
    snapshot interval; ``duration`` must be a whole number of intervals.
    """
    _check_centerline(centerline)
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    if not snapshot_interval > 0:
        raise ValueError(f"snapshot_interval must be > 0, got {snapshot_interval}")
    n_snap = round(duration / snapshot_interval)
    if abs(n_snap * snapshot_interval - duration) > 1e-9 * max(duration, 1.0):
        raise ValueError(f"duration {duration} s is not a multiple of snapshot_interval {snapshot_interval} s")
    if dt is None:
        dt = stable_timestep(mesh, cfl_safety)
    n_sub, dt = _substeps(snapshot_interval, dt)
    _check_dt(mesh, dt)

    temps = np.array(initial.temps, dtype=float)
    if temps.shape != (mesh.node_count,):
        raise ValueError(f"field has {temps.shape} values, mesh has {mesh.node_count} nodes")
    if env is not None and surface_temp is None:
        t_ref = max(float(temps.max()), env.sunlit_equilibrium_temp())
        number = boundary_stability_number(mesh, env, dt, t_ref)
        if number >= 1.0:
            warnings.warn(f"outer-cell radiative stability number {number:.3g} >= 1 at T={t_ref:.1f} K",
                          RuntimeWarning, stacklevel=2)

    out = np.empty((n_snap + 1, mesh.node_count))
    out[0] = temps
    t0 = initial.time
    for s in range(n_snap):
        start = t0 + s * snapshot_interval
        _run(temps, mesh, env, dt, n_sub, start, surface_temp, centerline)
        out[s + 1] = temps
    times = t0 + snapshot_interval * np.arange(n_snap + 1)
    out.setflags(write=False)
    times.setflags(write=False)
    return TemperatureHistory(mesh, snapshot_interval, times, out)


@dataclass(frozen=True, eq=False)
class SteadyCycle:
    history: TemperatureHistory
    orbits_used: int
    residual: float

    def __iter__(self):
        # unpacks as (history, orbits_used)
        return iter((self.history, self.orbits_used))


def periodic_steady_state(initial: TemperatureField, mesh: RadialMesh, env: OrbitEnvironment,
                          dt: float | None = None, tol: float = 0.1, max_orbits: int = 60,
                          snapshot_interval: float = 60.0, *, centerline: str = "implicit",
                          cfl_safety: float = 0.9) -> SteadyCycle:
    """Repeat whole orbits until consecutive cycles agree to within ``tol`` kelvin.

    The returned history covers the last orbit with times rebased to
    [0, orbit_period].
    """
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if max_orbits < 2:
        raise ValueError(f"max_orbits must be >= 2, got {max_orbits}")
    period = env.orbit_period
    if abs(round(period / snapshot_interval) * snapshot_interval - period) > 1e-9 * period:
        raise ValueError(f"orbit period {period} s is not a multiple of snapshot_interval {snapshot_interval} s")

    field = TemperatureField(0.0, initial.temps)
    previous = None
    residual = math.inf
    for orbit in range(1, max_orbits + 1):
        cycle = simulate(field, mesh, env, period, dt, snapshot_interval,
                         centerline=centerline, cfl_safety=cfl_safety)
        if previous is not None:
            residual = float(np.max(np.abs(cycle.temps - previous.temps)))
            if residual < tol:
                return SteadyCycle(cycle, orbit, residual)
        previous = cycle
        # phase-align: every orbit restarts at t=0
        field = TemperatureField(0.0, cycle.temps[-1])
    raise NonConvergenceError(
        f"no periodic steady state after {max_orbits} orbits (residual {residual:.4g} K > tol {tol} K)",
        residual, max_orbits,
    )


def total_energy(field: TemperatureField, mesh: RadialMesh) -> float:
    """Sum of rho c T V over all cells, J per metre of length."""
    op = _operator(mesh)
    return float(np.dot(op.capacity, np.asarray(field.temps, dtype=float)))
