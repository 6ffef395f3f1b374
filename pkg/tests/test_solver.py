import numpy as np
import pytest
from scipy.optimize import brentq

from leothermal.materials import BUILTIN_MATERIALS, Layer, LayerStack, Material, builtin_stack
from leothermal.mesh import discretize, stable_timestep
from leothermal.orbit import OrbitEnvironment, boundary_net_flux
from leothermal.solver import (
    CFLViolation,
    InstabilityError,
    NonConvergenceError,
    TemperatureField,
    periodic_steady_state,
    simulate,
    step,
    total_energy,
    uniform_field,
)

UNIT = Material("unit", 1.0, 1.0, 1.0, 1.0, 1000.0)
DARK = OrbitEnvironment(absorptivity_alpha_s=0.0, emissivity_eps=0.0)


@pytest.fixture
def unit_mesh():
    # five nodes at r = 0..4 m, alpha = 1, limit dt = 0.5 s
    return discretize(LayerStack((Layer(UNIT, 1.0),), outer_radius=4.0), 5)


def test_uniform_field_is_fixed_point():
    mesh = discretize(builtin_stack(), 201)
    field = uniform_field(mesh, 293.15)
    dt = stable_timestep(mesh)
    for env in (DARK, None):
        out = step(field, mesh, env, dt)
        assert np.array_equal(out.temps, field.temps)
        assert out.time == pytest.approx(dt)


def test_hand_evaluated_step_on_r_squared_profile(unit_mesh):
    # T = 300 + r^2 has a uniform Laplacian of 4, so interior nodes rise by 4 dt
    field = TemperatureField(0.0, 300.0 + unit_mesh.node_radii ** 2)
    dt = 0.25
    explicit = step(field, unit_mesh, None, dt, centerline="explicit").temps
    # centerline: T0 + dt * 4 k (T1 - T0) / (rho c dr^2) = 300 + 0.25 * 4 * 1
    assert explicit[0] == pytest.approx(301.0, abs=1e-12)
    # node 1: 301 + 0.25 / 1 * (1.5 * 3 - 0.5 * 1) = 302
    assert explicit[1] == pytest.approx(302.0, abs=1e-12)
    # node 2: 304 + 0.25 / 2 * (2.5 * 5 - 1.5 * 3) = 305
    assert explicit[2] == pytest.approx(305.0, abs=1e-12)
    assert explicit[3] == pytest.approx(310.0, abs=1e-12)

    implicit = step(field, unit_mesh, None, dt).temps
    # b = 4 dt = 1 -> T0' = (300 + 301) / 2; node 1 then sees that value
    assert implicit[0] == pytest.approx(300.5, abs=1e-12)
    assert implicit[1] == pytest.approx(301 + 0.25 * (1.5 * 3 - 0.5 * 0.5), abs=1e-12)
    assert implicit[2] == pytest.approx(305.0, abs=1e-12)


def test_outer_node_half_cell_balance(unit_mesh):
    env = OrbitEnvironment(absorptivity_alpha_s=0.5, emissivity_eps=0.25, solar_flux_q=100.0)
    field = TemperatureField(0.0, np.array([300.0, 300.0, 300.0, 310.0, 320.0]))
    dt = 0.1
    out = step(field, unit_mesh, env, dt).temps
    area = 2 * np.pi * 4.0
    volume = np.pi * (4.0 ** 2 - 3.5 ** 2)
    conduction = 1.0 * 2 * np.pi * 3.5 * (310.0 - 320.0) / 1.0
    expected = 320.0 + dt * (conduction + area * boundary_net_flux(env, 320.0, 0.0)) / volume
    assert out[-1] == pytest.approx(expected, rel=1e-14)


def test_cfl_violation_rejected():
    mesh = discretize(builtin_stack(), 201)
    with pytest.raises(CFLViolation, match="CFL violated"):
        step(uniform_field(mesh), mesh, None, 2 * stable_timestep(mesh, 1.0))
    step(uniform_field(mesh), mesh, None, stable_timestep(mesh, 1.0))


def test_explicit_centerline_unstable_inside_nominal_limit():
    mesh = discretize(builtin_stack(), 201)
    signs = np.where(np.arange(mesh.node_count) % 2 == 0, 1.0, -1.0)
    field = TemperatureField(0.0, 300.0 + 100.0 * signs)
    dt = stable_timestep(mesh, 0.9)
    with pytest.raises(InstabilityError) as err:
        simulate(field, mesh, None, 60.0, dt, 60.0, centerline="explicit")
    assert err.value.node is not None and err.value.step > 0
    hist = simulate(field, mesh, None, 60.0, dt, 60.0)
    assert np.all(np.abs(hist.final.temps - 300.0) < 100.0)


def test_simulate_snapshots_and_zero_duration():
    mesh = discretize(builtin_stack(), 41)
    init = uniform_field(mesh)
    hist = simulate(init, mesh, OrbitEnvironment(), 600.0, snapshot_interval=60.0)
    assert np.allclose(np.diff(hist.times), 60.0)
    assert hist.times[0] == 0.0 and hist.times[-1] == 600.0
    assert np.array_equal(hist.temps[0], init.temps)
    empty = simulate(init, mesh, OrbitEnvironment(), 0.0)
    assert len(empty.times) == 1
    with pytest.raises(ValueError):
        simulate(init, mesh, OrbitEnvironment(), 90.0, snapshot_interval=60.0)


def test_lumped_sunlit_equilibrium():
    # small, conductive, low-capacity cylinder: effectively one lumped shell
    mat = Material("shell", 1.0, 100.0, 100.0, 1.0, 2000.0)
    mesh = discretize(LayerStack((Layer(mat, 1.0),), outer_radius=0.01), 11)
    env = OrbitEnvironment(sunlit_duration=5400.0)
    hist = simulate(uniform_field(mesh, 293.15), mesh, env, 120.0, snapshot_interval=60.0)
    root = brentq(lambda T: env.absorbed_flux - env.emissivity_eps * 5.670374419e-8 * (T ** 4 - 3.0 ** 4), 1, 1000)
    assert hist.final.temps == pytest.approx(np.full(mesh.node_count, root), abs=1.0)
    assert hist.final.temps[-1] == pytest.approx(478.7, abs=1.0)


def test_total_energy_closed_form_and_linearity():
    ptfe = BUILTIN_MATERIALS["PTFE"]
    mesh = discretize(LayerStack((Layer(ptfe, 1.0),)), 51)
    e = total_energy(uniform_field(mesh, 300.0), mesh)
    assert e == pytest.approx(660.0 * 1000.0 * 300.0 * np.pi * 0.05 ** 2, rel=1e-13)
    field = TemperatureField(0.0, np.linspace(200, 400, 51))
    doubled = TemperatureField(0.0, 2 * field.temps)
    assert total_energy(doubled, mesh) == pytest.approx(2 * total_energy(field, mesh), rel=1e-14)


def test_adiabatic_energy_after_1000_steps():
    mesh = discretize(builtin_stack(), 101)
    r = mesh.node_radii
    init = TemperatureField(0.0, 300.0 + 50.0 * np.sin(40 * r))
    dt = stable_timestep(mesh)
    hist = simulate(init, mesh, None, 1000 * dt, dt, 1000 * dt)
    assert total_energy(hist.final, mesh) == pytest.approx(total_energy(init, mesh), rel=1e-3)


def test_maximum_principle_prescribed_surface():
    mesh = discretize(builtin_stack(), 101)
    r = mesh.node_radii / mesh.outer_radius
    init = TemperatureField(0.0, 250.0 + 80.0 * np.cos(9 * r))
    lo, hi = min(init.temps.min(), 400.0), max(init.temps.max(), 400.0)
    field = init
    dt = stable_timestep(mesh, 1.0)
    for _ in range(300):
        field = step(field, mesh, None, dt, surface_temp=400.0)
        assert field.temps.min() >= lo - 1e-9 and field.temps.max() <= hi + 1e-9


def test_ten_orbits_stay_bounded():
    stack = builtin_stack().with_fractions((0.4, 0.1, 0.2, 0.3))
    mesh = discretize(stack, 61)
    hist = simulate(uniform_field(mesh), mesh, OrbitEnvironment(), 10 * 5400.0, snapshot_interval=300.0)
    assert np.all(np.isfinite(hist.temps))
    assert hist.temps.min() > 0 and hist.temps.max() < 1000


def test_determinism():
    mesh = discretize(builtin_stack(), 61)
    a = simulate(uniform_field(mesh), mesh, OrbitEnvironment(), 5400.0)
    b = simulate(uniform_field(mesh), mesh, OrbitEnvironment(), 5400.0)
    assert a.temps.tobytes() == b.temps.tobytes()


def test_periodic_steady_state_regression(builtin_cycle):
    history, orbits = builtin_cycle
    assert orbits == 14
    assert builtin_cycle.residual < 0.1
    assert history.times[0] == 0.0 and history.times[-1] == 5400.0
    assert len(history.times) == 91


def test_steady_state_in_the_dark_sits_at_sink():
    mesh = discretize(builtin_stack(), 41)
    env = OrbitEnvironment(solar_flux_q=0.0)
    cycle = periodic_steady_state(uniform_field(mesh, env.space_sink_temp), mesh, env, tol=0.1, max_orbits=5)
    assert cycle.orbits_used == 2
    assert np.all(np.abs(cycle.history.temps - env.space_sink_temp) < 0.1)


def test_steady_state_preconditions_and_nonconvergence():
    mesh = discretize(builtin_stack(), 41)
    env = OrbitEnvironment()
    with pytest.raises(ValueError):
        periodic_steady_state(uniform_field(mesh), mesh, env, max_orbits=1)
    with pytest.raises(NonConvergenceError) as err:
        periodic_steady_state(uniform_field(mesh), mesh, env, tol=1e-6, max_orbits=2)
    assert err.value.residual > 1e-6


def test_swing_attenuates_inward(builtin_cycle):
    swing = builtin_cycle.history.swing()
    assert swing[0] < swing[-1]
    # snapshot sampling leaves sub-millikelvin wiggles deep inside
    assert np.all(np.diff(swing) >= -1e-3)
    assert swing[0] < 0.2 * swing[-1]
