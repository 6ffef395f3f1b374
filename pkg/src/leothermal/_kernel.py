"""Compiled inner loop of the explicit conduction scheme."""
import numba
import numpy as np

from .orbit import STEFAN_BOLTZMANN

RADIATIVE = 0
FIXED = 1
ADIABATIC = 2


@numba.njit(cache=True)
def advance(T, conductance, capacity, outer_area, dt, n_steps, t0,
            boundary, surface_temp, period, sunlit, absorbed, emissivity, sink_temp,
            implicit_center, flux):
    """Advance ``T`` in place by ``n_steps`` explicit steps.

    ``conductance[i]`` is k * 2 pi r / dr on the face between nodes i and i+1,
    ``capacity[i]`` is rho * c_p * cell volume. ``flux`` is scratch space of
    length N-1. Returns (-1, -1) on success, otherwise the offending
    (step, node).
    """
    N = T.shape[0]
    sink4 = sink_temp ** 4
    for n in range(n_steps):
        t = t0 + n * dt
        # centerline: the face flux is built from the updated T0 when implicit,
        # so the same number is removed from node 1 and energy is conserved
        if implicit_center:
            b = dt * conductance[0] / capacity[0]
            t_center = (T[0] + b * T[1]) / (1.0 + b)
            flux[0] = conductance[0] * (T[1] - t_center)
        else:
            flux[0] = conductance[0] * (T[1] - T[0])
            t_center = T[0] + dt * flux[0] / capacity[0]
        for i in range(1, N - 1):
            flux[i] = conductance[i] * (T[i + 1] - T[i])

        if boundary == RADIATIVE:
            ts = T[N - 1]
            phase = (t + 1e-9 * dt) % period
            q = absorbed if phase < sunlit else 0.0
            q -= emissivity * STEFAN_BOLTZMANN * (ts * ts * ts * ts - sink4)
            T[N - 1] = ts + dt * (q * outer_area - flux[N - 2]) / capacity[N - 1]
        elif boundary == FIXED:
            T[N - 1] = surface_temp
        else:
            T[N - 1] = T[N - 1] - dt * flux[N - 2] / capacity[N - 1]

        T[0] = t_center
        for i in range(1, N - 1):
            T[i] = T[i] + dt * (flux[i] - flux[i - 1]) / capacity[i]

        for i in range(N):
            v = T[i]
            if not (v > 0.0 and v < np.inf):
                return n, i
    return -1, -1
