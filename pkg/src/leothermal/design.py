"""Safety-factor checks on layer temperatures and a grid search over layer fractions."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace


from .materials import LayerStack
from .mesh import discretize
from .orbit import OrbitEnvironment
from .solver import TemperatureHistory, periodic_steady_state, uniform_field, ROOM_TEMP

LOCI = ("all-nodes", "inner-face")


@dataclass(frozen=True)
class LayerExtremes:
    name: str
    min_temp: float
    max_temp: float


def layer_extremes(history: TemperatureHistory, stack: LayerStack | None = None,
                   locus: str = "all-nodes") -> list[LayerExtremes]:
    """Min/max temperature of each layer over every snapshot of ``history``.

    ``inner-face`` looks only at each layer's innermost node.
    """
    if locus not in LOCI:
        raise ValueError(f"locus must be one of {LOCI}, got {locus!r}")
    if len(history.times) == 0:
        raise ValueError("empty history")
    mesh = history.mesh
    stack = mesh.stack if stack is None else stack
    out = []
    for j, name in enumerate(stack.names):
        nodes = mesh.layer_nodes(j)
        if locus == "inner-face":
            nodes = nodes[:1]
        block = history.temps[:, nodes]
        out.append(LayerExtremes(name, float(block.min()), float(block.max())))
    return out


@dataclass(frozen=True)
class LayerVerdict:
    name: str
    observed_min: float
    observed_max: float
    cold_bound: float
    hot_bound: float

    @property
    def cold_ok(self) -> bool:
        return self.observed_min >= self.cold_bound

    @property
    def hot_ok(self) -> bool:
        return self.observed_max <= self.hot_bound

    @property
    def passed(self) -> bool:
        return self.cold_ok and self.hot_ok

    @property
    def violation(self) -> float:
        """Kelvin by which the layer misses its bounds (0 when it passes)."""
        return max(0.0, self.cold_bound - self.observed_min) + max(0.0, self.observed_max - self.hot_bound)


@dataclass(frozen=True)
class SafetyReport:
    layers: tuple[LayerVerdict, ...]
    safety_factor: float

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.layers)

    @property
    def total_violation(self) -> float:
        return sum(v.violation for v in self.layers)


def check_safety(extremes, stack: LayerStack, safety_factor: float = 1.2) -> SafetyReport:
    """Hot bound is hot_limit / SF, cold bound is SF * cold_limit, both in kelvin."""
    if not safety_factor >= 1:
        raise ValueError(f"safety factor must be >= 1, got {safety_factor}")
    if len(extremes) != len(stack.layers):
        raise ValueError(f"{len(extremes)} extremes for {len(stack.layers)} layers")
    verdicts = []
    for ext, material in zip(extremes, stack.materials):
        if ext.min_temp > ext.max_temp:
            raise ValueError(f"{ext.name}: min {ext.min_temp} > max {ext.max_temp}")
        verdicts.append(LayerVerdict(material.name, ext.min_temp, ext.max_temp,
                                     safety_factor * material.cold_limit,
                                     material.hot_limit / safety_factor))
    return SafetyReport(tuple(verdicts), safety_factor)


@dataclass(frozen=True)
class SolverParams:
    node_count: int = 201
    tol: float = 0.1
    max_orbits: int = 60
    cfl_safety: float = 0.9
    snapshot_interval: float = 60.0
    initial_temp: float = ROOM_TEMP
    dt: float | None = None
    centerline: str = "implicit"


def converged_cycle(stack: LayerStack, env: OrbitEnvironment, params: SolverParams):
    mesh = discretize(stack, params.node_count)
    return periodic_steady_state(uniform_field(mesh, params.initial_temp), mesh, env, params.dt,
                                 params.tol, params.max_orbits, params.snapshot_interval,
                                 centerline=params.centerline, cfl_safety=params.cfl_safety)


@dataclass(frozen=True)
class DesignCandidate:
    fractions: tuple[float, ...]
    feasible: bool
    objective: float
    worst_violation: float
    total_violation: float
    orbits_used: int = 0
    report: SafetyReport | None = field(default=None, compare=False, repr=False)


@dataclass
class OptimizationResult:
    best: DesignCandidate | None
    closest: DesignCandidate
    candidates: list[DesignCandidate]
    grid_count: int
    recheck: DesignCandidate | None = None

    @property
    def feasible(self) -> bool:
        return self.best is not None


def simplex_grid(n_parts: int, step: float, min_fraction: float) -> list[tuple[float, ...]]:
    """Every fraction vector on the ``step`` lattice with each part >= ``min_fraction``."""
    units = round(1.0 / step)
    if abs(units * step - 1.0) > 1e-9:
        raise ValueError(f"grid step {step} does not divide 1")
    lo = math.ceil(min_fraction / step - 1e-9)
    spare = units - lo * n_parts
    if spare < 0:
        return []
    out = []
    # stars and bars over the spare units
    for bars in itertools.combinations(range(spare + n_parts - 1), n_parts - 1):
        parts, prev = [], -1
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(spare + n_parts - 2 - prev)
        out.append(tuple(_clean((p + lo) * step) for p in parts))
    return out


def _clean(x: float) -> float:
    return round(x, 12)


def _rank_key(c: DesignCandidate):
    return (-round(c.objective, 12), -c.fractions[0], c.fractions)


def _evaluate(args):
    stack, env, params = args
    cycle = converged_cycle(stack, env, params)
    ext = {loc: layer_extremes(cycle.history, stack, loc) for loc in LOCI}
    return ext, cycle.orbits_used


def _candidate(fractions, stack, extremes, safety_factor, flexible, orbits):
    report = check_safety(extremes, stack, safety_factor)
    return DesignCandidate(
        tuple(fractions), report.passed, _clean(sum(fractions[i] for i in flexible)),
        max(v.violation for v in report.layers), report.total_violation, orbits, report,
    )


def optimize_fractions(stack_template: LayerStack, env: OrbitEnvironment,
                       solver_params: SolverParams = SolverParams(node_count=101, tol=0.5),
                       min_fraction: float = 0.05, grid_step: float = 0.05,
                       safety_factor: float = 1.2, locus: str = "all-nodes",
                       flexible=(0, 1), full_fidelity: SolverParams | None = SolverParams(),
                       workers: int = 1, cache: dict | None = None, refine: bool = True) -> OptimizationResult:
    """Exhaustive search of layer fractions maximising the flexible share.

    The grid at ``grid_step`` is swept first, then every lattice point at half
    that step within half a step of the incumbent (best feasible, or closest to
    feasible) is added. Ranking: flexible share, then first-layer fraction,
    then the fraction tuple ascending. Feasible winners are re-run at
    ``full_fidelity`` in rank order until one passes there too.

    ``cache`` maps (fractions, node_count, tol) to layer extremes and may be
    shared between calls that differ only in limits or safety factor.
    """
    if locus not in LOCI:
        raise ValueError(f"locus must be one of {LOCI}, got {locus!r}")
    if not safety_factor >= 1:
        raise ValueError(f"safety factor must be >= 1, got {safety_factor}")
    cache = {} if cache is None else cache
    template = replace(stack_template, min_fraction=min(stack_template.min_fraction, min_fraction))
    n = len(template.layers)

    def evaluate(points, params):
        todo = [p for p in points if (p, params.node_count, params.tol) not in cache]
        jobs = [(template.with_fractions(p), env, params) for p in todo]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = list(pool.map(_evaluate, jobs))
        else:
            results = [_evaluate(job) for job in jobs]
        for p, res in zip(todo, results):
            cache[(p, params.node_count, params.tol)] = res
        out = []
        for p in points:
            ext, orbits = cache[(p, params.node_count, params.tol)]
            out.append(_candidate(p, template.with_fractions(p), ext[locus], safety_factor, flexible, orbits))
        return out

    grid = simplex_grid(n, grid_step, min_fraction)
    if not grid:
        raise ValueError(f"no fractions on a {grid_step} grid satisfy min_fraction {min_fraction}")
    candidates = evaluate(grid, solver_params)

    if refine:
        incumbent = _pick(candidates)
        half = grid_step / 2
        seen = set(grid)
        near = [p for p in simplex_grid(n, half, min_fraction)
                if p not in seen and all(abs(a - b) <= half + 1e-9 for a, b in zip(p, incumbent.fractions))]
        candidates += evaluate(near, solver_params)

    feasible = sorted((c for c in candidates if c.feasible), key=_rank_key)
    closest = min(candidates, key=lambda c: (c.total_violation, _rank_key(c)))
    best, recheck = None, None
    for cand in feasible:
        if full_fidelity is None:
            best = cand
            break
        recheck = evaluate([cand.fractions], full_fidelity)[0]
        if recheck.feasible:
            best = cand
            break
    return OptimizationResult(best, closest, candidates, len(grid), recheck)


def _pick(candidates):
    feasible = [c for c in candidates if c.feasible]
    if feasible:
        return min(feasible, key=_rank_key)
    return min(candidates, key=lambda c: (c.total_violation, _rank_key(c)))
