"""TOML run configuration with unit-suffixed quantities."""
from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import tomli
import tomli_w

from .design import LOCI, SolverParams
from .materials import (
    BUILTIN_MATERIALS,
    BUILTIN_ORDER,
    PRESET_NAME,
    ZERO_CELSIUS,
    Layer,
    LayerStack,
    Material,
    builtin_stack,
    stack_violations,
    unchecked_stack,
)
from .mesh import ResolutionError, discretize, stable_timestep
from .orbit import OrbitEnvironment


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = f"{source or 'config'}:{line}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.detail = message


_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s\d].*?)?\s*$")

_UNITS = {
    "temperature": {"K": lambda v: v, "C": lambda v: v + ZERO_CELSIUS, "°C": lambda v: v + ZERO_CELSIUS},
    "length": {"m": lambda v: v, "cm": lambda v: v * 1e-2, "mm": lambda v: v * 1e-3},
    "time": {"s": lambda v: v, "min": lambda v: v * 60.0, "h": lambda v: v * 3600.0},
    "specific_heat": {"J/kgK": lambda v: v, "J/gK": lambda v: v * 1000.0},
}
_BASE_UNIT = {"temperature": "K", "length": "m", "time": "s", "specific_heat": "J/kgK"}


def parse_quantity(value, kind: str) -> float:
    """Number in SI base units, or a string such as ``"-90 C"``, ``"5 cm"``, ``"45 min"``."""
    if isinstance(value, bool):
        raise ValueError(f"expected a {kind}, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"expected a {kind}, got {value!r}")
    m = _QUANTITY.match(value)
    if not m:
        raise ValueError(f"cannot parse {kind} {value!r}")
    number, unit = float(m.group(1)), (m.group(2) or _BASE_UNIT[kind])
    units = _UNITS[kind]
    if unit not in units:
        raise ValueError(f"unknown {kind} unit {unit!r} in {value!r} (use one of {', '.join(units)})")
    return units[unit](number)


def format_quantity(value: float, kind: str) -> str:
    return f"{value!r} {_BASE_UNIT[kind]}"


@dataclass(frozen=True)
class DesignParams:
    safety_factor: float = 1.2
    locus: str = "all-nodes"
    grid_step: float = 0.05
    min_fraction: float = 0.05
    candidate_node_count: int = 101
    candidate_tol: float = 0.5
    workers: int = 1
    refine: bool = True


@dataclass(frozen=True)
class RunConfig:
    stack: LayerStack = field(default_factory=builtin_stack)
    orbit: OrbitEnvironment = field(default_factory=OrbitEnvironment)
    solver: SolverParams = field(default_factory=SolverParams)
    design: DesignParams = field(default_factory=DesignParams)
    output_dir: str = "out"
    stack_preset: str | None = field(default=PRESET_NAME, compare=False)


# (key, kind) per section; kind None means a plain number/string
_ORBIT_KEYS = {
    "orbit_period": ("orbit_period", "time"),
    "sunlit_duration": ("sunlit_duration", "time"),
    "solar_flux": ("solar_flux_q", None),
    "absorptivity": ("absorptivity_alpha_s", None),
    "emissivity": ("emissivity_eps", None),
    "space_sink_temp": ("space_sink_temp", "temperature"),
}
_SOLVER_KEYS = {
    "node_count": ("node_count", int),
    "dt": ("dt", "time"),
    "cfl_safety": ("cfl_safety", None),
    "snapshot_interval": ("snapshot_interval", "time"),
    "initial_temp": ("initial_temp", "temperature"),
    "steady_tol": ("tol", None),
    "max_orbits": ("max_orbits", int),
    "centerline": ("centerline", str),
}
_DESIGN_KEYS = {
    "safety_factor": ("safety_factor", None),
    "locus": ("locus", str),
    "grid_step": ("grid_step", None),
    "min_fraction": ("min_fraction", None),
    "candidate_node_count": ("candidate_node_count", int),
    "candidate_tol": ("candidate_tol", None),
    "workers": ("workers", int),
    "refine": ("refine", bool),
}
_MATERIAL_KEYS = {
    "conductivity": ("conductivity_k", None),
    "density": ("density_rho", None),
    "specific_heat": ("specific_heat_cp", "specific_heat"),
    "cold_limit": ("cold_limit", "temperature"),
    "hot_limit": ("hot_limit", "temperature"),
}
_LIMIT_KEYS = {k: _MATERIAL_KEYS[k] for k in ("cold_limit", "hot_limit")}


class _Reader:
    def __init__(self, text: str, source: str | None):
        self.text = text
        self.source = source
        self.lines = text.splitlines()

    def line_of(self, section: str, key: str | None = None) -> int | None:
        current = ""
        header_line = None
        for no, raw in enumerate(self.lines, start=1):
            line = raw.split("#", 1)[0].strip()
            m = re.match(r"^\[\s*([^\]]+?)\s*\]$", line)
            if m:
                current = m.group(1).replace('"', "").replace(" ", "")
                if current == section:
                    header_line = no
                continue
            if key and current == section and re.match(rf"^\"?{re.escape(key)}\"?\s*=", line):
                return no
        return header_line

    def error(self, message: str, section: str, key: str | None = None) -> ConfigError:
        return ConfigError(message, self.line_of(section, key), self.source)

    def convert(self, section: str, key: str, value, kind):
        try:
            if kind is None:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ValueError(f"expected a number, got {value!r}")
                return float(value)
            if kind is int:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ValueError(f"expected an integer, got {value!r}")
                return value
            if kind is bool:
                if not isinstance(value, bool):
                    raise ValueError(f"expected true/false, got {value!r}")
                return value
            if kind is str:
                if not isinstance(value, str):
                    raise ValueError(f"expected a string, got {value!r}")
                return value
            return parse_quantity(value, kind)
        except ValueError as exc:
            raise self.error(f"[{section}] {key}: {exc}", section, key) from None

    def section(self, data: dict, section: str, spec: dict) -> dict:
        table = data.get(section, {})
        if not isinstance(table, dict):
            raise self.error(f"[{section}] must be a table", section)
        out = {}
        for key, value in table.items():
            if isinstance(value, dict) and section in ("design",) and key == "limits":
                continue
            if key not in spec:
                raise self.error(f"[{section}] unknown key {key!r} (known: {', '.join(spec)})", section, key)
            name, kind = spec[key]
            out[name] = self.convert(section, key, value, kind)
        return out


def load_config(path: str | Path | None = None, overrides=(), text: str | None = None) -> RunConfig:
    """Read a config file (or the built-in defaults when both are None), apply ``key=value`` overrides."""
    source = None
    if text is None and path is not None:
        source = str(path)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    text = text or ""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", int(m.group(1)) if m else None, source) from None
    for item in overrides:
        apply_override(data, item)
    return _build(data, _Reader(text, source))


def apply_override(data: dict, item: str):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    parts = [p.strip() for p in key.strip().split(".") if p.strip()]
    if not parts:
        raise ConfigError(f"override {item!r} has an empty key")
    try:
        value = tomli.loads(f"v = {raw.strip()}")["v"]
    except tomli.TOMLDecodeError:
        value = raw.strip()
    node = data
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {item!r}: {p} is not a table")
    node[parts[-1]] = value


def _materials(data: dict, reader: _Reader) -> dict[str, Material]:
    library = dict(BUILTIN_MATERIALS)
    tables = data.get("materials", {})
    if not isinstance(tables, dict):
        raise reader.error("[materials] must be a table of material tables", "materials")
    limit_tables = data.get("design", {}).get("limits", {}) if isinstance(data.get("design"), dict) else {}
    for group, spec, prefix in ((tables, _MATERIAL_KEYS, "materials"), (limit_tables, _LIMIT_KEYS, "design.limits")):
        for name, table in group.items():
            section = f"{prefix}.{name}"
            if not isinstance(table, dict):
                raise reader.error(f"[{section}] must be a table", prefix, name)
            values = reader.section({section: table}, section, spec)
            base = library.get(name)
            if base is None:
                missing = [k for k, (attr, _) in spec.items() if attr not in values]
                if missing:
                    raise reader.error(f"new material {name!r} needs {', '.join(missing)}", section)
                kwargs = values
            else:
                kwargs = {f.name: getattr(base, f.name) for f in fields(Material) if f.name != "name"}
                kwargs.update(values)
            try:
                library[name] = Material(name, **kwargs)
            except ValueError as exc:
                raise reader.error(str(exc), section) from None
    return library


def _stack(data: dict, reader: _Reader, library: dict[str, Material]) -> tuple[LayerStack, str | None]:
    table = data.get("stack", {})
    if not isinstance(table, dict):
        raise reader.error("[stack] must be a table", "stack")
    known = {"preset", "outer_radius", "min_fraction", "layers", "fractions"}
    for key in table:
        if key not in known:
            raise reader.error(f"[stack] unknown key {key!r} (known: {', '.join(sorted(known))})", "stack", key)
    radius = reader.convert("stack", "outer_radius", table.get("outer_radius", 0.05), "length")
    min_fraction = reader.convert("stack", "min_fraction", table.get("min_fraction", 0.02), None)
    preset = table.get("preset", PRESET_NAME if "layers" not in table else None)

    if "layers" in table:
        if preset is not None:
            raise reader.error("[stack] give either preset or layers, not both", "stack", "layers")
        raw = table["layers"]
        if not isinstance(raw, list):
            raise reader.error("[stack] layers must be an array of {material, fraction} tables", "stack", "layers")
        names, fractions = [], []
        for i, entry in enumerate(raw):
            if not isinstance(entry, dict) or set(entry) != {"material", "fraction"}:
                raise reader.error(f"[stack] layers[{i}] needs exactly material and fraction", "stack", "layers")
            names.append(entry["material"])
            fractions.append(reader.convert("stack", "layers", entry["fraction"], None))
    elif preset == PRESET_NAME:
        names, fractions = list(BUILTIN_ORDER), list(builtin_stack().fractions)
    else:
        raise reader.error(f"[stack] unknown preset {preset!r} (available: {PRESET_NAME})", "stack", "preset")

    if "fractions" in table:
        raw = table["fractions"]
        if not isinstance(raw, list) or len(raw) != len(names):
            raise reader.error(f"[stack] fractions must list {len(names)} numbers", "stack", "fractions")
        fractions = [reader.convert("stack", "fractions", f, None) for f in raw]

    for name in names:
        if name not in library:
            raise reader.error(f"[stack] material {name!r} is not defined", "stack", "layers")
    layers = tuple(Layer(library[n], f) for n, f in zip(names, fractions))
    problems = stack_violations(unchecked_stack(layers, radius, min_fraction))
    if problems:
        raise reader.error("[stack] " + "; ".join(problems), "stack", "fractions" if "fractions" in table else "layers")
    return LayerStack(layers, radius, min_fraction), preset


def _build(data: dict, reader: _Reader) -> RunConfig:
    known = {"stack", "materials", "orbit", "solver", "design", "output"}
    for key in data:
        if key not in known:
            raise reader.error(f"unknown section [{key}] (known: {', '.join(sorted(known))})", key)
    library = _materials(data, reader)
    stack, preset = _stack(data, reader, library)

    try:
        orbit = OrbitEnvironment(**reader.section(data, "orbit", _ORBIT_KEYS))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise reader.error(f"[orbit] {exc}", "orbit") from None

    solver_values = reader.section(data, "solver", _SOLVER_KEYS)
    solver = SolverParams(**solver_values)
    _check_solver(solver, orbit, stack, reader)

    design = DesignParams(**reader.section(data, "design", _DESIGN_KEYS))
    _check_design(design, reader)

    out = data.get("output", {})
    if not isinstance(out, dict) or set(out) - {"dir"}:
        raise reader.error("[output] accepts only dir", "output")
    output_dir = out.get("dir", "out")
    if not isinstance(output_dir, str):
        raise reader.error("[output] dir must be a string", "output", "dir")
    return RunConfig(stack, orbit, solver, design, output_dir, preset)


def _check_solver(solver: SolverParams, orbit: OrbitEnvironment, stack: LayerStack, reader: _Reader):
    def fail(msg, key):
        raise reader.error(f"[solver] {msg}", "solver", key)

    if not 0 < solver.cfl_safety <= 1:
        fail(f"cfl_safety must be in (0, 1], got {solver.cfl_safety}", "cfl_safety")
    if not solver.snapshot_interval > 0:
        fail("snapshot_interval must be > 0", "snapshot_interval")
    n = orbit.orbit_period / solver.snapshot_interval
    if abs(n - round(n)) > 1e-9 * n:
        fail(f"orbit period {orbit.orbit_period} s is not a multiple of snapshot_interval", "snapshot_interval")
    if not solver.tol > 0:
        fail("steady_tol must be > 0", "steady_tol")
    if solver.max_orbits < 2:
        fail("max_orbits must be >= 2", "max_orbits")
    if not solver.initial_temp > 0:
        fail("initial_temp must be above 0 K", "initial_temp")
    if solver.centerline not in ("implicit", "explicit"):
        fail("centerline must be 'implicit' or 'explicit'", "centerline")
    try:
        mesh = discretize(stack, solver.node_count)
    except ResolutionError as exc:
        fail(str(exc), "node_count")
    if solver.dt is not None:
        limit = stable_timestep(mesh, 1.0)
        if not 0 < solver.dt <= limit:
            fail(f"dt {solver.dt} s outside (0, {limit:.6g}] s allowed by the CFL limit", "dt")


def _check_design(design: DesignParams, reader: _Reader):
    def fail(msg, key):
        raise reader.error(f"[design] {msg}", "design", key)

    if not design.safety_factor >= 1:
        fail(f"safety_factor must be >= 1, got {design.safety_factor}", "safety_factor")
    if design.locus not in LOCI:
        fail(f"locus must be one of {', '.join(LOCI)}", "locus")
    if not 0 < design.grid_step <= 1 or abs(round(1 / design.grid_step) * design.grid_step - 1) > 1e-9:
        fail(f"grid_step {design.grid_step} must divide 1 evenly", "grid_step")
    if not 0 < design.min_fraction < 1:
        fail("min_fraction must be in (0, 1)", "min_fraction")
    if design.candidate_node_count < 3:
        fail("candidate_node_count must be >= 3", "candidate_node_count")
    if not design.candidate_tol > 0:
        fail("candidate_tol must be > 0", "candidate_tol")
    if design.workers < 1:
        fail("workers must be >= 1", "workers")


def config_to_dict(cfg: RunConfig) -> dict:
    """Fully resolved config; every material and layer is spelled out."""
    materials = {}
    for m in cfg.stack.materials:
        materials[m.name] = {
            "conductivity": m.conductivity_k,
            "density": m.density_rho,
            "specific_heat": format_quantity(m.specific_heat_cp, "specific_heat"),
            "cold_limit": format_quantity(m.cold_limit, "temperature"),
            "hot_limit": format_quantity(m.hot_limit, "temperature"),
        }
    s, o, d = cfg.solver, cfg.orbit, cfg.design
    solver = {
        "node_count": s.node_count,
        "cfl_safety": s.cfl_safety,
        "snapshot_interval": format_quantity(s.snapshot_interval, "time"),
        "initial_temp": format_quantity(s.initial_temp, "temperature"),
        "steady_tol": s.tol,
        "max_orbits": s.max_orbits,
        "centerline": s.centerline,
    }
    if s.dt is not None:
        solver["dt"] = format_quantity(s.dt, "time")
    return {
        "stack": {
            "outer_radius": format_quantity(cfg.stack.outer_radius, "length"),
            "min_fraction": cfg.stack.min_fraction,
            "layers": [{"material": l.material.name, "fraction": l.fraction} for l in cfg.stack.layers],
        },
        "materials": materials,
        "orbit": {
            "orbit_period": format_quantity(o.orbit_period, "time"),
            "sunlit_duration": format_quantity(o.sunlit_duration, "time"),
            "solar_flux": o.solar_flux_q,
            "absorptivity": o.absorptivity_alpha_s,
            "emissivity": o.emissivity_eps,
            "space_sink_temp": format_quantity(o.space_sink_temp, "temperature"),
        },
        "solver": solver,
        "design": {
            "safety_factor": d.safety_factor,
            "locus": d.locus,
            "grid_step": d.grid_step,
            "min_fraction": d.min_fraction,
            "candidate_node_count": d.candidate_node_count,
            "candidate_tol": d.candidate_tol,
            "workers": d.workers,
            "refine": d.refine,
        },
        "output": {"dir": cfg.output_dir},
    }


def dump_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))
