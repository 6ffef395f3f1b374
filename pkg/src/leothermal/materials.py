"""Layer materials and the radial layer stack."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

ZERO_CELSIUS = 273.15

PRESET_NAME = "paper-table-3"


@dataclass(frozen=True)
class Material:
    """Constant thermophysical properties plus a safe operating window (kelvin)."""

    name: str
    conductivity_k: float      # W/(m K)
    density_rho: float         # kg/m^3
    specific_heat_cp: float    # J/(kg K)
    cold_limit: float          # K
    hot_limit: float           # K

    def __post_init__(self):
        for attr in ("conductivity_k", "density_rho", "specific_heat_cp"):
            value = getattr(self, attr)
            if not value > 0 or value != value or value == float("inf"):
                raise ValueError(f"{self.name}: {attr} must be finite and > 0, got {value}")
        if not self.cold_limit < self.hot_limit:
            raise ValueError(
                f"{self.name}: cold_limit {self.cold_limit} K must be below hot_limit {self.hot_limit} K"
            )

    @property
    def volumetric_heat_capacity(self) -> float:
        return self.density_rho * self.specific_heat_cp

    def with_limits(self, cold_limit: float | None = None, hot_limit: float | None = None) -> "Material":
        return replace(
            self,
            cold_limit=self.cold_limit if cold_limit is None else cold_limit,
            hot_limit=self.hot_limit if hot_limit is None else hot_limit,
        )


def thermal_diffusivity(material: Material) -> float:
    """k / (rho c_p) in m^2/s."""
    return material.conductivity_k / (material.density_rho * material.specific_heat_cp)


def _c(celsius: float) -> float:
    return celsius + ZERO_CELSIUS


# Specific heats are tabulated in J/(g K) and stored here in J/(kg K).
# Silicone's hot limit and both aerogel limits are not published; they are
# placeholder ratings, overridable from the config file.
BUILTIN_MATERIALS: dict[str, Material] = {
    "TPU": Material("TPU", 0.22, 120.0, 1.2 * 1000, _c(-90.0), _c(130.0)),
    "Silicone": Material("Silicone", 0.2, 970.0, 1.5 * 1000, _c(-120.0), _c(200.0)),
    "PTFE": Material("PTFE", 0.18, 660.0, 1.0 * 1000, _c(-200.0), _c(220.0)),
    "Aerogel": Material("Aerogel", 0.02, 200.0, 1.0 * 1000, _c(-200.0), _c(300.0)),
}

BUILTIN_FRACTIONS = (0.26, 0.23, 0.32, 0.19)
BUILTIN_ORDER = ("TPU", "Silicone", "PTFE", "Aerogel")


@dataclass(frozen=True)
class Layer:
    material: Material
    fraction: float


@dataclass(frozen=True)
class LayerStack:
    """Concentric layers, innermost first, each owning a fraction of the radius."""

    layers: tuple[Layer, ...]
    outer_radius: float = 0.05
    min_fraction: float = 0.02

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        problems = stack_violations(self)
        if problems:
            raise ValueError("invalid layer stack: " + "; ".join(problems))

    @property
    def fractions(self) -> tuple[float, ...]:
        return tuple(layer.fraction for layer in self.layers)

    @property
    def materials(self) -> tuple[Material, ...]:
        return tuple(layer.material for layer in self.layers)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(layer.material.name for layer in self.layers)

    def boundaries(self) -> list[float]:
        """Outer radius of every layer, in metres."""
        out, acc = [], 0.0
        for frac in self.fractions:
            acc += frac
            out.append(acc * self.outer_radius)
        out[-1] = self.outer_radius
        return out

    def with_fractions(self, fractions) -> "LayerStack":
        if len(fractions) != len(self.layers):
            raise ValueError(f"expected {len(self.layers)} fractions, got {len(fractions)}")
        layers = tuple(Layer(layer.material, float(f)) for layer, f in zip(self.layers, fractions))
        return replace(self, layers=layers)

    def with_materials(self, materials: dict[str, Material]) -> "LayerStack":
        layers = tuple(Layer(materials.get(l.material.name, l.material), l.fraction) for l in self.layers)
        return replace(self, layers=layers)


@dataclass
class ValidationResult:
    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


def stack_violations(stack: LayerStack, tol: float = 1e-9) -> list[str]:
    problems = []
    if not stack.layers:
        return ["at least one layer required"]
    if not stack.outer_radius > 0:
        problems.append(f"outer radius must be > 0, got {stack.outer_radius}")
    total = sum(stack.fractions)
    if abs(total - 1.0) > tol:
        problems.append(f"fractions sum to {total:.12g}")
    for i, layer in enumerate(stack.layers):
        if not layer.fraction > 0:
            problems.append(f"layer {i} ({layer.material.name}) has non-positive fraction {layer.fraction}")
        elif layer.fraction < stack.min_fraction - tol:
            problems.append(
                f"layer {i} ({layer.material.name}) fraction {layer.fraction} below minimum {stack.min_fraction}"
            )
    return problems


def validate_stack(stack) -> ValidationResult:
    """Check a stack-like object (anything with layers/outer_radius/min_fraction).

    LayerStack raises on construction, so this is mostly useful on raw
    inputs built via :func:`unchecked_stack`.
    """
    return ValidationResult(stack_violations(stack))


def unchecked_stack(layers, outer_radius: float = 0.05, min_fraction: float = 0.02) -> LayerStack:
    """Build a LayerStack without running its invariants (for validation reporting)."""
    stack = object.__new__(LayerStack)
    object.__setattr__(stack, "layers", tuple(layers))
    object.__setattr__(stack, "outer_radius", outer_radius)
    object.__setattr__(stack, "min_fraction", min_fraction)
    return stack


def builtin_stack(outer_radius: float = 0.05, materials: dict[str, Material] | None = None) -> LayerStack:
    """TPU / silicone / PTFE / aerogel at 26/23/32/19 % of a 5 cm radius."""
    lib = dict(BUILTIN_MATERIALS)
    if materials:
        lib.update(materials)
    layers = tuple(Layer(lib[name], frac) for name, frac in zip(BUILTIN_ORDER, BUILTIN_FRACTIONS))
    return LayerStack(layers, outer_radius=outer_radius)
