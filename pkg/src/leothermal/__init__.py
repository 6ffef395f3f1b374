"""Transient radial thermal model and layer-thickness design for a layered
soft-gripper cross-section in low Earth orbit."""
from .materials import (
    BUILTIN_MATERIALS,
    Layer,
    LayerStack,
    Material,
    builtin_stack,
    thermal_diffusivity,
    validate_stack,
)
from .mesh import RadialMesh, discretize, stable_timestep
from .orbit import OrbitEnvironment, boundary_net_flux, is_sunlit
from .solver import (
    TemperatureField,
    TemperatureHistory,
    periodic_steady_state,
    simulate,
    step,
    total_energy,
    uniform_field,
)

__version__ = "0.1.0"
