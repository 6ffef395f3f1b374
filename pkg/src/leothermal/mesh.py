"""Uniform radial grid over a layer stack."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .materials import LayerStack, Material, thermal_diffusivity

MIN_NODES_PER_LAYER = 3


class ResolutionError(ValueError):
    def __init__(self, message: str, min_node_count: int):
        super().__init__(message)
        self.min_node_count = min_node_count


@dataclass(frozen=True, eq=False)
class RadialMesh:
    """Node radii from the centerline (r=0) to the outer surface.

    Per-node arrays are read-only numpy arrays. ``face_conductivity[i]`` sits
    between nodes i and i+1.
    """

    stack: LayerStack
    node_radii: np.ndarray
    node_layer: np.ndarray
    delta_r: float
    face_conductivity: np.ndarray
    snap_error: float

    @property
    def node_count(self) -> int:
        return len(self.node_radii)

    @property
    def outer_radius(self) -> float:
        return self.stack.outer_radius

    @property
    def node_material(self) -> list[Material]:
        mats = self.stack.materials
        return [mats[j] for j in self.node_layer]

    @property
    def conductivity(self) -> np.ndarray:
        return _per_node(self, lambda m: m.conductivity_k)

    @property
    def heat_capacity(self) -> np.ndarray:
        """rho * c_p per node, J/(m^3 K)."""
        return _per_node(self, lambda m: m.volumetric_heat_capacity)

    @property
    def diffusivity(self) -> np.ndarray:
        return _per_node(self, thermal_diffusivity)

    @property
    def face_radii(self) -> np.ndarray:
        return self.node_radii[:-1] + 0.5 * self.delta_r

    @property
    def cell_volumes(self) -> np.ndarray:
        """Control-volume areas per unit axial length, m^2 (half cells at both ends)."""
        edges = np.concatenate(([0.0], self.face_radii, [self.outer_radius]))
        return np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)

    def layer_nodes(self, layer_index: int) -> np.ndarray:
        return np.flatnonzero(self.node_layer == layer_index)


def _per_node(mesh: RadialMesh, prop) -> np.ndarray:
    values = np.array([prop(m) for m in mesh.stack.materials])
    out = values[mesh.node_layer]
    out.setflags(write=False)
    return out


def harmonic_mean(a, b):
    # equal inputs come back bit-exact
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.where(a == b, a, 2.0 * a * b / (a + b))


def _assign_layers(stack: LayerStack, radii: np.ndarray, delta_r: float) -> np.ndarray:
    # a node exactly on an interface belongs to the inner layer
    bounds = np.asarray(stack.boundaries())
    layer = np.searchsorted(bounds + 1e-9 * delta_r, radii, side="left")
    return np.minimum(layer, len(bounds) - 1)


def _layer_counts(stack: LayerStack, node_count: int) -> np.ndarray:
    dr = stack.outer_radius / (node_count - 1)
    radii = np.arange(node_count) * dr
    return np.bincount(_assign_layers(stack, radii, dr), minlength=len(stack.layers))


def min_node_count(stack: LayerStack, per_layer: int = MIN_NODES_PER_LAYER, limit: int = 1_000_000) -> int:
    n = max(per_layer * len(stack.layers), 3)
    while n <= limit:
        if _layer_counts(stack, n).min() >= per_layer:
            return n
        n += 1
    raise ValueError("no admissible node count below limit")


def discretize(stack: LayerStack, node_count: int = 201) -> RadialMesh:
    """Place ``node_count`` evenly spaced nodes on [0, outer_radius]."""
    if node_count < 3:
        raise ResolutionError(f"node_count must be >= 3, got {node_count}", min_node_count(stack))
    counts = _layer_counts(stack, node_count)
    if counts.min() < MIN_NODES_PER_LAYER:
        worst = int(np.argmin(counts))
        need = min_node_count(stack)
        raise ResolutionError(
            f"layer {worst} ({stack.names[worst]}) gets {counts[worst]} nodes at node_count={node_count}; "
            f"each layer needs >= {MIN_NODES_PER_LAYER}, minimum admissible node_count is {need}",
            need,
        )

    dr = stack.outer_radius / (node_count - 1)
    radii = np.arange(node_count) * dr
    radii[-1] = stack.outer_radius
    layer = _assign_layers(stack, radii, dr)
    k = np.array([m.conductivity_k for m in stack.materials])[layer]
    faces = harmonic_mean(k[:-1], k[1:])

    snap = 0.0
    for b in stack.boundaries()[:-1]:
        snap = max(snap, float(np.min(np.abs(radii - b))))

    for arr in (radii, layer, faces):
        arr.setflags(write=False)
    return RadialMesh(stack, radii, layer, dr, faces, snap)


def stable_timestep(mesh: RadialMesh, safety: float = 0.9) -> float:
    """Largest explicit step allowed by alpha dt / dr^2 <= 1/2, times ``safety``."""
    if not 0 < safety <= 1:
        raise ValueError(f"CFL safety must be in (0, 1], got {safety}")
    alpha_max = float(mesh.diffusivity.max())
    return safety * 0.5 * mesh.delta_r ** 2 / alpha_max
