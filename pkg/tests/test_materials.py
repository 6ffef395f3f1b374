import math

import pytest
from hypothesis import given, strategies as st

from leothermal.config import dump_config, load_config
from leothermal.materials import (
    BUILTIN_MATERIALS,
    Layer,
    LayerStack,
    Material,
    builtin_stack,
    thermal_diffusivity,
    unchecked_stack,
    validate_stack,
)


def test_diffusivity_values():
    assert thermal_diffusivity(BUILTIN_MATERIALS["TPU"]) == pytest.approx(1.5278e-6, rel=1e-4)
    assert thermal_diffusivity(BUILTIN_MATERIALS["Aerogel"]) == pytest.approx(1.0e-7, rel=1e-12)
    assert thermal_diffusivity(Material("unit", 1.0, 1.0, 1.0, 1.0, 2.0)) == 1.0


@pytest.mark.parametrize("name", sorted(BUILTIN_MATERIALS))
def test_builtin_diffusivity_sanity_band(name):
    assert 1e-8 <= thermal_diffusivity(BUILTIN_MATERIALS[name]) <= 1e-5


def test_specific_heat_stored_per_kg():
    assert BUILTIN_MATERIALS["Silicone"].specific_heat_cp == 1500.0
    assert BUILTIN_MATERIALS["PTFE"].specific_heat_cp == 1000.0


def test_builtin_stack():
    stack = builtin_stack()
    assert len(stack.layers) == 4
    assert sum(stack.fractions) == pytest.approx(1.0, abs=1e-12)
    assert stack.layers[2].material.conductivity_k == 0.18
    assert stack.names == ("TPU", "Silicone", "PTFE", "Aerogel")
    assert stack.outer_radius == 0.05
    assert stack.boundaries() == pytest.approx([0.013, 0.0245, 0.0405, 0.05], abs=1e-15)


@pytest.mark.parametrize("kwargs", [
    dict(conductivity_k=0.0), dict(density_rho=-1.0), dict(specific_heat_cp=math.nan),
    dict(cold_limit=400.0, hot_limit=300.0),
])
def test_material_invariants(kwargs):
    base = dict(name="x", conductivity_k=1.0, density_rho=1.0, specific_heat_cp=1.0, cold_limit=100.0, hot_limit=200.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        Material(**base)


def test_validate_stack_messages():
    assert validate_stack(builtin_stack()).valid
    tpu = BUILTIN_MATERIALS["TPU"]
    bad = validate_stack(unchecked_stack([Layer(tpu, 0.5), Layer(tpu, 0.6)]))
    assert not bad.valid
    assert any("fractions sum to 1.1" in v for v in bad.violations)
    empty = validate_stack(unchecked_stack([]))
    assert empty.violations == ["at least one layer required"]


def test_stack_constructor_rejects_invalid():
    tpu = BUILTIN_MATERIALS["TPU"]
    with pytest.raises(ValueError, match="sum to"):
        LayerStack((Layer(tpu, 0.5), Layer(tpu, 0.6)))
    with pytest.raises(ValueError, match="below minimum"):
        LayerStack((Layer(tpu, 0.99), Layer(tpu, 0.01)))


@given(st.lists(st.floats(min_value=-0.2, max_value=1.2, allow_nan=False), min_size=0, max_size=6),
       st.booleans())
def test_validate_accepts_iff_invariants_hold(fracs, normalise):
    if normalise and fracs and sum(fracs) > 0:
        total = sum(fracs)
        fracs = [f / total for f in fracs]
    tpu = BUILTIN_MATERIALS["TPU"]
    stack = unchecked_stack([Layer(tpu, f) for f in fracs], 0.05, 0.02)
    expected = bool(fracs) and abs(sum(fracs) - 1) <= 1e-9 and all(f >= 0.02 - 1e-9 for f in fracs)
    assert validate_stack(stack).valid == expected


def test_builtin_stack_round_trips_through_config():
    cfg = load_config()
    again = load_config(text=dump_config(cfg))
    assert again.stack == cfg.stack == builtin_stack()
    for a, b in zip(again.stack.materials, builtin_stack().materials):
        for field in ("name", "conductivity_k", "density_rho", "specific_heat_cp", "cold_limit", "hot_limit"):
            assert getattr(a, field) == getattr(b, field)
