import numpy as np
import pytest

from swarmchem.engine import WorldConfig, new_world, spawn
from swarmchem.recipe import parse_recipe


@pytest.fixture
def two_type_recipe():
    return parse_recipe(
        "30 * (60, 3, 6, 0.5, 0.6, 15, 0.05, 0.3)\n"
        "20 * (40, 5, 10, 0.2, 0.3, 30, 0.1, 0.2)\n"
    )


@pytest.fixture
def small_world(two_type_recipe):
    cfg = WorldConfig(seed=42, extent=(300.0, 300.0))
    w = new_world(cfg)
    spawn(w, two_type_recipe, (150.0, 150.0), 60.0)
    return w


def world_state_tuple(w):
    """Cheap state fingerprint for equality checks in tests."""
    return (
        w.step_count,
        w.positions.tobytes(),
        w.velocities.tobytes(),
        w.params.tobytes(),
        w.type_ids.tobytes(),
        tuple(id(r) for r in w.carried),
    )


def assert_worlds_equal(a, b):
    assert a.step_count == b.step_count
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.velocities, b.velocities)
    np.testing.assert_array_equal(a.params, b.params)
    np.testing.assert_array_equal(a.type_ids, b.type_ids)
    assert [r.entries for r in a.carried] == [r.entries for r in b.carried]
