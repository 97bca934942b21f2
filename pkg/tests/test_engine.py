import numpy as np
import pytest

from swarmchem import rng as rnd
from swarmchem.engine import (
    COL_V_MAX,
    WorldConfig,
    World,
    new_world,
    run,
    spawn,
    step,
)
from swarmchem.errors import ConfigurationError, SimulationError
from swarmchem.morphogenesis import SwarmClass
from swarmchem.recipe import KineticParams, Recipe, parse_recipe

from conftest import assert_worlds_equal


def make_world(seed=42, extent=(300.0, 300.0), boundary="toroidal", **kw):
    return new_world(WorldConfig(seed=seed, extent=extent, boundary=boundary, **kw))


class TestSpawn:
    def test_counts_per_type_exact(self):
        a = KineticParams(50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)
        b = KineticParams(40, 1, 3, 0.2, 0.8, 5, 0.0, 0.4)
        r = Recipe(((3, a), (2, b)))
        w = make_world()
        spawn(w, r, (150, 150), 10)
        assert w.n_particles == 5
        ids, counts = np.unique(w.type_ids, return_counts=True)
        assert sorted(counts.tolist()) == [2, 3]
        # canonical order decides which tuple gets which block
        by_type = {w.types.params_of(int(t)): c for t, c in zip(ids, counts)}
        assert by_type[a] == 3 and by_type[b] == 2

    def test_radius_zero_all_at_center(self):
        r = parse_recipe("4 * (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)")
        w = make_world()
        spawn(w, r, (120.0, 80.0), 0.0)
        assert np.allclose(w.positions, [120.0, 80.0])

    def test_seeded_spawn_reproducible(self, two_type_recipe):
        w1 = make_world()
        w2 = make_world()
        spawn(w1, two_type_recipe, (150, 150), 60)
        spawn(w2, two_type_recipe, (150, 150), 60)
        assert_worlds_equal(w1, w2)

    def test_velocities_at_v_normal(self, two_type_recipe):
        w = make_world()
        spawn(w, two_type_recipe, (150, 150), 60)
        speeds = w.speeds()
        v_normal = w.params[:, 1]
        assert np.allclose(speeds, v_normal)

    def test_population_cap(self):
        r = parse_recipe("10 * (50, 2, 4, 0.5, 0.5, 10, 0.1, 0.5)")
        w = new_world(WorldConfig(seed=1, extent=(100.0, 100.0), max_population=5))
        with pytest.raises(ConfigurationError):
            spawn(w, r, (50, 50), 10)

    def test_carried_recipe_reference(self, small_world, two_type_recipe):
        assert all(r is two_type_recipe for r in small_world.carried)


class TestStepRule:
    def test_lone_particle_hand_trace(self):
        """Independent scalar trace of the documented update for a particle
        with no neighbors (always steers randomly)."""
        p = KineticParams(10, 2, 4, 0.5, 0.5, 10, 0.1, 0.6)
        r = Recipe(((1, p),))
        w = make_world(seed=77)
        spawn(w, r, (150, 150), 0)
        x0 = w.positions[0].copy()
        v0 = w.velocities[0].copy()

        key = rnd.stream_key(77, rnd.TAG_STEER, 0, 0)
        steer = rnd.unit_vectors(key, np.arange(1), 2)[0] * 0.5
        v1 = v0 + steer
        s = np.sqrt(v1[0] ** 2 + v1[1] ** 2)
        if s > p.v_max:
            v1 = v1 * (p.v_max / max(s, 1e-6))
            s = np.sqrt(v1[0] ** 2 + v1[1] ** 2)
        v2 = p.w_pacekeeping * (p.v_normal / max(s, 1e-6)) * v1 + (1 - p.w_pacekeeping) * v1
        x1 = np.mod(x0 + v2, 300.0)

        step(w)
        np.testing.assert_allclose(w.positions[0], x1, rtol=0, atol=1e-12)
        np.testing.assert_allclose(w.velocities[0], v2, rtol=0, atol=1e-12)

    def test_mirror_symmetry_100_steps(self):
        p = KineticParams(60, 1, 2, 0.5, 0.0, 1, 0.0, 0.5)
        r = Recipe(((2, p),))
        w = make_world(seed=5)
        spawn(w, r, (150, 150), 0)
        w.positions = np.array([[140.0, 150.0], [160.0, 150.0]])
        w.velocities = np.array([[0.0, 1.0], [0.0, -1.0]])
        center = np.array([300.0, 300.0])
        for _ in range(100):
            step(w)
            np.testing.assert_allclose(
                w.positions[0] + w.positions[1], center, rtol=0, atol=1e-9
            )
            np.testing.assert_allclose(
                w.velocities[0] + w.velocities[1], 0.0, rtol=0, atol=1e-9
            )

    def test_alignment_only_polarizes(self):
        p = KineticParams(100, 3, 6, 0.0, 1.0, 0.0, 0.0, 0.5)
        r = Recipe(((200, p),))
        w = new_world(WorldConfig(seed=11, extent=(1000.0, 1000.0)))
        spawn(w, r, (500, 500), 50)
        best = 0.0
        for _ in range(500):
            step(w)
            speeds = w.speeds()
            ok = speeds > 1e-9
            unit = w.velocities[ok] / speeds[ok, None]
            pol = float(np.linalg.norm(unit.sum(axis=0))) / w.n_particles
            best = max(best, pol)
            if best > 0.95:
                break
        assert best > 0.95

    def test_speed_cap_always_holds(self, small_world):
        for _ in range(50):
            step(small_world)
            assert np.all(small_world.speeds() <= small_world.params[:, COL_V_MAX] + 1e-9)

    def test_positions_stay_in_extent(self, two_type_recipe):
        for boundary in ("toroidal", "open"):
            w = make_world(boundary=boundary)
            spawn(w, two_type_recipe, (280.0, 280.0), 40.0)
            run(w, 100)
            assert np.all(w.positions >= 0.0)
            assert np.all(w.positions <= 300.0)

    def test_open_boundary_reflects_velocity(self):
        p = KineticParams(5, 4, 8, 0.0, 0.0, 0.0, 0.0, 1.0)
        r = Recipe(((1, p),))
        w = make_world(boundary="open")
        spawn(w, r, (299.0, 150.0), 0)
        w.velocities = np.array([[4.0, 0.0]])
        # isolated particle steers randomly, but the dominant +x motion must
        # reflect at the wall within a few steps
        for _ in range(5):
            x_before = w.positions[0, 0]
            step(w)
            if x_before + 3.0 > 300.0:
                assert w.velocities[0, 0] < 0
                assert w.positions[0, 0] <= 300.0
                return
        pytest.fail("never reached the wall")

    def test_brute_force_matches_grid(self, small_world):
        import copy

        w1 = small_world
        w2 = copy.deepcopy(small_world)
        for _ in range(5):
            step(w1)
            step(w2, brute_force=True)
        np.testing.assert_allclose(w1.positions, w2.positions, rtol=0, atol=1e-10)
        np.testing.assert_allclose(w1.velocities, w2.velocities, rtol=0, atol=1e-10)


class TestRun:
    def test_zero_steps_unchanged(self, small_world):
        before = small_world.positions.copy()
        run(small_world, 0)
        assert small_world.step_count == 0
        np.testing.assert_array_equal(small_world.positions, before)

    def test_run_equals_repeated_step(self, two_type_recipe):
        w1 = make_world()
        w2 = make_world()
        spawn(w1, two_type_recipe, (150, 150), 60)
        spawn(w2, two_type_recipe, (150, 150), 60)
        run(w1, 10)
        for _ in range(10):
            step(w2)
        assert_worlds_equal(w1, w2)

    def test_determinism_1000_steps(self, two_type_recipe):
        ws = []
        for _ in range(2):
            w = new_world(
                WorldConfig(
                    seed=2024,
                    extent=(300.0, 300.0),
                    swarm_class=SwarmClass.REDIFFERENTIABLE,
                )
            )
            spawn(w, two_type_recipe, (150, 150), 60)
            run(w, 300)
            ws.append(w)
        assert_worlds_equal(ws[0], ws[1])

    def test_observer_failure_surfaces_cleanly(self, small_world):
        class Boom:
            def __init__(self):
                self.calls = 0

            def on_step(self, world):
                self.calls += 1
                if self.calls == 5:
                    raise IOError("disk full")

        obs = Boom()
        with pytest.raises(SimulationError, match="step 5"):
            run(small_world, 10, observers=[obs])
        # the failing step fully committed
        assert small_world.step_count == 5
        assert np.all(small_world.speeds() <= small_world.params[:, COL_V_MAX] + 1e-9)

    def test_negative_steps_rejected(self, small_world):
        with pytest.raises(ConfigurationError):
            run(small_world, -1)

    def test_particle_count_conserved(self, two_type_recipe):
        w = new_world(
            WorldConfig(
                seed=3,
                extent=(200.0, 200.0),
                swarm_class=SwarmClass.INFOSHARE,
                competition="majority",
            )
        )
        spawn(w, two_type_recipe, (100, 100), 50)
        for _ in range(200):
            step(w)
            assert w.n_particles == 50


class TestDimensionalNeutrality:
    def test_2d_embeds_exactly_in_3d(self):
        p = KineticParams(60, 2, 4, 0.4, 0.6, 8, 0.0, 0.5)
        r = Recipe(((40, p),))

        w2 = new_world(WorldConfig(seed=9, dimensionality=2, extent=(200.0, 200.0)))
        spawn(w2, r, (100, 100), 40)
        w3 = new_world(
            WorldConfig(seed=9, dimensionality=3, extent=(200.0, 200.0, 200.0))
        )
        spawn(w3, r, (100, 100, 100), 40)
        # same planar state: z = 0, zero z-velocity
        w3.positions = np.column_stack([w2.positions.copy(), np.zeros(40)])
        w3.velocities = np.column_stack([w2.velocities.copy(), np.zeros(40)])

        for _ in range(50):
            step(w2)
            step(w3)
        np.testing.assert_array_equal(w3.positions[:, :2], w2.positions)
        np.testing.assert_array_equal(w3.velocities[:, :2], w2.velocities)
        np.testing.assert_array_equal(w3.positions[:, 2], np.zeros(40))

    def test_3d_world_runs_and_conserves(self):
        p = KineticParams(40, 2, 4, 0.4, 0.6, 8, 0.1, 0.5)
        r = Recipe(((60, p),))
        w = new_world(WorldConfig(seed=13, dimensionality=3, extent=(150.0, 150.0, 150.0)))
        spawn(w, r, (75, 75, 75), 30)
        run(w, 100)
        assert w.n_particles == 60
        assert np.all(w.speeds() <= w.params[:, COL_V_MAX] + 1e-9)
        assert np.all((w.positions >= 0) & (w.positions <= 150.0))


class TestConfigValidation:
    def test_bad_dimensionality(self):
        with pytest.raises(ConfigurationError):
            WorldConfig(dimensionality=4)

    def test_bad_extent(self):
        with pytest.raises(ConfigurationError):
            WorldConfig(extent=(0.0, 100.0))

    def test_extent_axes_mismatch(self):
        with pytest.raises(ConfigurationError):
            WorldConfig(dimensionality=3, extent=(100.0, 100.0))

    def test_bad_boundary(self):
        with pytest.raises(ConfigurationError):
            WorldConfig(boundary="bouncy")

    def test_string_enums_accepted(self):
        cfg = WorldConfig(swarm_class="rediff", competition="majority")
        assert cfg.swarm_class is SwarmClass.REDIFFERENTIABLE
