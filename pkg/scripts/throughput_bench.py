#!/usr/bin/env python3
"""Throughput benchmark: grid index vs brute-force pair scan.

Builds a 10,000-particle heterogeneous world from moderate-radius flocking
recipes, measures steps/second with the grid index, then measures the
brute-force reference (same kernel, one-cell grid).

Example:
    python scripts/throughput_bench.py --particles 10000 --steps 100
"""

import argparse
import json
import time

from swarmchem.engine import WorldConfig, new_world, run, spawn, step
from swarmchem.morphogenesis import SwarmClass
from swarmchem.recipe import parse_recipe
from swarmchem.rng import make_rng

BENCH_RECIPES = [
    "500 * (30, 3, 6, 0.6, 0.5, 15, 0.05, 0.3)",
    "500 * (50, 5, 10, 0.3, 0.8, 8, 0.1, 0.2)",
    "500 * (20, 2, 4, 0.9, 0.2, 25, 0.05, 0.4)",
    "500 * (40, 4, 8, 0.1, 0.9, 12, 0.1, 0.3)",
]


def build_bench_world(n_particles: int, seed: int = 7):
    cfg = WorldConfig(seed=seed, extent=(2500.0, 2500.0), swarm_class=SwarmClass.HETEROGENEOUS)
    world = new_world(cfg)
    recipes = [parse_recipe(t) for t in BENCH_RECIPES]
    rng = make_rng(1)
    total = 0
    k = 0
    while total < n_particles:
        spawn(world, recipes[k % len(recipes)], rng.uniform(150, 2350, 2), 120.0)
        total += recipes[k % len(recipes)].total_count
        k += 1
    return world


def measure(world, n_steps: int, brute_force: bool) -> float:
    t0 = time.perf_counter()
    for _ in range(n_steps):
        step(world, brute_force=brute_force)
    return n_steps / (time.perf_counter() - t0)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--particles", type=int, default=10_000)
    parser.add_argument("--steps", type=int, default=100)
    parser.add_argument("--brute-steps", type=int, default=5)
    args = parser.parse_args()

    world = build_bench_world(args.particles)
    run(world, 10)  # warm-up (JIT compile + settle)
    grid_rate = measure(world, args.steps, brute_force=False)
    brute_rate = measure(world, args.brute_steps, brute_force=True)
    report = {
        "particles": world.n_particles,
        "grid_steps_per_second": round(grid_rate, 2),
        "brute_force_steps_per_second": round(brute_rate, 2),
        "speedup": round(grid_rate / brute_rate, 1),
    }
    print(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
