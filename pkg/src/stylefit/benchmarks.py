"""Synthetic objectives for exercising the optimizer.

Four fixed benchmarks over unit-style boxes: a 2-D and a 6-D shifted
sphere, a 6-D quadratic whose center moves with a categorical mode
switch, and the Branin function rescaled onto the unit square. Each is
cheap, deterministic, and has a known (or tightly bounded) minimum, so
sampler comparisons need no image pipeline.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Callable

from .optimize import StudyConfig, run_study
from .params import ParamSpace, ParamSpec

SPHERE2_CENTER = (0.3, -0.45)
SPHERE6_CENTER = (0.3, -0.45, 0.1, -0.2, 0.05, 0.4)

# Per-mode center offsets for the categorical quadratic. Mode "b" is
# optimal; the others add a constant penalty through the shift.
MODE_SHIFT = {"a": 0.35, "b": 0.0, "c": -0.5}


@dataclass(frozen=True)
class Benchmark:
    name: str
    space: ParamSpace
    fn: Callable[[dict], float]
    true_min: float


def _box(names, low, high):
    return ParamSpace(tuple(ParamSpec(n, "continuous", low=low, high=high) for n in names))


def _sphere2(a: dict) -> float:
    return (a["x0"] - SPHERE2_CENTER[0]) ** 2 + (a["x1"] - SPHERE2_CENTER[1]) ** 2


def _sphere6(a: dict) -> float:
    return sum((a[f"x{i}"] - c) ** 2 for i, c in enumerate(SPHERE6_CENTER))


def _quadratic_categorical(a: dict) -> float:
    shift = MODE_SHIFT[a["mode"]]
    return sum((a[f"x{i}"] - SPHERE6_CENTER[i] - shift) ** 2 for i in range(6)) + 4.0 * shift**2


def _branin_unit(a: dict) -> float:
    # Classic Branin with its [-5, 10] x [0, 15] domain mapped to the unit square.
    x = 15.0 * a["u"] - 5.0
    y = 15.0 * a["v"]
    r = y - 5.1 / (4.0 * math.pi**2) * x**2 + 5.0 / math.pi * x - 6.0
    return r**2 + 10.0 * (1.0 - 1.0 / (8.0 * math.pi)) * math.cos(x) + 10.0


BRANIN_MIN = 0.39788735772973816


def _quadratic_space() -> ParamSpace:
    specs = tuple(ParamSpec(f"x{i}", "continuous", low=-1.0, high=1.0) for i in range(6))
    return ParamSpace(specs + (ParamSpec("mode", "categorical", choices=("a", "b", "c")),))


def all_benchmarks() -> tuple[Benchmark, ...]:
    return (
        Benchmark("sphere-2d", _box(("x0", "x1"), -1.0, 1.0), _sphere2, 0.0),
        Benchmark(
            "sphere-6d", _box(tuple(f"x{i}" for i in range(6)), -1.0, 1.0), _sphere6, 0.0
        ),
        Benchmark("quadratic-categorical", _quadratic_space(), _quadratic_categorical, 0.0),
        Benchmark("branin-unit", _box(("u", "v"), 0.0, 1.0), _branin_unit, BRANIN_MIN),
    )


def get_benchmark(name: str) -> Benchmark:
    for b in all_benchmarks():
        if b.name == name:
            return b
    raise KeyError(f"unknown benchmark {name!r}")


def run_benchmark(
    name: str, sampler: str, seeds, budget: int = 200
) -> dict:
    """Best objective per seed plus the median, for one sampler."""
    bench = get_benchmark(name)
    bests = []
    for seed in seeds:
        config = StudyConfig(seed=seed, budget=budget, sampler=sampler)
        result = run_study(bench.fn, bench.space, config)
        bests.append(result.best.objective)
    return {
        "benchmark": name,
        "sampler": sampler,
        "budget": budget,
        "seeds": list(seeds),
        "best_objectives": bests,
        "median_best": statistics.median(bests),
        "true_min": bench.true_min,
    }


def grid_min_sphere2(points_per_axis: int = 1000) -> float:
    """Exhaustive-grid minimum of sphere-2d; oracle gap for TPE quality checks."""
    import numpy as np

    axis = np.linspace(-1.0, 1.0, points_per_axis)
    dx2 = (axis - SPHERE2_CENTER[0]) ** 2
    dy2 = (axis - SPHERE2_CENTER[1]) ** 2
    return float(dx2.min() + dy2.min())
