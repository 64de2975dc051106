"""Reduced parameter spaces and randomized one-at-a-time designs.

Grid points are stored as integer level indices ``m`` (one per parameter,
``0 <= m < p``); the reduced coordinate ``m / (p - 1)`` is produced on
demand. Equality and hashing of points is therefore exact, which the
evaluation cache relies on.

The step ``delta = p / (2 (p - 1))`` is exactly ``p / 2`` grid cells, so a
step never leaves the grid and the reflection rule (up from below 0.5, down
from above) keeps every stepped value inside ``[0, 1]``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .exceptions import InvalidDesignError, InvalidGridError, RangeError

RNG_ALGORITHM = "numpy.random.Generator/PCG64"
PLAN_FORMAT = "eescreen-plan"
PLAN_VERSION = 1

FIRST_ORDER = "first_order"
SECOND_ORDER = "second_order"
MODES = (FIRST_ORDER, SECOND_ORDER)


def _check_levels(levels) -> int:
    if isinstance(levels, bool) or int(levels) != levels:
        raise InvalidGridError(f"levels must be an integer, got {levels!r}")
    levels = int(levels)
    if levels < 2:
        raise InvalidGridError(f"levels must be >= 2, got {levels}")
    if levels > 2 and levels % 2:
        raise InvalidGridError(
            f"levels must be even when > 2 (got {levels}); odd grids break equiprobability"
        )
    return levels


@dataclass(frozen=True)
class ParameterSpec:
    """One input variable: physical interval and grid level count."""

    name: str
    x_min: float
    x_max: float
    levels: int = 10

    def __post_init__(self):
        if not self.name:
            raise ValueError("parameter name must be non-empty")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise RangeError(f"{self.name}: bounds must be finite")
        if not self.x_min < self.x_max:
            raise RangeError(
                f"{self.name}: x_min ({self.x_min}) must be < x_max ({self.x_max})"
            )
        object.__setattr__(self, "levels", _check_levels(self.levels))

    @property
    def delta(self) -> float:
        return delta_for(self.levels)

    @property
    def step_levels(self) -> int:
        """Step size in grid cells (``p / 2``)."""
        return self.levels // 2 if self.levels > 2 else 1

    def level_value(self, m: int) -> float:
        """Reduced coordinate of grid level ``m``."""
        return m / (self.levels - 1)


def delta_for(levels: int) -> float:
    levels = _check_levels(levels)
    return levels / (2 * (levels - 1))


def reduce(spec: ParameterSpec, x: float) -> float:
    """Map a physical value into the reduced unit interval."""
    if not spec.x_min <= x <= spec.x_max:
        raise RangeError(f"{spec.name}: {x} outside [{spec.x_min}, {spec.x_max}]")
    return (x - spec.x_min) / (spec.x_max - spec.x_min)


def restore(spec: ParameterSpec, x_reduced: float) -> float:
    """Inverse of :func:`reduce`."""
    if not 0.0 <= x_reduced <= 1.0:
        raise RangeError(f"{spec.name}: reduced value {x_reduced} outside [0, 1]")
    return spec.x_min + x_reduced * (spec.x_max - spec.x_min)


def step_sign(coord_value: float) -> int:
    """Direction of the reflection-rule step from a reduced coordinate."""
    if coord_value < 0.5:
        return 1
    if coord_value > 0.5:
        return -1
    raise AssertionError("coordinate 0.5 cannot occur on an even grid")


def _level_sign(m: int, levels: int) -> int:
    # integer form of step_sign: m/(p-1) < 0.5  <=>  2m < p-1
    twice = 2 * m
    if twice < levels - 1:
        return 1
    if twice > levels - 1:
        return -1
    raise AssertionError("coordinate 0.5 cannot occur on an even grid")


@dataclass(frozen=True)
class GridPoint:
    """A point of the discrete grid, held as level indices."""

    index: tuple[int, ...]
    levels: tuple[int, ...]

    def __post_init__(self):
        if len(self.index) != len(self.levels):
            raise ValueError("index and levels must have equal length")
        for m, p in zip(self.index, self.levels):
            if not 0 <= m < p:
                raise RangeError(f"level index {m} outside grid of {p} levels")

    @property
    def coords(self) -> tuple[float, ...]:
        return tuple(m / (p - 1) for m, p in zip(self.index, self.levels))

    def stepped(self, i: int, sign: int, step: int) -> "GridPoint":
        idx = list(self.index)
        idx[i] += sign * step
        return GridPoint(tuple(idx), self.levels)


@dataclass(frozen=True)
class Trajectory:
    """``k + 1`` grid points, each differing from the previous in one coordinate.

    ``order[s]`` is the parameter changed at step ``s``; ``signs[i]`` is the
    direction of the step taken by parameter ``i``.
    """

    points: tuple[GridPoint, ...]
    order: tuple[int, ...]
    signs: tuple[int, ...]
    point_ids: tuple[int, ...] = ()


@dataclass(frozen=True)
class PairBlock:
    """Base point with every single step and every pairwise double step."""

    base: GridPoint
    single_steps: dict
    double_steps: dict
    signs: tuple[int, ...]
    base_id: int = -1
    single_ids: dict = field(default_factory=dict)
    double_ids: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DesignPlan:
    parameters: tuple[ParameterSpec, ...]
    mode: str
    replicates: int
    seed: int
    trajectories: tuple[Trajectory, ...] = ()
    blocks: tuple[PairBlock, ...] = ()
    point_index: tuple[GridPoint, ...] = ()
    config_hash: str = ""

    @property
    def k(self) -> int:
        return len(self.parameters)

    @property
    def n_evaluations(self) -> int:
        """Model evaluations the design calls for before deduplication."""
        k, r = self.k, self.replicates
        if self.mode == FIRST_ORDER:
            return r * (k + 1)
        return r * (1 + k + k * (k - 1) // 2)

    @property
    def n_distinct(self) -> int:
        return len(self.point_index)

    def point_id(self, point: GridPoint) -> int:
        return self._ids[point.index]

    @property
    def _ids(self):
        cached = self.__dict__.get("_id_cache")
        if cached is None:
            cached = {p.index: n for n, p in enumerate(self.point_index)}
            object.__setattr__(self, "_id_cache", cached)
        return cached

    def physical_values(self, point: GridPoint) -> list[float]:
        return [restore(spec, c) for spec, c in zip(self.parameters, point.coords)]

    def physical_matrix(self) -> np.ndarray:
        """Physical input values of every distinct point, rows ordered by id."""
        return np.array(
            [self.physical_values(p) for p in self.point_index], dtype=float
        ).reshape(len(self.point_index), self.k)

    def to_dict(self) -> dict:
        doc = {
            "format": PLAN_FORMAT,
            "version": PLAN_VERSION,
            "config_hash": self.config_hash,
            "rng": RNG_ALGORITHM,
            "seed": self.seed,
            "mode": self.mode,
            "replicates": self.replicates,
            "parameters": [
                {"name": p.name, "min": p.x_min, "max": p.x_max, "levels": p.levels}
                for p in self.parameters
            ],
            "n_evaluations": self.n_evaluations,
            "points": [list(p.index) for p in self.point_index],
        }
        if self.mode == FIRST_ORDER:
            doc["trajectories"] = [
                {
                    "order": list(t.order),
                    "signs": list(t.signs),
                    "levels": [list(p.index) for p in t.points],
                    "point_ids": list(t.point_ids),
                }
                for t in self.trajectories
            ]
        else:
            doc["blocks"] = [
                {
                    "signs": list(b.signs),
                    "base": list(b.base.index),
                    "base_id": b.base_id,
                    "single_ids": [b.single_ids[i] for i in range(self.k)],
                    "double_ids": [
                        [i, j, b.double_ids[(i, j)]]
                        for i, j in combinations(range(self.k), 2)
                    ],
                }
                for b in self.blocks
            ]
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_dict(cls, doc: dict) -> "DesignPlan":
        if doc.get("format") != PLAN_FORMAT:
            raise InvalidDesignError("not a plan document")
        if doc.get("rng") != RNG_ALGORITHM:
            raise InvalidDesignError(f"unsupported rng {doc.get('rng')!r}")
        params = tuple(
            ParameterSpec(p["name"], p["min"], p["max"], p["levels"])
            for p in doc["parameters"]
        )
        # regenerate and compare: a plan is a pure function of its inputs
        plan = _SAMPLERS[doc["mode"]](params, doc["replicates"], doc["seed"])
        plan = _with_hash(plan, doc.get("config_hash", ""))
        if plan.to_dict() != doc:
            raise InvalidDesignError("plan file does not match its regenerated design")
        return plan

    @classmethod
    def load(cls, path) -> "DesignPlan":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def _with_hash(plan: DesignPlan, config_hash: str) -> DesignPlan:
    return DesignPlan(
        plan.parameters, plan.mode, plan.replicates, plan.seed,
        plan.trajectories, plan.blocks, plan.point_index, config_hash,
    )


def _validate(parameters, r, seed, min_k):
    parameters = tuple(parameters)
    if len(parameters) < min_k:
        raise InvalidDesignError(f"design needs at least {min_k} parameter(s), got {len(parameters)}")
    names = [p.name for p in parameters]
    if len(set(names)) != len(names):
        raise InvalidDesignError("parameter names must be unique")
    if isinstance(r, bool) or int(r) != r or r < 1:
        raise InvalidDesignError(f"replicates must be an integer >= 1, got {r!r}")
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed < 2**64:
        raise InvalidDesignError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return parameters, int(r), int(seed)


def _random_start(rng: np.random.Generator, parameters) -> tuple[int, ...]:
    highs = np.array([p.levels for p in parameters], dtype=np.int64)
    return tuple(int(m) for m in rng.integers(0, highs))


class _Index:
    def __init__(self):
        self.points: list[GridPoint] = []
        self.ids: dict = {}

    def add(self, point: GridPoint) -> int:
        pid = self.ids.get(point.index)
        if pid is None:
            pid = self.ids[point.index] = len(self.points)
            self.points.append(point)
        return pid


def sample_first_order(parameters: Sequence[ParameterSpec], r: int, seed: int) -> DesignPlan:
    """Draw ``r`` random trajectories.

    Each trajectory starts from a uniformly drawn grid point and changes the
    coordinates in a uniformly random order, each by one reflection-rule step.
    """
    parameters, r, seed = _validate(parameters, r, seed, 1)
    rng = np.random.Generator(np.random.PCG64(seed))
    levels = tuple(p.levels for p in parameters)
    index = _Index()
    trajectories = []
    for _ in range(r):
        start = GridPoint(_random_start(rng, parameters), levels)
        order = tuple(int(i) for i in rng.permutation(len(parameters)))
        signs = tuple(_level_sign(m, p) for m, p in zip(start.index, levels))
        points = [start]
        for i in order:
            points.append(points[-1].stepped(i, signs[i], parameters[i].step_levels))
        ids = tuple(index.add(p) for p in points)
        trajectories.append(Trajectory(tuple(points), order, signs, ids))
    return DesignPlan(
        parameters, FIRST_ORDER, r, seed,
        trajectories=tuple(trajectories), point_index=tuple(index.points),
    )


def sample_second_order(parameters: Sequence[ParameterSpec], r: int, seed: int) -> DesignPlan:
    """Draw ``r`` pair blocks (base, ``k`` single steps, ``k(k-1)/2`` double steps)."""
    parameters, r, seed = _validate(parameters, r, seed, 2)
    rng = np.random.Generator(np.random.PCG64(seed))
    levels = tuple(p.levels for p in parameters)
    k = len(parameters)
    index = _Index()
    blocks = []
    for _ in range(r):
        base = GridPoint(_random_start(rng, parameters), levels)
        signs = tuple(_level_sign(m, p) for m, p in zip(base.index, levels))
        singles = {i: base.stepped(i, signs[i], parameters[i].step_levels) for i in range(k)}
        doubles = {
            (i, j): singles[i].stepped(j, signs[j], parameters[j].step_levels)
            for i, j in combinations(range(k), 2)
        }
        base_id = index.add(base)
        single_ids = {i: index.add(p) for i, p in singles.items()}
        double_ids = {ij: index.add(p) for ij, p in doubles.items()}
        blocks.append(PairBlock(base, singles, doubles, signs, base_id, single_ids, double_ids))
    return DesignPlan(
        parameters, SECOND_ORDER, r, seed,
        blocks=tuple(blocks), point_index=tuple(index.points),
    )


_SAMPLERS = {FIRST_ORDER: sample_first_order, SECOND_ORDER: sample_second_order}


def make_plan(parameters, mode: str, r: int, seed: int, config_hash: str = "") -> DesignPlan:
    if mode not in _SAMPLERS:
        raise InvalidDesignError(f"mode must be one of {MODES}, got {mode!r}")
    return _with_hash(_SAMPLERS[mode](parameters, r, seed), config_hash)
