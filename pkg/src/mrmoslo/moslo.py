"""Seven-spot ladybird swarm search for adaptive utilization thresholds.

The swarm moves candidate (cpu, ram, bw) triples through the unit cube.
Fitness is the weighted sum ``W1*cpu + W*ram + W*bw`` (lower is better) with
the cpu weight dominant.  Iterations alternate between an extensive phase,
where each ladybird steps towards a point mirrored away from the global best,
and an intensive phase, where it steps towards the global best itself.
Ladybirds that fail to improve their own best for ``stagnation_limit``
iterations are re-seeded in a neighbourhood of the global best.

Thresholds come from ranking every position the swarm evaluated together
with the raw history: the top-ranked cpu value below 1 becomes the upper
threshold and the bottom-ranked cpu value above 0 the lower one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .domain import UtilizationSample
from .regression import UTIL_CEILING


class NoValidThresholdError(ValueError):
    pass


@dataclass(frozen=True)
class MosloConfig:
    n_patches: int = 4
    ladybirds_per_patch: int = 5
    max_iterations: int = 20
    stagnation_limit: int = 5
    step_constant: float = 2.0
    v_max: float = 0.2
    eps1: float = 1e-3
    eps2: float = 1e-3
    neighborhood: float = 0.05
    w_cpu: float = 0.5
    w_other: float = 0.25
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_patches < 1 or self.ladybirds_per_patch < 1:
            raise ValueError("n_patches and ladybirds_per_patch must be >= 1")
        if self.population < 2:
            raise ValueError("population n_patches * ladybirds_per_patch must be >= 2")
        if not self.w_cpu > self.w_other > 0:
            raise ValueError("need w_cpu > w_other > 0")
        if not self.v_max > 0:
            raise ValueError("v_max must be positive")
        if self.max_iterations < 0 or self.stagnation_limit < 1:
            raise ValueError("max_iterations must be >= 0 and stagnation_limit >= 1")

    @property
    def population(self) -> int:
        return self.n_patches * self.ladybirds_per_patch


@dataclass(frozen=True)
class ThresholdPair:
    th_low: float
    th_upper: float

    def __post_init__(self):
        if not 0.0 < self.th_low <= self.th_upper < 1.0:
            raise ValueError(f"invalid thresholds ({self.th_low}, {self.th_upper})")


@dataclass
class Ladybird:
    position: np.ndarray
    velocity: np.ndarray
    sbest_position: np.ndarray
    sbest_fitness: float
    stagnation_counter: int
    patch: int


def fitness(position, config: MosloConfig) -> tuple[tuple[float, float, float], float]:
    """Objective triple and its weighted-sum scalar for one position."""
    cpu, ram, bw = (float(v) for v in position)
    triple = (config.w_cpu * cpu, config.w_other * ram, config.w_other * bw)
    return triple, triple[0] + triple[1] + triple[2]


def _fitness_rows(positions: np.ndarray, config: MosloConfig) -> np.ndarray:
    weights = np.array([config.w_cpu, config.w_other, config.w_other])
    return positions @ weights


def rank_utilizations(history: Sequence[UtilizationSample]) -> list[UtilizationSample]:
    """Descending by cpu, then ram, then bw; equal samples keep their input order."""
    if not history:
        raise ValueError("cannot rank an empty history")
    order = sorted(range(len(history)), key=lambda i: (-history[i].cpu, -history[i].ram, -history[i].bw, i))
    return [history[i] for i in order]


def clamp_velocity(velocity, v_max: float) -> np.ndarray:
    return np.clip(velocity, -v_max, v_max)


def clamp_position(position) -> np.ndarray:
    return np.clip(position, 0.0, UTIL_CEILING)


def reflect(position, low: float = 0.0, high: float = UTIL_CEILING) -> np.ndarray:
    """Mirror out-of-range coordinates back into [low, high]."""
    p = np.asarray(position, dtype=float)
    p = np.where(p > high, 2 * high - p, p)
    p = np.where(p < low, 2 * low - p, p)
    return np.clip(p, low, high)


def away_from(position, gbest) -> np.ndarray:
    """Target of an extensive move: the position mirrored through itself away from gbest."""
    p = np.asarray(position, dtype=float)
    return reflect(p + (p - np.asarray(gbest, dtype=float)))


def extensive_velocity(position, away, c: float, r1, eps1: float, v_max: float) -> np.ndarray:
    return clamp_velocity(c * np.asarray(r1) * (np.asarray(away) - np.asarray(position)) + eps1, v_max)


def intensive_velocity(position, toward, c: float, r2, eps2: float, v_max: float) -> np.ndarray:
    return clamp_velocity(c * np.asarray(r2) * (np.asarray(toward) - np.asarray(position)) + eps2, v_max)


def respawn_position(gbest, phi, omega: float) -> np.ndarray:
    return clamp_position(np.asarray(gbest, dtype=float) + np.asarray(phi) * omega)


@dataclass
class Swarm:
    """Population state kept as arrays; ``ladybirds`` gives the per-agent view."""

    positions: np.ndarray
    velocities: np.ndarray
    sbest_positions: np.ndarray
    sbest_fitness: np.ndarray
    stagnation: np.ndarray
    patch_of: np.ndarray
    lbest_positions: np.ndarray
    lbest_fitness: np.ndarray
    gbest_position: np.ndarray
    gbest_fitness: float
    iteration: int = 0
    visited: list[np.ndarray] = field(default_factory=list)
    gbest_trace: list[float] = field(default_factory=list)
    max_speed_trace: list[float] = field(default_factory=list)

    @property
    def ladybirds(self) -> list[Ladybird]:
        return [
            Ladybird(
                self.positions[i].copy(),
                self.velocities[i].copy(),
                self.sbest_positions[i].copy(),
                float(self.sbest_fitness[i]),
                int(self.stagnation[i]),
                int(self.patch_of[i]),
            )
            for i in range(len(self.positions))
        ]


def init_swarm(positions: np.ndarray, config: MosloConfig) -> Swarm:
    positions = clamp_position(np.asarray(positions, dtype=float).reshape(-1, 3))
    n = len(positions)
    if n == 0:
        raise ValueError("swarm needs at least one ladybird")
    f = _fitness_rows(positions, config)
    patch_of = np.arange(n) // config.ladybirds_per_patch
    n_patches = int(patch_of.max()) + 1
    lbest_pos = np.empty((n_patches, 3))
    lbest_fit = np.empty(n_patches)
    for p in range(n_patches):
        members = np.flatnonzero(patch_of == p)
        best = members[np.argmin(f[members])]
        lbest_pos[p], lbest_fit[p] = positions[best], f[best]
    g = int(np.argmin(f))
    return Swarm(
        positions=positions.copy(),
        velocities=np.zeros_like(positions),
        sbest_positions=positions.copy(),
        sbest_fitness=f.copy(),
        stagnation=np.zeros(n, dtype=int),
        patch_of=patch_of,
        lbest_positions=lbest_pos,
        lbest_fitness=lbest_fit,
        gbest_position=positions[g].copy(),
        gbest_fitness=float(f[g]),
        visited=[],
        gbest_trace=[float(f[g])],
        max_speed_trace=[0.0],
    )


def step_swarm(swarm: Swarm, config: MosloConfig, rng: np.random.Generator) -> Swarm:
    """Advance the swarm one iteration in place and return it.

    Even iterations use the extensive update, odd ones the intensive update.
    Stagnant ladybirds are re-seeded around gbest instead of moving.
    """
    n = len(swarm.positions)
    r = rng.random((n, 3))
    phi = rng.uniform(-1.0, 1.0, (n, 3))
    p = swarm.positions
    gbest = swarm.gbest_position

    if swarm.iteration % 2 == 0:
        velocity = extensive_velocity(p, away_from(p, gbest), config.step_constant, r, config.eps1, config.v_max)
    else:
        velocity = intensive_velocity(p, gbest, config.step_constant, r, config.eps2, config.v_max)
    moved = clamp_position(p + velocity)

    stagnant = swarm.stagnation >= config.stagnation_limit
    if stagnant.any():
        moved[stagnant] = respawn_position(gbest, phi[stagnant], config.neighborhood)
        velocity[stagnant] = 0.0

    f = _fitness_rows(moved, config)
    improved = f < swarm.sbest_fitness
    swarm.sbest_positions[improved] = moved[improved]
    swarm.sbest_fitness[improved] = f[improved]
    swarm.stagnation = np.where(improved | stagnant, 0, swarm.stagnation + 1)

    for i in np.flatnonzero(improved):
        patch = swarm.patch_of[i]
        if f[i] < swarm.lbest_fitness[patch]:
            swarm.lbest_fitness[patch] = f[i]
            swarm.lbest_positions[patch] = moved[i]
    best = int(np.argmin(f))
    if f[best] < swarm.gbest_fitness:
        swarm.gbest_fitness = float(f[best])
        swarm.gbest_position = moved[best].copy()

    swarm.positions = moved
    swarm.velocities = velocity
    swarm.iteration += 1
    swarm.visited.append(moved.copy())
    swarm.gbest_trace.append(swarm.gbest_fitness)
    swarm.max_speed_trace.append(float(np.abs(velocity).max()))
    return swarm


@dataclass
class MosloResult:
    thresholds: ThresholdPair
    candidates: list[UtilizationSample]
    swarm: Swarm


def thresholds_from_ranking(ranked: Sequence[UtilizationSample]) -> ThresholdPair:
    """Top-ranked cpu below 1 is the upper threshold, bottom-ranked cpu above 0 the lower.

    A swarm coordinate pinned at the clamp ceiling stands for full utilization
    and does not qualify as an upper threshold.
    """
    upper = next((s.cpu for s in ranked if s.cpu < UTIL_CEILING), None)
    low = next((s.cpu for s in reversed(ranked) if s.cpu > 0.0), None)
    if upper is None or low is None or not 0.0 < low <= upper < UTIL_CEILING:
        raise NoValidThresholdError("history has no cpu utilization strictly between 0 and 1")
    return ThresholdPair(low, upper)


def run_moslo(
    history: Sequence[UtilizationSample],
    config: MosloConfig = MosloConfig(),
    rng: np.random.Generator | None = None,
) -> MosloResult:
    if not history:
        raise NoValidThresholdError("empty history")
    if not any(0.0 < s.cpu < 1.0 for s in history):
        raise NoValidThresholdError("history has no cpu utilization strictly between 0 and 1")
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    raw = np.array([s.as_tuple() for s in history], dtype=float)
    seeds = raw[rng.integers(0, len(raw), size=config.population)]
    swarm = init_swarm(seeds, config)
    for _ in range(config.max_iterations):
        step_swarm(swarm, config, rng)

    candidates = list(history)
    for block in swarm.visited:
        candidates.extend(UtilizationSample(*map(float, row)) for row in block)
    ranked = rank_utilizations(candidates)
    return MosloResult(thresholds_from_ranking(ranked), candidates, swarm)


def select_thresholds(
    history: Sequence[UtilizationSample],
    config: MosloConfig = MosloConfig(),
    rng: np.random.Generator | None = None,
) -> ThresholdPair:
    return run_moslo(history, config, rng).thresholds
