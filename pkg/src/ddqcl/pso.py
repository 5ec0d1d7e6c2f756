"""Particle swarm optimization on a torus of angles.

The update is the textbook inertia/cognitive/social rule, except that
displacements towards the personal and global bests are measured along the
minor arc of the circle and positions are always stored as principal
values in ``[0, 2*pi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .ansatz import TWO_PI, principal

VELOCITY_INIT_RANGE = np.pi / 4


def angular_displacement(start, end):
    """Signed minor-arc length from ``start`` to ``end``, in ``(-pi, pi]``."""
    d = np.mod(np.asarray(end, dtype=float) - np.asarray(start, dtype=float), TWO_PI)
    d = np.where(d >= TWO_PI, 0.0, d)
    return np.where(d > np.pi, d - TWO_PI, d)


@dataclass(frozen=True)
class SwarmState:
    positions: np.ndarray          # (n_particles, dim)
    velocities: np.ndarray
    best_positions: np.ndarray
    best_costs: np.ndarray         # inf until a particle is first evaluated
    global_best_position: np.ndarray
    global_best_cost: float
    c1: float
    c2: float
    w: float
    rng_state: dict
    iteration: int = 0

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]


def pso_init(dimension: int, seed: int, c1: float = 1.0, c2: float = 1.0,
             w: float = 0.5, n_particles: int | None = None) -> SwarmState:
    """Random swarm of ``2 * dimension`` particles (unless overridden)."""
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    if n_particles is None:
        n_particles = 2 * dimension
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, TWO_PI, size=(n_particles, dimension))
    vel = rng.uniform(-VELOCITY_INIT_RANGE, VELOCITY_INIT_RANGE, size=(n_particles, dimension))
    return SwarmState(
        positions=principal(pos),
        velocities=vel,
        best_positions=pos.copy(),
        best_costs=np.full(n_particles, np.inf),
        global_best_position=pos[0].copy(),
        global_best_cost=np.inf,
        c1=c1, c2=c2, w=w,
        rng_state=rng.bit_generator.state,
    )


def pso_step(state: SwarmState, evaluate: Callable[[np.ndarray], float],
             limit: int | None = None) -> tuple[SwarmState, np.ndarray]:
    """Evaluate the swarm, update the bests, then move every particle.

    ``limit`` evaluates only the first ``limit`` particles (the rest keep
    their bests); the trainer uses it to spend an exact evaluation budget.
    Returns the new state and the costs of the evaluated particles.
    """
    n = state.n_particles if limit is None else min(limit, state.n_particles)
    costs = np.array([float(evaluate(state.positions[i])) for i in range(n)])

    best_pos = state.best_positions.copy()
    best_cost = state.best_costs.copy()
    improved = costs < best_cost[:n]
    best_cost[:n][improved] = costs[improved]
    best_pos[:n][improved] = state.positions[:n][improved]

    g_pos, g_cost = state.global_best_position, state.global_best_cost
    i_best = int(np.argmin(best_cost))
    if best_cost[i_best] < g_cost:
        g_pos, g_cost = best_pos[i_best].copy(), float(best_cost[i_best])

    rng = np.random.default_rng()
    rng.bit_generator.state = state.rng_state
    r1 = rng.uniform(size=state.positions.shape)
    r2 = rng.uniform(size=state.positions.shape)

    vel = (state.w * state.velocities
           + state.c1 * r1 * angular_displacement(state.positions, best_pos)
           + state.c2 * r2 * angular_displacement(state.positions, g_pos))
    pos = principal(state.positions + vel)

    new_state = replace(
        state,
        positions=pos,
        velocities=vel,
        best_positions=best_pos,
        best_costs=best_cost,
        global_best_position=g_pos,
        global_best_cost=g_cost,
        rng_state=rng.bit_generator.state,
        iteration=state.iteration + 1,
    )
    return new_state, costs
