"""Shared builders for the test suite.

Crowd fixtures are built from position arrays through derive_kinematics so the
tests exercise the same ingestion path as CSV loading.
"""

import numpy as np

from crowdscore.trajectory import (
    AgentIndividuals,
    AgentStatics,
    CrowdTrajectory,
    derive_kinematics,
)

DT = 0.1


def crowd_from_positions(positions, dt=DT, statics=None, individuals=None):
    positions = np.asarray(positions, dtype=float)
    return derive_kinematics(positions, dt, statics=statics, individuals=individuals)


def straight_crowd(speed=1.4, steps=11, n_agents=1, spacing=100.0, dt=DT):
    """Parallel straight walkers along +x, far apart, exact goal arrival.

    Every feature of this crowd is constant over agents and time, which makes
    it the reference case for perfect-score checks.
    """
    t = np.arange(steps) * dt
    positions = np.zeros((n_agents, steps, 2))
    individuals = []
    for i in range(n_agents):
        positions[i, :, 0] = speed * t
        positions[i, :, 1] = i * spacing
        individuals.append(
            AgentIndividuals(
                goal_position=np.array([speed * t[-1], i * spacing]),
                comfort_speed=speed,
            )
        )
    return crowd_from_positions(positions, dt, individuals=individuals)


def linear_pair(p_a, v_a, p_b, v_b, steps=30, dt=DT, radius=0.3, personal=0.5):
    """Two agents moving at constant velocity from the given states."""
    t = np.arange(steps)[:, None] * dt
    pos = np.stack([np.asarray(p_a) + t * np.asarray(v_a),
                    np.asarray(p_b) + t * np.asarray(v_b)])
    statics = [AgentStatics(agent_id=i, body_radius=radius, personal_radius=personal)
               for i in range(2)]
    return crowd_from_positions(pos, dt, statics=statics)


def random_walk_crowd(seed, n_agents=4, steps=40, dt=DT, step_scale=0.12):
    """Smooth-ish random walk, used in property loops."""
    rng = np.random.default_rng(seed)
    start = rng.uniform(-5.0, 5.0, size=(n_agents, 1, 2))
    steps_xy = rng.normal(0.0, step_scale, size=(n_agents, steps - 1, 2))
    positions = np.concatenate([start, start + np.cumsum(steps_xy, axis=1)], axis=1)
    return crowd_from_positions(positions, dt)


def rigid_transform(crowd, angle, shift):
    """Rotate and translate a crowd, including goals."""
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    shift = np.asarray(shift, dtype=float)
    positions = crowd.positions() @ rot.T + shift
    individuals = [
        AgentIndividuals(
            goal_position=rot @ ch.individuals.goal_position + shift,
            comfort_speed=ch.individuals.comfort_speed,
        )
        for ch in crowd.characters
    ]
    statics = [ch.statics for ch in crowd.characters]
    return derive_kinematics(positions, crowd.dt, t0=crowd.t0,
                             statics=statics, individuals=individuals)
