"""Crowd trajectory data model and kinematic derivation.

A crowd trajectory is N characters sharing one uniform time axis (T steps of
length dt starting at t0).  Each character carries static properties (radii),
individual properties (goal, comfort speed) and a per-step kinematic state.
Positions are the source of truth; velocities, speeds and headings are derived
by finite differences so that positions-only datasets are first-class input.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError

# Canonical internal sampling period (s).  All scoring pipelines resample to
# this grid so that reference statistics and evaluated trajectories agree on
# step-based quantities (flicker windows, angular velocity, ...).
CANONICAL_DT = 0.1

# Below this speed (m/s) a velocity has no usable direction; headings are
# carried forward instead of being read off atan2.
EPS_SPEED = 1e-3

DEFAULT_BODY_RADIUS = 0.3  # m, adult shoulder half-width
DEFAULT_PERSONAL_RADIUS = 0.5  # m

# Floor for comfort speeds inferred from data (invariant: comfort_speed > 0).
_MIN_COMFORT_SPEED = 1e-3


@dataclass
class AgentStatics:
    """Unchanging properties of one agent."""

    agent_id: int
    body_radius: float = DEFAULT_BODY_RADIUS
    personal_radius: float = DEFAULT_PERSONAL_RADIUS


@dataclass
class AgentIndividuals:
    """Per-agent properties that are constant along the trajectory."""

    goal_position: np.ndarray  # (2,), m
    comfort_speed: float  # m/s


@dataclass
class AgentState:
    """Kinematic state of one agent at one timestep."""

    position: np.ndarray  # (2,), m
    velocity: np.ndarray  # (2,), m/s
    heading: float  # rad
    speed: float  # m/s


@dataclass
class CharacterTrajectory:
    """One character's states over the crowd's time axis.

    Arrays are per-step and share the same length T; ``states`` materialises
    the row-per-step view when needed.
    """

    statics: AgentStatics
    individuals: AgentIndividuals
    positions: np.ndarray  # (T, 2)
    velocities: np.ndarray  # (T, 2)
    headings: np.ndarray  # (T,)
    speeds: np.ndarray  # (T,)

    @property
    def n_steps(self) -> int:
        return self.positions.shape[0]

    def state(self, t: int) -> AgentState:
        return AgentState(
            position=self.positions[t],
            velocity=self.velocities[t],
            heading=float(self.headings[t]),
            speed=float(self.speeds[t]),
        )

    @property
    def states(self) -> list[AgentState]:
        return [self.state(t) for t in range(self.n_steps)]


@dataclass
class CrowdTrajectory:
    """All character trajectories of a crowd over one shared time window."""

    characters: list[CharacterTrajectory]
    dt: float  # s
    t0: float = 0.0  # s

    @property
    def n_agents(self) -> int:
        return len(self.characters)

    @property
    def n_steps(self) -> int:
        return self.characters[0].n_steps if self.characters else 0

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_steps) * self.dt

    # Stacked (N, ...) views used by feature extraction.

    def positions(self) -> np.ndarray:
        return np.stack([c.positions for c in self.characters])

    def velocities(self) -> np.ndarray:
        return np.stack([c.velocities for c in self.characters])

    def speeds(self) -> np.ndarray:
        return np.stack([c.speeds for c in self.characters])

    def headings(self) -> np.ndarray:
        return np.stack([c.headings for c in self.characters])

    def goals(self) -> np.ndarray:
        return np.stack([c.individuals.goal_position for c in self.characters])

    def comfort_speeds(self) -> np.ndarray:
        return np.array([c.individuals.comfort_speed for c in self.characters])

    def body_radii(self) -> np.ndarray:
        return np.array([c.statics.body_radius for c in self.characters])

    def personal_radii(self) -> np.ndarray:
        return np.array([c.statics.personal_radius for c in self.characters])

    def window(self, start: int, stop: int) -> "CrowdTrajectory":
        """Restrict to timestep range [start, stop); kinematics kept as-is."""
        if not (0 <= start < stop <= self.n_steps) or stop - start < 2:
            raise ValueError(f"invalid window [{start}, {stop}) for T={self.n_steps}")
        chars = [
            replace(
                c,
                positions=c.positions[start:stop],
                velocities=c.velocities[start:stop],
                headings=c.headings[start:stop],
                speeds=c.speeds[start:stop],
            )
            for c in self.characters
        ]
        return CrowdTrajectory(chars, dt=self.dt, t0=self.t0 + start * self.dt)


def _as_position_arrays(positions) -> tuple[list[int], list[np.ndarray]]:
    """Accept {agent_id: (T,2)}, a sequence of (T,2), or an (N,T,2) array."""
    if isinstance(positions, dict):
        ids = list(positions.keys())
        arrays = [np.asarray(positions[i], dtype=float) for i in ids]
    else:
        arrays = [np.asarray(p, dtype=float) for p in positions]
        ids = list(range(len(arrays)))
    return ids, arrays


def _derive_arrays(pos: np.ndarray, dt: float, goal: np.ndarray):
    """Finite-difference velocities plus carried-forward headings for one agent."""
    T = pos.shape[0]
    vel = np.empty_like(pos)
    vel[:-1] = (pos[1:] - pos[:-1]) / dt  # forward difference
    vel[-1] = (pos[-1] - pos[-2]) / dt  # backward difference at the end
    speed = np.hypot(vel[:, 0], vel[:, 1])

    raw = np.arctan2(vel[:, 1], vel[:, 0])
    valid = speed > EPS_SPEED
    # Initial fallback: face the goal; 0 if already there.
    to_goal = goal - pos[0]
    init = float(np.arctan2(to_goal[1], to_goal[0])) if np.hypot(*to_goal) > EPS_SPEED else 0.0
    # Carry the last valid heading forward.
    last_valid = np.maximum.accumulate(np.where(valid, np.arange(T), -1))
    heading = np.where(last_valid >= 0, raw[np.maximum(last_valid, 0)], init)
    return vel, heading, speed


def derive_kinematics(
    positions,
    dt: float,
    *,
    t0: float = 0.0,
    statics: list[AgentStatics] | None = None,
    individuals: list[AgentIndividuals] | None = None,
) -> CrowdTrajectory:
    """Build a CrowdTrajectory from per-agent position sequences.

    ``positions`` may be a mapping agent_id -> (T, 2) points, a sequence of
    (T, 2) arrays (ids 0..N-1), or an (N, T, 2) array.  When ``individuals``
    is omitted the goal defaults to the final position and the comfort speed
    to the agent's median observed speed.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    ids, arrays = _as_position_arrays(positions)
    if not arrays:
        raise DataError("no agents in input")

    lengths = {a.shape[0] for a in arrays}
    if len(lengths) != 1:
        raise DataError(f"agents have differing step counts: {sorted(lengths)}")
    T = lengths.pop()
    if T < 2:
        raise DataError(f"need at least 2 timesteps per agent, got {T}")
    for a in arrays:
        if a.ndim != 2 or a.shape[1] != 2:
            raise DataError(f"positions must be (T, 2) points, got shape {a.shape}")

    characters = []
    for k, (agent_id, pos) in enumerate(zip(ids, arrays)):
        st = statics[k] if statics is not None else AgentStatics(agent_id=agent_id)
        if individuals is not None:
            ind = individuals[k]
        else:
            ind = None  # filled after speeds are known
        goal = ind.goal_position if ind is not None else pos[-1]
        vel, heading, speed = _derive_arrays(pos, dt, np.asarray(goal, dtype=float))
        if ind is None:
            comfort = max(float(np.median(speed)), _MIN_COMFORT_SPEED)
            ind = AgentIndividuals(goal_position=pos[-1].copy(), comfort_speed=comfort)
        characters.append(
            CharacterTrajectory(
                statics=st,
                individuals=ind,
                positions=pos,
                velocities=vel,
                headings=heading,
                speeds=speed,
            )
        )
    return CrowdTrajectory(characters, dt=dt, t0=t0)


def resample(crowd: CrowdTrajectory, dt_out: float) -> CrowdTrajectory:
    """Linearly interpolate positions onto the grid t0, t0+dt_out, ... and
    re-derive kinematics.  Statics and individuals are preserved."""
    if dt_out <= 0:
        raise ValueError(f"dt_out must be positive, got {dt_out}")
    T = crowd.n_steps
    span = (T - 1) * crowd.dt
    n_out = int(np.floor(span / dt_out + 1e-9)) + 1
    if n_out < 2:
        raise DataError(f"resampling to dt={dt_out} leaves fewer than 2 steps")
    t_old = np.arange(T) * crowd.dt
    t_new = np.arange(n_out) * dt_out

    new_positions = []
    for c in crowd.characters:
        x = np.interp(t_new, t_old, c.positions[:, 0])
        y = np.interp(t_new, t_old, c.positions[:, 1])
        new_positions.append(np.column_stack([x, y]))
    return derive_kinematics(
        new_positions,
        dt_out,
        t0=crowd.t0,
        statics=[c.statics for c in crowd.characters],
        individuals=[c.individuals for c in crowd.characters],
    )


def to_canonical(crowd: CrowdTrajectory) -> CrowdTrajectory:
    """Resample onto the canonical grid unless already on it."""
    if abs(crowd.dt - CANONICAL_DT) <= 1e-12:
        return crowd
    return resample(crowd, CANONICAL_DT)


@dataclass
class ValidationReport:
    """Outcome of validate(); empty violation list means all invariants hold."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(crowd: CrowdTrajectory) -> ValidationReport:
    """Check the data-model invariants and report every violation found."""
    report = ValidationReport()
    add = report.violations.append

    if crowd.n_agents < 1:
        add("crowd has no characters")
        return report
    if crowd.dt <= 0:
        add(f"dt must be positive, got {crowd.dt}")

    lengths = {c.n_steps for c in crowd.characters}
    if len(lengths) > 1:
        add(f"ragged state lists: step counts {sorted(lengths)}")
    if 0 in lengths:
        add("character with empty state list")

    seen: dict[int, int] = {}
    for c in crowd.characters:
        aid = c.statics.agent_id
        if aid in seen:
            add(f"duplicate agent_id {aid}")
        seen[aid] = aid

    for c in crowd.characters:
        aid = c.statics.agent_id
        if c.statics.body_radius <= 0:
            add(f"agent {aid}: body_radius must be positive, got {c.statics.body_radius}")
        if c.statics.personal_radius < c.statics.body_radius:
            add(
                f"agent {aid}: personal_radius {c.statics.personal_radius} "
                f"smaller than body_radius {c.statics.body_radius}"
            )
        if c.individuals.comfort_speed <= 0:
            add(f"agent {aid}: comfort_speed must be positive, got {c.individuals.comfort_speed}")
        if not np.all(np.isfinite(c.individuals.goal_position)):
            add(f"agent {aid}: non-finite goal position")

        bad = ~np.isfinite(c.positions).all(axis=1)
        for t in np.flatnonzero(bad):
            add(f"agent {aid}: non-finite position at timestep {t}")
        bad_v = ~np.isfinite(c.velocities).all(axis=1)
        for t in np.flatnonzero(bad_v):
            add(f"agent {aid}: non-finite velocity at timestep {t}")
        if c.positions.shape[0]:
            mismatch = np.abs(np.hypot(c.velocities[:, 0], c.velocities[:, 1]) - c.speeds) > 1e-6
            for t in np.flatnonzero(mismatch):
                add(f"agent {aid}: speed differs from |velocity| at timestep {t}")
    return report
