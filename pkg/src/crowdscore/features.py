"""Trajectory feature extraction.

Twenty-one features are measured on a crowd trajectory, identified by
three-letter codes.  Seventeen produce one sample per agent per timestep,
two (GLR, LEN) one sample per agent, and two (FDG, VAR) one sample per
timestep.  Pairwise features aggregate over neighbours within an interaction
horizon so that every feature emits a fixed-size sample set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError
from .geometry import TTC_HORIZON, closest_approach_arrays, time_to_collision_arrays
from .trajectory import EPS_SPEED, CrowdTrajectory

# Canonical listing order; every per-feature loop and every serialized
# breakdown follows it so reductions are reproducible.
FEATURE_CODES = (
    "AWS",  # average walking speed
    "DGD",  # difference to goal direction
    "INE",  # inertia (acceleration magnitude)
    "FDR",  # flickering in direction
    "FSP",  # flickering in speed
    "GLR",  # goal reaching
    "DCS",  # difference to comfort speed
    "AVL",  # angular velocity
    "LEN",  # trajectory length ratio
    "EDN",  # environment-based density (nearest-neighbour ratio)
    "COL",  # collisions
    "LDN",  # local density
    "DTA",  # distance to other agents
    "TTC",  # time to collision
    "IST",  # interaction strength
    "TCA",  # time to closest approach
    "OVP",  # personal space overlap
    "FDG",  # fundamental diagram deviation
    "IAN",  # interaction anticipation
    "DCA",  # distance at closest approach
    "VAR",  # speed variety across the crowd
)

PER_AGENT_CODES = ("GLR", "LEN")
PER_TIME_CODES = ("FDG", "VAR")

GRANULARITY = {
    code: (
        "per-agent"
        if code in PER_AGENT_CODES
        else "per-time"
        if code in PER_TIME_CODES
        else "per-agent-time"
    )
    for code in FEATURE_CODES
}


@dataclass
class FeatureParams:
    """Tunable constants of the feature definitions."""

    interaction_horizon: float = 30.0  # m, neighbours beyond this are ignored
    ttc_horizon: float = TTC_HORIZON  # s
    ist_tau: float = 2.0  # s, decay constant of interaction strength
    flicker_window: int = 10  # steps (1 s at canonical dt)
    flicker_heading_threshold: float = 0.15  # rad per step
    flicker_speed_threshold: float = 0.1  # m/s per step
    local_density_radius: float = 2.0  # m
    area_margin: float = 1.0  # m, inflation of the crowd extent for EDN
    maneuver_turn_rate: float = 0.3  # rad/s, avoidance-manoeuvre onset
    maneuver_accel: float = 0.5  # m/s^2
    fd_curve: "FundamentalDiagramCurve | None" = None
    fd_bin_width: float = 0.5  # persons/m^2, used when fitting a curve


@dataclass
class FeatureSamples:
    """The value set of one feature.

    ``values`` is (N, T) for per-agent-time codes, (N,) for per-agent codes
    and (T,) for per-time codes.  ``flat()`` is agent-major.
    """

    code: str
    values: np.ndarray

    @property
    def granularity(self) -> str:
        return GRANULARITY[self.code]

    def flat(self) -> np.ndarray:
        return np.ravel(self.values)


@dataclass
class FundamentalDiagramCurve:
    """Piecewise-constant expected walking speed as a function of density.

    Stored as occupied bin centers with their mean speeds; queries snap to
    the nearest center (ties towards the denser bin), which also answers
    empty-bin queries with the nearest occupied bin.
    """

    densities: np.ndarray  # sorted bin centers, persons/m^2
    speeds: np.ndarray  # m/s

    def query(self, density) -> np.ndarray:
        d = np.asarray(density, dtype=float)
        pos = np.searchsorted(self.densities, d)
        lo = np.clip(pos - 1, 0, len(self.densities) - 1)
        hi = np.clip(pos, 0, len(self.densities) - 1)
        pick = np.where(np.abs(self.densities[hi] - d) <= np.abs(d - self.densities[lo]), hi, lo)
        return self.speeds[pick]

    def serialize(self) -> str:
        return ",".join(
            f"{d!r}:{v!r}" for d, v in zip(map(float, self.densities), map(float, self.speeds))
        )

    @classmethod
    def deserialize(cls, text: str) -> "FundamentalDiagramCurve":
        pairs = []
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            try:
                d, v = item.split(":")
                pairs.append((float(d), float(v)))
            except ValueError:
                raise DataError(f"bad fundamental-diagram entry {item!r}") from None
        if not pairs:
            raise DataError("empty fundamental-diagram curve")
        pairs.sort()
        return cls(
            densities=np.array([p[0] for p in pairs]),
            speeds=np.array([p[1] for p in pairs]),
        )


def fundamental_diagram_curve(reference, bin_width: float = 0.5) -> FundamentalDiagramCurve:
    """Fit the piecewise-constant curve from (density, speed) pairs."""
    pairs = np.asarray(list(reference), dtype=float)
    if pairs.size == 0:
        raise ValueError("reference list of (density, speed) pairs is empty")
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    bins = np.floor(pairs[:, 0] / bin_width).astype(int)
    centers = []
    means = []
    for b in np.unique(bins):
        centers.append((b + 0.5) * bin_width)
        means.append(float(np.mean(pairs[bins == b, 1])))
    return FundamentalDiagramCurve(densities=np.array(centers), speeds=np.array(means))


def _wrap_angle(a: np.ndarray) -> np.ndarray:
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def _rolling_fraction(flags: np.ndarray, window: int) -> np.ndarray:
    """Count of set flags over the trailing window, divided by the window."""
    cs = np.cumsum(flags, axis=1, dtype=float)
    out = cs.copy()
    out[:, window:] = cs[:, window:] - cs[:, :-window]
    return out / window


def _alternation_flags(delta: np.ndarray, threshold: float) -> np.ndarray:
    """Sign alternations of consecutive per-step changes, both above threshold."""
    big = np.abs(delta) > threshold
    flip = np.sign(delta[:, 2:]) * np.sign(delta[:, 1:-1]) < 0
    flags = np.zeros(delta.shape, dtype=bool)
    flags[:, 2:] = flip & big[:, 2:] & big[:, 1:-1]
    return flags


def _hull_area_perimeter(points: np.ndarray) -> tuple[float, float]:
    """Convex hull area and perimeter; degenerate sets fall back to segments."""
    pts = np.unique(points, axis=0)
    n = pts.shape[0]
    if n == 1:
        return 0.0, 0.0
    if n == 2:
        return 0.0, 2.0 * float(np.linalg.norm(pts[1] - pts[0]))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if hull.shape[0] < 3:  # collinear
        return 0.0, 2.0 * float(np.linalg.norm(pts[-1] - pts[0]))
    shifted = np.roll(hull, -1, axis=0)
    area = 0.5 * abs(float(np.sum(hull[:, 0] * shifted[:, 1] - shifted[:, 0] * hull[:, 1])))
    perimeter = float(np.sum(np.linalg.norm(shifted - hull, axis=1)))
    return area, perimeter


def _inflated_area(points: np.ndarray, margin: float) -> float:
    # Minkowski sum of the hull with a disc of the margin radius.
    area, perimeter = _hull_area_perimeter(points)
    return area + perimeter * margin + math.pi * margin * margin


def _anticipation(
    ttc: np.ndarray,
    maneuver: np.ndarray,
    contact: np.ndarray,
    cap: float,
) -> np.ndarray:
    """Per (agent, step) anticipation values.

    When a predicted collision first appears for an agent, the sample at that
    step is the remaining time-to-collision at the moment the agent starts an
    avoidance manoeuvre; 0 when it never reacts before contact or clearance.
    """
    N, T = ttc.shape
    out = np.zeros((N, T))
    below = ttc < cap
    for n in range(N):
        for t0 in range(T):
            if not below[n, t0] or (t0 > 0 and below[n, t0 - 1]):
                continue
            end = t0
            while end < T and below[n, end] and not contact[n, end]:
                end += 1
            for s in range(t0, end):
                if maneuver[n, s]:
                    out[n, t0] = ttc[n, s]
                    break
    return out


def extract(crowd: CrowdTrajectory, params: FeatureParams | None = None) -> dict[str, FeatureSamples]:
    """Measure all 21 feature value sets on one crowd trajectory.

    Pairwise features only consider neighbours within the interaction
    horizon; a single-agent crowd emits neutral samples for them.  When no
    fundamental-diagram curve is supplied, FDG is measured against a curve
    fitted from this crowd's own density/speed pairs.
    """
    p = params if params is not None else FeatureParams()
    N, T = crowd.n_agents, crowd.n_steps
    if T < 2:
        raise DataError(f"need at least 2 timesteps to extract features, got {T}")
    dt = crowd.dt

    P = crowd.positions()  # (N, T, 2)
    V = crowd.velocities()
    S = crowd.speeds()
    H = crowd.headings()
    goals = crowd.goals()
    comfort = crowd.comfort_speeds()
    rb = crowd.body_radii()
    rp = crowd.personal_radii()

    # --- individual, per agent and step ---
    aws = S.copy()
    dcs = np.abs(S - comfort[:, None])

    to_goal = goals[:, None, :] - P
    goal_dist = np.linalg.norm(to_goal, axis=2)
    dot = np.sum(V * to_goal, axis=2)
    crs = V[:, :, 0] * to_goal[:, :, 1] - V[:, :, 1] * to_goal[:, :, 0]
    dgd = np.where((S > EPS_SPEED) & (goal_dist > EPS_SPEED), np.abs(np.arctan2(crs, dot)), 0.0)

    dhead = np.zeros((N, T))
    dhead[:, 1:] = _wrap_angle(H[:, 1:] - H[:, :-1])
    avl = np.abs(dhead) / dt

    accel = np.zeros((N, T))
    accel[:, 1:] = np.linalg.norm(V[:, 1:] - V[:, :-1], axis=2) / dt
    ine = accel

    dspeed = np.zeros((N, T))
    dspeed[:, 1:] = S[:, 1:] - S[:, :-1]
    fdr = _rolling_fraction(_alternation_flags(dhead, p.flicker_heading_threshold), p.flicker_window)
    fsp = _rolling_fraction(_alternation_flags(dspeed, p.flicker_speed_threshold), p.flicker_window)

    # --- per agent ---
    d_init = goal_dist[:, 0]
    d_final = goal_dist[:, -1]
    glr = np.where(d_init > EPS_SPEED, np.maximum(0.0, 1.0 - d_final / np.maximum(d_init, EPS_SPEED)), 1.0)
    path_len = np.sum(np.linalg.norm(P[:, 1:] - P[:, :-1], axis=2), axis=1)
    straight = np.linalg.norm(goals - P[:, 0, :], axis=1)
    length_ratio = path_len / np.maximum(straight, 1e-6)

    # --- pairwise, per agent and step ---
    cap = p.ttc_horizon
    if N > 1:
        PT = P.transpose(1, 0, 2)  # (T, N, 2)
        VT = V.transpose(1, 0, 2)
        dp = PT[:, None, :, :] - PT[:, :, None, :]  # [t, i, j] = p_j - p_i
        dv = VT[:, None, :, :] - VT[:, :, None, :]
        dist = np.linalg.norm(dp, axis=3)
        eye = np.eye(N, dtype=bool)
        dist[:, eye] = np.inf

        nn = dist.min(axis=2)  # (T, N)
        dta = np.minimum(nn, p.interaction_horizon).T
        neighbor = dist <= p.interaction_horizon

        ldn = (dist <= p.local_density_radius).sum(axis=2).T / (
            math.pi * p.local_density_radius**2
        )

        body_sum = rb[:, None] + rb[None, :]
        col = (dist < body_sum[None, :, :]).any(axis=2).T.astype(float)
        contact = col > 0.0

        personal_sum = rp[:, None] + rp[None, :]
        ovp = np.maximum(0.0, personal_sum[None, :, :] - dist).max(axis=2).T

        ttc_pair = time_to_collision_arrays(dp, dv, body_sum[None, :, :], cap)
        ttc_pair = np.where(neighbor, ttc_pair, cap)
        ttc = ttc_pair.min(axis=2).T

        tca_pair, dca_pair = closest_approach_arrays(dp, dv)
        cand = neighbor & (tca_pair < cap)
        dca_masked = np.where(cand, dca_pair, np.inf)
        j_star = dca_masked.argmin(axis=2)
        has = cand.any(axis=2)
        tca_sel = np.take_along_axis(tca_pair, j_star[:, :, None], axis=2)[:, :, 0]
        dca_sel = np.take_along_axis(dca_pair, j_star[:, :, None], axis=2)[:, :, 0]
        tca = np.where(has, tca_sel, cap).T
        dca = np.where(has.T, dca_sel.T, dta)

        lam = np.array([N / _inflated_area(PT[t], p.area_margin) for t in range(T)])
        edn = (nn * 2.0 * np.sqrt(lam)[:, None]).T
    else:
        horizon = p.interaction_horizon
        dta = np.full((N, T), horizon)
        ldn = np.zeros((N, T))
        col = np.zeros((N, T))
        contact = np.zeros((N, T), dtype=bool)
        ovp = np.zeros((N, T))
        ttc = np.full((N, T), cap)
        tca = np.full((N, T), cap)
        dca = np.full((N, T), horizon)
        edn = np.ones((N, T))  # neutral: ideal uniform-scatter ratio

    ist = np.where(ttc < cap, np.exp(-ttc / p.ist_tau), 0.0)

    maneuver = (avl > p.maneuver_turn_rate) | (np.abs(dspeed) / dt > p.maneuver_accel)
    maneuver[:, 0] = False
    ian = _anticipation(ttc, maneuver, contact, cap)

    # --- global, per step ---
    curve = p.fd_curve
    if curve is None:
        curve = fundamental_diagram_curve(
            np.column_stack([ldn.ravel(), aws.ravel()]), p.fd_bin_width
        )
    fdg = np.mean(S - curve.query(ldn), axis=0)

    mean_speed = S.mean(axis=0)
    spread = S.std(axis=0)
    var = np.where(mean_speed > 1e-9, spread / np.maximum(mean_speed, 1e-9), 0.0)

    values = {
        "AWS": aws,
        "DGD": dgd,
        "INE": ine,
        "FDR": fdr,
        "FSP": fsp,
        "GLR": glr,
        "DCS": dcs,
        "AVL": avl,
        "LEN": length_ratio,
        "EDN": edn,
        "COL": col,
        "LDN": ldn,
        "DTA": dta,
        "TTC": ttc,
        "IST": ist,
        "TCA": tca,
        "OVP": ovp,
        "FDG": fdg,
        "IAN": ian,
        "DCA": dca,
        "VAR": var,
    }
    return {code: FeatureSamples(code=code, values=values[code]) for code in FEATURE_CODES}


def with_curve(params: FeatureParams | None, curve: FundamentalDiagramCurve) -> FeatureParams:
    """Copy of the params with the reference fundamental-diagram curve set."""
    base = params if params is not None else FeatureParams()
    return replace(base, fd_curve=curve)


def merge_flat_samples(maps: list[dict[str, FeatureSamples]]) -> dict[str, np.ndarray]:
    """Concatenate the flat sample vectors of several crowds, per feature."""
    return {
        code: np.concatenate([m[code].flat() for m in maps]) for code in FEATURE_CODES
    }
