"""Social-forces simulator: scenarios, stepping physics, determinism, files."""

import math

import numpy as np
import pytest

from crowdscore.errors import ConfigError, DataError
from crowdscore.simulator import (
    COMFORT_RANGE,
    GOAL_RADIUS,
    PARAM_NAMES,
    Scenario,
    SimState,
    SocialForcesParams,
    format_params,
    genome_to_params,
    load_params,
    make_scenario,
    params_to_genome,
    parse_params,
    repulsion_forces,
    save_params,
    simulate,
    step,
)


def test_params_validation():
    SocialForcesParams(repulsion_strength=0.0)  # allowed: no-avoidance baseline
    with pytest.raises(ConfigError):
        SocialForcesParams(relaxation_time=0.0)
    with pytest.raises(ConfigError):
        SocialForcesParams(repulsion_strength=-0.1)
    with pytest.raises(ConfigError):
        SocialForcesParams(repulsion_range=0.0)
    with pytest.raises(ConfigError):
        SocialForcesParams(max_speed=0.0)
    with pytest.raises(ConfigError):
        SocialForcesParams(noise_amplitude=-0.2)


def test_genome_round_trip():
    p = SocialForcesParams(relaxation_time=0.7, repulsion_strength=3.0,
                           repulsion_range=0.4, max_speed=3.0,
                           noise_amplitude=0.1)
    g = params_to_genome(p)
    assert g.shape == (len(PARAM_NAMES),)
    assert genome_to_params(g) == p
    with pytest.raises(ConfigError):
        genome_to_params(np.zeros(4))


def test_scenario_validation():
    with pytest.raises(ConfigError, match="unknown scenario kind"):
        Scenario(kind="maze", agent_count=4)
    with pytest.raises(ConfigError):
        Scenario(kind="circle", agent_count=0)
    with pytest.raises(ConfigError):
        Scenario(kind="circle", agent_count=4, radius=0.0)
    with pytest.raises(ConfigError):
        Scenario(kind="random", agent_count=4, area=(0.0, 5.0))
    with pytest.raises(ConfigError):
        Scenario(kind="circle", agent_count=4, density_target=-1.0)


def test_circle_spawns_on_rim_with_antipodal_goals():
    setup = make_scenario(Scenario(kind="circle", agent_count=2, radius=5.0))
    assert np.allclose(setup.positions[0], [5.0, 0.0])
    assert np.allclose(setup.positions[1], [-5.0, 0.0], atol=1e-12)
    assert np.array_equal(setup.goals, -setup.positions)
    setup8 = make_scenario(Scenario(kind="circle", agent_count=8, radius=3.0))
    assert np.allclose(np.linalg.norm(setup8.positions, axis=1), 3.0)


def test_circle_density_target_overrides_radius():
    density = 0.25
    setup = make_scenario(Scenario(kind="circle", agent_count=20, radius=99.0,
                                   density_target=density))
    expected = math.sqrt(20 / (math.pi * density))
    assert np.allclose(np.linalg.norm(setup.positions, axis=1), expected)


def test_crossing_flows_are_perpendicular():
    setup = make_scenario(Scenario(kind="crossing", agent_count=4, radius=6.0,
                                   angle_deg=90.0))
    travel = setup.goals - setup.positions
    # first half flows along +x, second half along +y
    for i in (0, 1):
        assert travel[i][1] == pytest.approx(0.0)
        assert travel[i][0] > 0
        assert setup.positions[i][0] == pytest.approx(-6.0)
    for i in (2, 3):
        assert travel[i][0] == pytest.approx(0.0)
        assert travel[i][1] > 0
        assert setup.positions[i][1] == pytest.approx(-6.0)


def test_random_spawns_keep_clearance_and_are_seeded():
    sc = Scenario(kind="random", agent_count=12, area=(10.0, 10.0), seed=5)
    setup = make_scenario(sc)
    d = np.linalg.norm(setup.positions[:, None] - setup.positions[None, :], axis=2)
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 0.6  # two body radii plus the clearance margin
    again = make_scenario(Scenario(kind="random", agent_count=12,
                                   area=(10.0, 10.0), seed=5))
    assert np.array_equal(setup.positions, again.positions)
    assert np.array_equal(setup.goals, again.goals)
    other = make_scenario(Scenario(kind="random", agent_count=12,
                                   area=(10.0, 10.0), seed=6))
    assert not np.array_equal(setup.positions, other.positions)


def test_random_density_target_sets_area():
    setup = make_scenario(Scenario(kind="random", agent_count=16,
                                   density_target=0.25, seed=0))
    side = math.sqrt(16 / 0.25)
    assert np.all(np.abs(setup.positions) <= side / 2)
    assert np.all(np.abs(setup.goals) <= side / 2)


def test_random_infeasible_packing_raises():
    with pytest.raises(ConfigError, match="cannot place"):
        make_scenario(Scenario(kind="random", agent_count=200, area=(2.0, 2.0)))


def test_comfort_speeds_are_clamped():
    setup = make_scenario(Scenario(kind="circle", agent_count=400, radius=100.0))
    assert np.all(setup.comfort_speeds >= COMFORT_RANGE[0])
    assert np.all(setup.comfort_speeds <= COMFORT_RANGE[1])
    assert abs(float(np.mean(setup.comfort_speeds)) - 1.4) < 0.05


def one_agent_state(position, goal, comfort=1.3):
    return SimState(
        positions=np.array([position], dtype=float),
        velocities=np.zeros((1, 2)),
        goals=np.array([goal], dtype=float),
        comfort_speeds=np.array([comfort]),
        body_radii=np.array([0.25]),
    )


def test_first_step_accelerates_from_rest():
    state = one_agent_state([0.0, 0.0], [10.0, 0.0], comfort=1.3)
    params = SocialForcesParams(relaxation_time=0.5)
    out = step(state, params, 0.1)
    # position lags by one step under explicit Euler; velocity picks up first
    assert np.array_equal(out.positions, state.positions)
    assert out.velocities[0, 0] == pytest.approx(1.3 / 0.5 * 0.1)
    assert out.velocities[0, 1] == 0.0


def test_cruise_at_comfort_speed_is_an_equilibrium():
    state = one_agent_state([0.0, 0.0], [100.0, 0.0], comfort=1.3)
    state.velocities[0] = [1.3, 0.0]
    params = SocialForcesParams(relaxation_time=0.5)
    out = step(state, params, 0.1)
    assert np.allclose(out.velocities, [[1.3, 0.0]])
    assert np.allclose(out.positions, [[0.13, 0.0]])


def test_head_on_pair_stays_mirror_symmetric_and_separated():
    params = SocialForcesParams(relaxation_time=0.5, repulsion_strength=8.0,
                                repulsion_range=0.8)
    state = SimState(
        positions=np.array([[4.0, 0.0], [-4.0, 0.0]]),
        velocities=np.zeros((2, 2)),
        goals=np.array([[-4.0, 0.0], [4.0, 0.0]]),
        comfort_speeds=np.array([1.3, 1.3]),
        body_radii=np.array([0.25, 0.25]),
    )
    min_gap = np.inf
    for _ in range(200):
        state = step(state, params, 0.1)
        assert np.allclose(state.positions[0], -state.positions[1], atol=1e-12)
        min_gap = min(min_gap, float(np.linalg.norm(state.positions[0] - state.positions[1])))
    assert min_gap > 0.5  # strong repulsion keeps the discs apart


def test_speed_cap_limits_velocity():
    state = one_agent_state([0.0, 0.0], [50.0, 0.0], comfort=2.0)
    params = SocialForcesParams(relaxation_time=0.1, max_speed=1.0)
    for _ in range(30):
        state = step(state, params, 0.1)
        assert np.linalg.norm(state.velocities[0]) <= 1.0 + 1e-12
    assert np.linalg.norm(state.velocities[0]) == pytest.approx(1.0)


def test_goal_hold_latches():
    state = one_agent_state([0.0, 0.0], [0.2, 0.0])  # already inside goal radius
    assert 0.2 < GOAL_RADIUS
    out = step(state, SocialForcesParams(), 0.1)
    assert np.array_equal(out.positions, state.positions)
    assert np.all(out.velocities == 0.0)
    assert out.reached[0]


def test_simulated_walker_arrives_and_holds():
    crowd = simulate(Scenario(kind="circle", agent_count=1, radius=1.0, seed=3),
                     duration=5.0)
    P = crowd.positions()[0]
    goal = crowd.goals()[0]
    assert np.linalg.norm(P[-1] - goal) < GOAL_RADIUS + 0.05
    assert np.all(P[-5:] == P[-1])


def test_step_count_is_ceiling_of_duration():
    crowd = simulate(Scenario(kind="circle", agent_count=2, radius=4.0),
                     duration=1.25)
    assert crowd.n_steps == 13
    with pytest.raises(ConfigError):
        simulate(Scenario(kind="circle", agent_count=2, radius=4.0), duration=0.1)
    with pytest.raises(ConfigError):
        simulate(Scenario(kind="circle", agent_count=2, radius=4.0), duration=-1.0)


def test_simulate_is_deterministic_even_with_noise():
    sc = Scenario(kind="circle", agent_count=6, radius=4.0, seed=11)
    params = SocialForcesParams(noise_amplitude=0.5)
    a = simulate(sc, params, duration=4.0)
    b = simulate(sc, params, duration=4.0)
    assert np.array_equal(a.positions(), b.positions())
    c = simulate(Scenario(kind="circle", agent_count=6, radius=4.0, seed=12),
                 params, duration=4.0)
    assert not np.array_equal(a.positions(), c.positions())


def test_simulate_rejects_cap_below_comfort():
    with pytest.raises(ConfigError, match="below the largest comfort speed"):
        simulate(Scenario(kind="circle", agent_count=8, radius=4.0),
                 params=SocialForcesParams(max_speed=0.5), duration=3.0)


def test_simulate_records_setup_in_trajectory():
    sc = Scenario(kind="circle", agent_count=5, radius=4.0, seed=7)
    crowd = simulate(sc, duration=3.0)
    setup = make_scenario(sc)
    assert np.array_equal(crowd.goals(), setup.goals)
    assert np.array_equal(crowd.comfort_speeds(), setup.comfort_speeds)
    assert [c.statics.agent_id for c in crowd.characters] == list(range(5))
    P = crowd.positions()
    assert np.allclose(crowd.velocities()[:, 0], (P[:, 1] - P[:, 0]) / crowd.dt)


def test_repulsion_forces_pairwise():
    A, B = 2.0, 0.4
    params = SocialForcesParams(repulsion_strength=A, repulsion_range=B)
    gap = 1.0
    positions = np.array([[0.0, 0.0], [gap + 0.5, 0.0]])
    radii = np.array([0.25, 0.25])
    forces = repulsion_forces(positions, radii, params)
    expected = A * math.exp(-gap / B)
    assert forces[0, 0] == pytest.approx(-expected)
    assert forces[1, 0] == pytest.approx(expected)
    assert np.allclose(forces[:, 1], 0.0)
    assert np.allclose(forces[0], -forces[1])
    # zero strength or a single agent produce no force
    off = SocialForcesParams(repulsion_strength=0.0)
    assert np.all(repulsion_forces(positions, radii, off) == 0.0)
    assert np.all(repulsion_forces(positions[:1], radii[:1], params) == 0.0)


def test_params_file_round_trip(tmp_path):
    p = SocialForcesParams(relaxation_time=0.63, repulsion_strength=5.5,
                           repulsion_range=0.42, max_speed=3.1,
                           noise_amplitude=0.07)
    path = tmp_path / "params.txt"
    save_params(p, path)
    assert load_params(path) == p
    text = format_params(p)
    assert parse_params(text) == p
    assert parse_params("") == SocialForcesParams()
    with pytest.raises(DataError, match="unknown parameter"):
        parse_params("gravity = 9.8\n")
    with pytest.raises(DataError, match="not a number"):
        parse_params("max_speed = fast\n")
