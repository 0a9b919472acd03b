import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weaklyhard.control import PlantCT, design_gain, discretize, furuta_plant
from weaklyhard.perfsim import (
    SimConfig,
    Trajectory,
    control_cost,
    draw_disturbances,
    evaluate_performance,
    sample_costs,
    sampled_states,
    simulate_closed_loop,
    write_trajectory_csv,
)
from weaklyhard.stability import nominal_closed_loop

from oracles import propagate_xi

PERIOD = 0.1


@pytest.fixture(scope="module")
def furuta_gain():
    plant = furuta_plant()
    g = design_gain(discretize(plant, PERIOD), plant.q_template())
    return plant, g.F


def test_zero_initial_state_stays_zero(furuta_gain):
    plant, F = furuta_gain
    tr = simulate_closed_loop(plant, PERIOD, F, [1, 2, 1], np.zeros(4), cfg=SimConfig(horizon=2.0))
    assert not tr.diverged
    assert np.all(tr.x == 0) and np.all(tr.u == 0)
    assert control_cost(tr, plant.weighted) == 0.0


def test_trajectory_grid(furuta_gain):
    plant, F = furuta_gain
    tr = simulate_closed_loop(plant, PERIOD, F, [1], [0.1, 0, 0, 0], cfg=SimConfig(horizon=1.0))
    assert tr.t[0] == 0 and tr.t[-1] == pytest.approx(1.0)
    assert len(tr.t) == 1001
    assert np.all(np.diff(tr.t) > 0)
    assert tr.xi.shape == (11, 5)


def test_on_time_matches_discrete_iteration(furuta_gain):
    plant, F = furuta_gain
    x0 = np.array([0.2, -0.1, 0.0, 0.0])
    tr = simulate_closed_loop(plant, PERIOD, F, [1], x0, cfg=SimConfig(horizon=3.0))
    phi = nominal_closed_loop(discretize(plant, PERIOD), F)
    z = np.concatenate([x0, [0.0]])
    for k in range(tr.xi.shape[0]):
        np.testing.assert_allclose(tr.xi[k], z, atol=1e-8)
        z = phi @ z


def test_scalar_delays_match_propagation():
    plant = PlantCT([[0.8]], [[1.0]])
    pdt = discretize(plant, PERIOD)
    F = np.array([[4.0, 0.2]])
    tr = simulate_closed_loop(plant, PERIOD, F, [2, 1], [1.0], cfg=SimConfig(horizon=1.0, x0_low=(0,), x0_high=(0,)))
    ref = propagate_xi(pdt.A, pdt.B, F, [2, 1], np.array([1.0, 0, 0]), 10)
    np.testing.assert_allclose(tr.xi, ref, rtol=1e-10, atol=1e-12)


def test_phase_offset_rotates_delays(furuta_gain):
    plant, F = furuta_gain
    delays = [1, 2, 3, 1]
    x0 = np.array([0.1, 0.2, 0, 0])
    cfg = SimConfig(horizon=2.0)
    a = simulate_closed_loop(plant, PERIOD, F, delays, x0, k0=2, cfg=cfg)
    b = simulate_closed_loop(plant, PERIOD, F, delays[2:] + delays[:2], x0, cfg=cfg)
    np.testing.assert_array_equal(a.x, b.x)


def test_long_delays_match_propagation(furuta_gain):
    plant, F = furuta_gain
    pdt = discretize(plant, PERIOD)
    delays = [3, 1, 2, 2, 1, 3]
    x0 = np.array([0.1, -0.2, 0.3, 0.0])
    tr = simulate_closed_loop(plant, PERIOD, F, delays, x0, cfg=SimConfig(horizon=2.0))
    ref = propagate_xi(pdt.A, pdt.B, F, delays, np.concatenate([x0, np.zeros(3)]), 20)
    np.testing.assert_allclose(tr.xi, ref, rtol=1e-9, atol=1e-9)


def test_cost_rectangle():
    t = np.linspace(0, 2, 201)
    x = np.zeros((201, 4))
    x[:, 0] = 1.0
    tr = Trajectory(t, x, np.zeros((201, 1)))
    assert control_cost(tr, (0, 1)) == pytest.approx(2.0, rel=1e-14)


def test_cost_of_decaying_exponential():
    t = np.linspace(0, 40, 40001)
    x = np.zeros((t.size, 4))
    x[:, 0] = np.exp(-t)
    tr = Trajectory(t, x, np.zeros((t.size, 1)))
    assert control_cost(tr, (0, 1)) == pytest.approx(0.5, rel=1e-6)


def test_cost_of_diverged_run_is_infinite():
    tr = Trajectory(np.zeros(2), np.zeros((2, 4)), np.zeros((2, 1)), diverged=True)
    assert control_cost(tr, (0, 1)) == float("inf")


def test_unstable_loop_diverges(furuta_gain):
    plant, _ = furuta_gain
    F = np.zeros((1, 5))
    tr = simulate_closed_loop(plant, PERIOD, F, [1], [0.1, 0.1, 0, 0], cfg=SimConfig(horizon=10.0))
    cost = control_cost(tr, plant.weighted)
    assert cost > 1e6 or cost == float("inf")


def test_substep_must_divide_period(furuta_gain):
    plant, F = furuta_gain
    with pytest.raises(ValueError):
        simulate_closed_loop(plant, PERIOD, F, [1], np.zeros(4), cfg=SimConfig(substep=0.003))


def test_zero_disturbance_mean_is_zero(furuta_gain):
    plant, F = furuta_gain
    cfg = SimConfig(n_samples=1, x0_low=(0,) * 4, x0_high=(0,) * 4)
    assert evaluate_performance(plant, PERIOD, F, [1, 2], cfg) == 0.0


def test_same_seed_same_bits(furuta_gain):
    plant, F = furuta_gain
    cfg = SimConfig(n_samples=20, rng_seed=7)
    a = evaluate_performance(plant, PERIOD, F, [1, 2, 2], cfg)
    b = evaluate_performance(plant, PERIOD, F, [1, 2, 2], cfg)
    assert a == b


def test_samples_do_not_depend_on_batch_size():
    x_a, k_a = draw_disturbances(SimConfig(n_samples=5, rng_seed=3), 7, 4)
    x_b, k_b = draw_disturbances(SimConfig(n_samples=50, rng_seed=3), 7, 4)
    np.testing.assert_array_equal(x_a, x_b[:5])
    np.testing.assert_array_equal(k_a, k_b[:5])
    assert np.all((x_b[:, :2] >= -0.3) & (x_b[:, :2] <= 0.3))
    assert np.all(x_b[:, 2:] == 0)
    assert set(k_b) <= set(range(7))


def test_batched_costs_equal_single_runs(furuta_gain):
    plant, F = furuta_gain
    cfg = SimConfig(n_samples=4, horizon=3.0)
    delays = [1, 2, 1]
    x0, k0 = draw_disturbances(cfg, len(delays), 4)
    batch = sample_costs(plant, PERIOD, F, delays, x0, k0, cfg)
    for i in range(4):
        tr = simulate_closed_loop(plant, PERIOD, F, delays, x0[i], int(k0[i]), cfg)
        assert batch[i] == pytest.approx(control_cost(tr, plant.weighted), rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 100.0), st.integers(0, 1000))
def test_cost_scales_quadratically(c, seed):
    plant = furuta_plant()
    F = design_gain(discretize(plant, PERIOD), plant.q_template()).F
    cfg = SimConfig(n_samples=3, horizon=2.0)
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-0.3, 0.3, size=(3, 4))
    k0 = np.array([0, 1, 2])
    base = sample_costs(plant, PERIOD, F, [1, 2, 1], x0, k0, cfg)
    scaled = sample_costs(plant, PERIOD, F, [1, 2, 1], c * x0, k0, cfg)
    np.testing.assert_allclose(scaled, c**2 * base, rtol=1e-6)


def test_trajectory_csv(tmp_path, furuta_gain):
    plant, F = furuta_gain
    tr = simulate_closed_loop(plant, PERIOD, F, [1], [0.1, 0, 0, 0], cfg=SimConfig(horizon=0.2))
    path = tmp_path / "traj.csv"
    write_trajectory_csv(tr, path, plant.labels)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,theta_r,theta_p,dtheta_r,dtheta_p,u0"
    assert len(lines) == 1 + len(tr.t)
    assert lines[1].startswith("0,0.1,0,0,0,")


def test_sampled_states_match_full_trajectory(furuta_gain):
    plant, F = furuta_gain
    x0 = np.array([[0.1, 0.1, 0, 0], [-0.2, 0.05, 0, 0]])
    xs, div = sampled_states(plant, PERIOD, F, [1, 2, 3], x0, [0, 1], 1.0)
    assert xs.shape == (2, 11, 7) and not div.any()
    for i in range(2):
        tr = simulate_closed_loop(plant, PERIOD, F, [1, 2, 3], x0[i], i, SimConfig(horizon=1.0))
        np.testing.assert_allclose(xs[i], tr.xi, atol=1e-10)
