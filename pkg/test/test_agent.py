"""Tests of the action space, reward, replay, environment and training loop."""

__copyright__ = """
Copyright (C) 2026 thermadapt developers
"""

__license__ = """
Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN
THE SOFTWARE.
"""

import logging

import numpy as np
import pandas as pd
import pytest
from scipy.stats import chi2

from thermadapt.agent import (
    AgentConfig, ActionSpace, ReplayBuffer, RewardParams, ThermalEnvironment,
    Transition, _update, build_action_space, compare_policies, decode, encode,
    env_step, epsilon_at, evaluate, extend_action_space, make_env_factory,
    make_state_vector, reward, select_action, train, write_reward_curve,
    write_trace_csv)
from thermadapt.knowledge import synthetic_series
from thermadapt.neural import (
    DuelingNetwork, NetworkError, OptimizerState, constant_policy_network,
    forward)
from thermadapt.simutil import ConfigurationError
from thermadapt.thermal import (
    Device, DeviceKind, RoomConfig, WINDOW_LEVELS, default_devices)

logger = logging.getLogger(__name__)

PARAMS = RewardParams()


def _table_devices():
    return [Device("heater", DeviceKind.HEATER, (0, 200, 400)),
            Device("cooler", DeviceKind.COOLER, (0, 200)),
            Device("window", DeviceKind.WINDOW, WINDOW_LEVELS)]


def _plug_heater():
    return Device("heater2", DeviceKind.HEATER, (50, 200, 250, 400))


def _small_cfg(**kwargs):
    settings = dict(episodes=3, steps_per_episode=8, batch_size=4,
                    memory_size=100, hidden_width=8)
    settings.update(kwargs)
    return AgentConfig(**settings)


def _factory(outdoor, devices=None, cfg=None):
    space = build_action_space(devices or default_devices())
    return make_env_factory(RoomConfig(), space, outdoor, PARAMS, cfg)


# {{{ action space

def test_table_action_space():
    space = build_action_space(_table_devices())
    assert space.size == 12
    assert space.settings(0) == (0.0, 0.0, "CLOSE")
    assert space.settings(3) == (0.0, 200.0, "OPEN")
    np.testing.assert_array_equal(encode(space, 0), np.eye(12)[0])
    np.testing.assert_array_equal(encode(space, 3), np.eye(12)[3])
    assert all(decode(space, encode(space, i)) == i for i in range(12))


def test_action_space_sizes():
    heater_only = build_action_space(
        [Device("heater", DeviceKind.HEATER, (0, 200))])
    assert heater_only.size == 2
    assert build_action_space(_table_devices() + [_plug_heater()]).size == 48


def test_empty_device_list():
    with pytest.raises(ConfigurationError):
        build_action_space([])


def test_encode_out_of_range():
    space = build_action_space(_table_devices())
    with pytest.raises(ConfigurationError):
        encode(space, 12)
    with pytest.raises(ConfigurationError):
        make_state_vector(17, 19, -1, space)


def test_state_vector():
    space = build_action_space(_table_devices())
    x = make_state_vector(17, 19, 0, space)
    np.testing.assert_array_equal(x, [17, 19, 1] + [0] * 11)
    big = build_action_space(_table_devices() + [_plug_heater()])
    rng = np.random.default_rng(0)
    for i in rng.integers(0, 48, size=10):
        x = make_state_vector(5.0, 20.0, int(i), big)
        assert len(x) == 50
        assert x[2:].sum() == 1.0


def test_extend_action_space_keeps_old_indices():
    old = build_action_space(default_devices())
    new = extend_action_space(old, default_devices() + [_plug_heater()])
    assert new.size == 48
    for i, action in enumerate(old.joint_actions):
        assert new.settings(i) == action + (50.0,)
        assert new.powers(i).heater_w == old.powers(i).heater_w + 50.0
    assert len(set(new.joint_actions)) == 48


def test_extend_action_space_incompatible():
    old = build_action_space(default_devices())
    assert extend_action_space(old, default_devices()[:2]) is None
    smaller_cooler = [default_devices()[0],
                      Device("cooler", DeviceKind.COOLER, (0, 200)),
                      default_devices()[2]]
    assert extend_action_space(old, smaller_cooler) is None


def test_descriptor_round_trip():
    space = build_action_space(default_devices() + [_plug_heater()])
    assert ActionSpace.from_descriptor(space.descriptor()) == space

# }}}


# {{{ reward

@pytest.mark.parametrize(("t_in", "energy", "expected"), [
    (20.0, 400.0, 0.0),
    (17.0, 200.0, -19.0),
    (25.0, 400.0, -145.0),
])
def test_reward_values(t_in, energy, expected):
    assert reward(t_in, energy, PARAMS) == pytest.approx(expected, abs=1e-12)


def test_reward_zone_boundaries():
    assert reward(18.0, 400.0, PARAMS) == 0.0
    assert reward(22.0, 400.0, PARAMS) == 0.0
    assert reward(16.0, 0.0, PARAMS) == pytest.approx(-16.0)
    assert reward(24.0, 0.0, PARAMS) == pytest.approx(-16.0)
    assert reward(15.999, 0.0, PARAMS) < -64.0


def test_reward_params_invariant():
    with pytest.raises(ConfigurationError):
        RewardParams(eps_comfort=4.0, delta=4.0)

# }}}


# {{{ policy

def test_greedy_selection():
    net = constant_policy_network(2, 12, 5)
    x = np.zeros(14)
    assert select_action(net, x, 0.0, None) == 5


def test_greedy_ties_go_to_lowest_index():
    net = constant_policy_network(2, 12, 5)
    net.params["advantage.out.bias"][:] = 0.0
    assert select_action(net, np.ones(14), 0.0, None) == 0


def test_uniform_exploration():
    net = constant_policy_network(2, 12, 5)
    x = np.zeros(14)
    draws = [select_action(net, x, 1.0, np.random.default_rng(3))
             for _ in range(3)]
    assert len(set(draws)) == 1

    rng = np.random.default_rng(2024)
    n = 100_000
    counts = np.bincount([select_action(net, x, 1.0, rng) for _ in range(n)],
                         minlength=12)
    expected = n / 12
    stat = float(((counts - expected) ** 2 / expected).sum())
    assert stat < chi2.ppf(0.999, df=11)


def test_invalid_exploration_rate():
    net = constant_policy_network(2, 12, 0)
    with pytest.raises(ConfigurationError):
        select_action(net, np.zeros(14), 1.5, np.random.default_rng())


@pytest.mark.parametrize("n", [0, 1, 1000, 4950, 10000])
def test_epsilon_schedule(n):
    cfg = AgentConfig()
    assert epsilon_at(n, cfg) == max(0.01, 1.0 - n * 0.0002)
    if n == 1000:
        assert epsilon_at(n, cfg) == pytest.approx(0.8)
    if n == 10000:
        assert epsilon_at(n, cfg) == 0.01

# }}}


# {{{ environment

def test_env_step_at_equilibrium():
    env = _factory(np.full(200, 20.0))()
    env.reset(t_in=20.0)
    state, r = env_step(env, 0)
    assert state.t_in == 20.0
    assert r == 0.0
    assert state.clock == 900.0


def test_env_step_full_heater_is_penalized():
    env = _factory(np.full(200, 20.0))()
    env.reset(t_in=25.0)
    seen = []
    env.monitor = seen.append
    result = env.step(8)
    assert env.space.powers(8).heater_w == 400.0
    assert result.reward <= -0.05 * 400
    assert len(result.samples) == 3
    assert len(seen) == 1 and len(seen[0]) == 3
    np.testing.assert_array_equal(result.x_next[2:], encode(env.space, 8))


def test_series_exhaustion_is_terminal():
    env = _factory(np.full(4, 20.0))()
    env.reset(t_in=20.0, max_steps=96)
    terminals = [env.step(0).terminal for _ in range(3)]
    assert terminals == [False, False, True]


def test_outdoor_interpolation():
    env = _factory(np.array([10.0, 13.0, 16.0]))()
    env.reset(t_in=20.0)
    assert env.outdoor_at(300.0) == pytest.approx(11.0)
    states = env.step(0).samples
    assert [s.t_out for s in states] == pytest.approx([11.0, 12.0, 13.0])


def test_replay_buffer_keeps_most_recent():
    buffer = ReplayBuffer(5)
    for i in range(8):
        buffer.push(Transition(np.array([float(i)]), 0, float(i),
                               np.array([i + 1.0]), False))
    assert len(buffer) == 5
    assert [t.reward for t in buffer.transitions()] == [3.0, 4.0, 5.0, 6.0, 7.0]

    xs, actions, rewards, xs_next, terminal = buffer.sample(
        5, np.random.default_rng(0))
    assert sorted(rewards) == [3.0, 4.0, 5.0, 6.0, 7.0]
    assert xs.shape == (5, 1) and not terminal.any()
    with pytest.raises(ConfigurationError):
        buffer.sample(6, np.random.default_rng(0))

# }}}


# {{{ training

def test_train_without_episodes():
    factory = _factory(np.full(200, 5.0))
    net = DuelingNetwork(2, 12, hidden_width=8, seed=1)
    before = {name: value.copy() for name, value in net.params.items()}
    trained, rewards = train(factory, _small_cfg(episodes=0), seed=0,
                             network=net)
    assert trained is net and rewards == []
    assert not trained.trained
    for name, value in trained.params.items():
        np.testing.assert_array_equal(value, before[name])


def test_train_rejects_mismatched_network():
    with pytest.raises(NetworkError):
        train(_factory(np.full(200, 5.0)), _small_cfg(), seed=0,
              network=DuelingNetwork(2, 48, hidden_width=8))


def test_training_is_deterministic():
    outdoor = synthetic_series("winter", 3, seed=1).temperatures
    cfg = _small_cfg()
    net_a, rewards_a = train(_factory(outdoor, cfg=cfg), cfg, seed=17)
    net_b, rewards_b = train(_factory(outdoor, cfg=cfg), cfg, seed=17)
    assert len(rewards_a) == cfg.episodes
    assert rewards_a == rewards_b
    assert net_a.trained
    for name, value in net_a.params.items():
        np.testing.assert_array_equal(net_b.params[name], value)


def _update_case(terminal):
    cfg = AgentConfig(batch_size=1, memory_size=10, gamma=0.9)
    online = DuelingNetwork(2, 3, hidden_width=4, seed=0)
    target = DuelingNetwork(2, 3, hidden_width=4, seed=1)
    x = np.array([0.5, 0.2, 1.0, 0.0, 0.0])
    x_next = np.array([0.4, 0.3, 0.0, 1.0, 0.0])
    buffer = ReplayBuffer(10)
    buffer.push(Transition(x, 1, -3.0, x_next, terminal))
    return cfg, online, target, buffer, x, x_next


def test_terminal_target_ignores_bootstrap():
    cfg, online, target, buffer, x, _ = _update_case(terminal=True)
    expected = (forward(online, x)[1] + 3.0) ** 2
    loss = _update(online, target, OptimizerState(), buffer, cfg,
                   np.random.default_rng(0))
    assert loss == pytest.approx(expected, rel=1e-12)


def test_non_terminal_target_bootstraps():
    cfg, online, target, buffer, x, x_next = _update_case(terminal=False)
    td_target = -3.0 + 0.9 * forward(target, x_next).max()
    expected = (forward(online, x)[1] - td_target) ** 2
    loss = _update(online, target, OptimizerState(), buffer, cfg,
                   np.random.default_rng(0))
    assert loss == pytest.approx(expected, rel=1e-12)


@pytest.mark.slow
def test_desk_scale_learning():
    outdoor = synthetic_series("winter", 30, seed=3, mean=14.0,
                               amplitude=3.0).temperatures
    cfg = AgentConfig(episodes=150, steps_per_episode=96, batch_size=64,
                      memory_size=20000, hidden_width=64, gamma=0.9,
                      nstatus=25)
    net, rewards = train(_factory(outdoor, cfg=cfg), cfg, seed=3)
    assert len(rewards) == 150
    first, last = np.mean(rewards[:10]), np.mean(rewards[-10:])
    logger.info(f"mean reward first 10 episodes {first:.1f}, last 10 {last:.1f}")
    assert last > first

    held_out = synthetic_series("winter", 7, seed=4, mean=14.0,
                                amplitude=3.0).temperatures
    result = evaluate(net, _factory(held_out, cfg=cfg), 96, t_in=20.0,
                      offset=480)
    logger.info(f"held-out occupancy {result.occupancy:.3f}")
    assert result.occupancy >= 0.75

# }}}


# {{{ evaluation

def test_evaluation_is_deterministic():
    outdoor = synthetic_series("winter", 2, seed=4).temperatures
    net = DuelingNetwork(2, 12, hidden_width=8, seed=6)
    factory = _factory(outdoor)
    a = evaluate(net, factory, 48, t_in=19.0, offset=10)
    b = evaluate(net, factory, 48, t_in=19.0, offset=10)
    pd.testing.assert_frame_equal(a.trace, b.trace)
    assert a.cumulative_reward == b.cumulative_reward
    assert len(a.trace) == 48


def test_constant_comfort_trace():
    net = constant_policy_network(2, 12, 0)
    result = evaluate(net, _factory(np.full(200, 20.0)), 96, t_in=20.0)
    assert result.cumulative_reward == 0.0
    assert result.occupancy == 1.0
    assert result.total_energy_wh == 0.0


def test_cooler_beats_heater_in_summer():
    space = build_action_space(default_devices())
    assert space.settings(8) == (400.0, 0.0, "CLOSE")
    assert space.settings(2) == (0.0, 400.0, "CLOSE")
    factory = _factory(np.full(200, 30.0))
    heater, cooler = compare_policies(constant_policy_network(2, 12, 8),
                                      constant_policy_network(2, 12, 2),
                                      factory, 96, t_in=25.0)
    assert heater.occupancy < cooler.occupancy
    assert heater.cumulative_reward < cooler.cumulative_reward


def test_evaluate_rejects_mismatched_model():
    with pytest.raises(NetworkError):
        evaluate(constant_policy_network(2, 48, 0), _factory(np.full(10, 20.0)),
                 4, t_in=20.0)


def test_exports(tmp_path):
    result = evaluate(constant_policy_network(2, 12, 4),
                      _factory(np.full(200, 10.0)), 12, t_in=18.0)
    trace_path = tmp_path / "trace.csv"
    write_trace_csv(result.trace, trace_path)
    frame = pd.read_csv(trace_path)
    assert list(frame.columns) == ["step", "clock_s", "t_out", "t_in",
                                   "action_index", "heater_w", "cooler_w",
                                   "window", "reward", "epsilon"]
    assert set(frame["window"]) == {"CLOSE"}

    curve_path = tmp_path / "rewards.csv"
    write_reward_curve([-10.0, -5.0], curve_path)
    curve = pd.read_csv(curve_path)
    assert list(curve.columns) == ["episode", "cumulative_reward"]
    assert curve["cumulative_reward"].tolist() == [-10.0, -5.0]

# }}}


def test_environment_requires_series():
    with pytest.raises(ConfigurationError):
        ThermalEnvironment(RoomConfig(), build_action_space(default_devices()),
                           [20.0])

# vim: foldmethod=marker
