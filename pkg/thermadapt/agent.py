"""Real-time Q-learning agent for the room simulator.

The agent sees ``x_t = (t_out, t_in, onehot(a_{t-1}))``: observations and
actions evolve together, so the action chosen at step *t* is executed
while the state already carries the previous one, and
``x_{t+1} = (s_{t+1}, a_t)``.

.. autoclass:: ActionSpace
.. autoclass:: RewardParams
.. autoclass:: AgentConfig
.. autoclass:: ReplayBuffer
.. autoclass:: ThermalEnvironment
.. autofunction:: build_action_space
.. autofunction:: extend_action_space
.. autofunction:: encode
.. autofunction:: make_state_vector
.. autofunction:: reward
.. autofunction:: select_action
.. autofunction:: env_step
.. autofunction:: train
.. autofunction:: evaluate
"""

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

import itertools
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from thermadapt.neural import (
    DuelingNetwork, NetworkError, OptimizerState, forward, hard_update,
    optimizer_step, soft_update, td_backward_batch)
from thermadapt.simutil import (
    ConfigurationError, check_naninf, check_step, configure_dataclass)
from thermadapt.thermal import (
    DEFAULT_ACTION_DT, DEFAULT_SUB_DT, Device, DeviceKind, RoomConfig, SimState,
    WINDOW_CLOSE, WINDOW_OPEN, device_from_dict, device_to_dict, powers_for,
    simulate_action_interval)

logger = logging.getLogger(__name__)

OBSERVATION_DIM = 2

TRACE_COLUMNS = ["step", "clock_s", "t_out", "t_in", "action_index",
                 "heater_w", "cooler_w", "window", "reward", "epsilon"]


class TrainingError(RuntimeError):
    pass


# {{{ action space

class ActionSpace:
    """Joint settings of an ordered device list.

    .. attribute:: joint_actions

        Tuple of per-device setting tuples; the position is the action index.
    """

    def __init__(self, devices: Sequence[Device], joint_actions):
        self.devices = tuple(devices)
        self.joint_actions = tuple(tuple(a) for a in joint_actions)
        if not self.joint_actions:
            raise ConfigurationError("Empty action space.")
        for action in self.joint_actions:
            if len(action) != len(self.devices):
                raise ConfigurationError("Joint action width mismatch.")
            for device, setting in zip(self.devices, action):
                if setting not in device.levels:
                    raise ConfigurationError(
                        f"Setting {setting} is not a level of {device.id}.")
        if len(set(self.joint_actions)) != len(self.joint_actions):
            raise ConfigurationError("Duplicate joint actions.")

    @property
    def size(self):
        return len(self.joint_actions)

    def __len__(self):
        return self.size

    def __eq__(self, other):
        return (isinstance(other, ActionSpace)
                and self.devices == other.devices
                and self.joint_actions == other.joint_actions)

    def __hash__(self):
        return hash((self.devices, self.joint_actions))

    def settings(self, index):
        return self.joint_actions[index]

    def powers(self, index):
        return powers_for(self.devices, self.joint_actions[index])

    def describe(self, index):
        return ", ".join(f"{dev.id}={setting}" for dev, setting
                         in zip(self.devices, self.joint_actions[index]))

    def descriptor(self):
        """Plain-data form stored next to agent models."""
        return {
            "devices": [device_to_dict(dev) for dev in self.devices],
            "joint_actions": [list(a) for a in self.joint_actions],
        }

    @classmethod
    def from_descriptor(cls, data):
        devices = [device_from_dict(entry) for entry in data["devices"]]
        joint = []
        for action in data["joint_actions"]:
            joint.append(tuple(
                setting if dev.kind is DeviceKind.WINDOW else float(setting)
                for dev, setting in zip(devices, action)))
        return cls(devices, joint)


def build_action_space(devices: Sequence[Device]) -> ActionSpace:
    """Cartesian product of device levels, first device outermost."""
    if not devices:
        raise ConfigurationError("Empty device list.")
    joint = itertools.product(*(dev.levels for dev in devices))
    return ActionSpace(devices, joint)


def extend_action_space(old: ActionSpace,
                        devices: Sequence[Device]) -> Optional[ActionSpace]:
    """Extend *old* to *devices*, keeping every old action at its old index.

    Old devices keep their old setting and new devices sit at their first
    level; the remaining joint actions follow in product order. Returns
    *None* when some old action has no counterpart (a device or a level
    disappeared).
    """
    new_ids = [dev.id for dev in devices]
    by_id = {dev.id: dev for dev in devices}
    for dev in old.devices:
        if dev.id not in by_id:
            return None

    mapped = []
    for action in old.joint_actions:
        old_settings = {dev.id: s for dev, s in zip(old.devices, action)}
        settings = []
        for dev in devices:
            if dev.id in old_settings:
                if old_settings[dev.id] not in dev.levels:
                    return None
                settings.append(old_settings[dev.id])
            else:
                settings.append(dev.levels[0])
        mapped.append(tuple(settings))

    seen = set(mapped)
    if len(seen) != len(mapped):
        return None
    rest = [a for a in itertools.product(*(by_id[i].levels for i in new_ids))
            if a not in seen]
    return ActionSpace(devices, mapped + rest)


def encode(space: ActionSpace, action_index):
    """One-hot vector of *action_index*."""
    if not 0 <= action_index < space.size:
        raise ConfigurationError(
            f"Action index {action_index} out of range [0, {space.size}).")
    vec = np.zeros(space.size)
    vec[action_index] = 1.0
    return vec


def decode(space: ActionSpace, one_hot):
    one_hot = np.asarray(one_hot)
    if one_hot.shape != (space.size,) or one_hot.sum() != 1.0:
        raise ConfigurationError("Not a one-hot action vector.")
    return int(np.argmax(one_hot))


def make_state_vector(t_out, t_in, prev_action_index, space: ActionSpace):
    """``(t_out, t_in, onehot(prev_action_index))``."""
    return np.concatenate(([float(t_out), float(t_in)],
                           encode(space, prev_action_index)))

# }}}


# {{{ reward

@dataclass(frozen=True)
class RewardParams:
    """Comfort-zone reward parameters.

    *eps_comfort* is the half width of the comfort zone and *delta* the half
    width of the intermediate zone, both around *setpoint*.
    """

    setpoint: float = 20.0
    eps_comfort: float = 2.0
    delta: float = 4.0
    beta: float = 0.05
    rho: float = 1.0

    def __post_init__(self):
        if not 0 < self.eps_comfort < self.delta:
            raise ConfigurationError(
                "Reward zones need 0 < eps_comfort < delta.")

    @property
    def comfort_low(self):
        return self.setpoint - self.eps_comfort

    @property
    def comfort_high(self):
        return self.setpoint + self.eps_comfort

    def in_comfort(self, t_in):
        return self.comfort_low <= t_in <= self.comfort_high


def reward(t_in, energy_w, params: RewardParams) -> float:
    """Zero in the comfort zone, quadratic then cubic penalties outside."""
    dev = params.setpoint - t_in
    if abs(dev) <= params.eps_comfort:
        return 0.0
    if abs(dev) <= params.delta:
        return -params.beta * energy_w - params.rho * dev ** 2
    return -params.beta * energy_w - params.rho * abs(dev) ** 3

# }}}


# {{{ configuration

@dataclass(frozen=True)
class AgentConfig:
    memory_size: int = 1_000_000
    batch_size: int = 256
    eps_decay: float = 0.0002
    eps_floor: float = 0.01
    tau: float = 0.005
    episodes: int = 600
    gamma: float = 0.99
    steps_per_episode: int = 96
    action_dt: float = DEFAULT_ACTION_DT
    sub_dt: float = DEFAULT_SUB_DT
    hidden_width: int = 256
    trunk_layers: int = 2
    lr: float = 1.0e-3
    t_in_low: float = 15.0
    t_in_high: float = 25.0
    nstatus: int = 10

    def __post_init__(self):
        if not 0 <= self.gamma <= 1:
            raise ConfigurationError(f"Invalid discount factor: {self.gamma}")
        if self.batch_size < 1 or self.batch_size > self.memory_size:
            raise ConfigurationError(
                f"Invalid batch size {self.batch_size} for memory "
                f"{self.memory_size}.")
        if not 0 <= self.eps_floor < 1:
            raise ConfigurationError(f"Invalid epsilon floor: {self.eps_floor}")
        if self.episodes < 0 or self.steps_per_episode < 1:
            raise ConfigurationError("Invalid episode settings.")
        if not 0 <= self.tau <= 1:
            raise ConfigurationError(f"Invalid soft update rate: {self.tau}")
        if self.t_in_low > self.t_in_high:
            raise ConfigurationError("Invalid starting temperature range.")

    @classmethod
    def from_dict(cls, data):
        """Override defaults with the keys present in *data*."""
        return configure_dataclass(cls, data, "agent")


def epsilon_at(n_steps, cfg: AgentConfig):
    """Exploration rate after *n_steps* training steps."""
    return max(cfg.eps_floor, 1.0 - n_steps * cfg.eps_decay)

# }}}


# {{{ replay

class Transition(NamedTuple):
    x: np.ndarray
    action_index: int
    reward: float
    x_next: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ConfigurationError(f"Invalid replay capacity: {capacity}")
        self.capacity = int(capacity)
        self._storage: List[Transition] = []
        self._next = 0

    def __len__(self):
        return len(self._storage)

    def push(self, transition: Transition):
        if len(self._storage) < self.capacity:
            self._storage.append(transition)
        else:
            self._storage[self._next] = transition
        self._next = (self._next + 1) % self.capacity

    def transitions(self):
        """Stored transitions, oldest first."""
        if len(self._storage) < self.capacity:
            return list(self._storage)
        return self._storage[self._next:] + self._storage[:self._next]

    def sample(self, batch_size, rng):
        """Sample *batch_size* distinct transitions as stacked arrays."""
        if batch_size > len(self._storage):
            raise ConfigurationError(
                f"Cannot sample {batch_size} of {len(self._storage)} transitions.")
        idx = rng.choice(len(self._storage), size=batch_size, replace=False)
        batch = [self._storage[i] for i in idx]
        return (np.stack([t.x for t in batch]),
                np.array([t.action_index for t in batch], dtype=np.intp),
                np.array([t.reward for t in batch]),
                np.stack([t.x_next for t in batch]),
                np.array([t.terminal for t in batch], dtype=bool))

# }}}


# {{{ environment

class EnvStep(NamedTuple):
    x_next: np.ndarray
    reward: float
    terminal: bool
    state: SimState
    samples: List[SimState]
    energy_w: float


class ThermalEnvironment:
    """Room simulator driven by one joint action every *action_dt* seconds.

    *outdoor* holds outdoor temperatures spaced *series_dt* seconds apart;
    values between points are interpolated linearly.

    .. attribute:: monitor

        Optional callable receiving the intermediate sub-step states of
        every step.
    """

    def __init__(self, room: RoomConfig, space: ActionSpace, outdoor,
                 reward_params: Optional[RewardParams] = None,
                 steps_per_episode=96, action_dt=DEFAULT_ACTION_DT,
                 sub_dt=DEFAULT_SUB_DT, t_in_range=(15.0, 25.0),
                 series_dt=DEFAULT_ACTION_DT):
        self.room = room
        self.space = space
        self.outdoor = np.asarray(outdoor, dtype=np.float64)
        if len(self.outdoor) < 2 or check_naninf(self.outdoor):
            raise ConfigurationError(
                "Outdoor series needs at least two finite values.")
        self.reward_params = reward_params or RewardParams()
        self.steps_per_episode = int(steps_per_episode)
        self.action_dt = float(action_dt)
        self.sub_dt = float(sub_dt)
        self.series_dt = float(series_dt)
        self.t_in_range = t_in_range
        self.monitor = None

        self.max_steps = self.steps_per_episode
        self.offset = 0
        self.steps = 0
        self.state = None
        self.prev_action = 0

    def outdoor_at(self, clock):
        pos = self.offset + clock / self.series_dt
        return float(np.interp(pos, np.arange(len(self.outdoor)), self.outdoor))

    @property
    def max_offset(self):
        span = self.max_steps * self.action_dt / self.series_dt
        return max(0, int(np.floor(len(self.outdoor) - 1 - span)))

    def observation(self):
        return make_state_vector(self.state.t_out, self.state.t_in,
                                 self.prev_action, self.space)

    def reset(self, rng=None, t_in=None, offset=None, prev_action=0,
              max_steps=None):
        """Start an episode; random start temperature and offset need *rng*."""
        self.max_steps = self.steps_per_episode if max_steps is None \
            else int(max_steps)
        if offset is None:
            offset = 0 if rng is None else int(rng.integers(0, self.max_offset + 1))
        if t_in is None:
            if rng is None:
                t_in = self.reward_params.setpoint
            else:
                t_in = float(rng.uniform(*self.t_in_range))
        self.offset = int(offset)
        self.steps = 0
        self.prev_action = int(prev_action)
        self.state = SimState(t_in=float(t_in), t_out=self.outdoor_at(0.0))
        return self.observation()

    def _exhausted(self):
        next_pos = self.offset + (self.steps + 1) * self.action_dt / self.series_dt
        return next_pos > len(self.outdoor) - 1

    def step(self, action_index) -> EnvStep:
        if self.state is None:
            raise RuntimeError("Environment stepped before reset.")
        powers = self.space.powers(action_index)
        samples = simulate_action_interval(
            self.state, powers, self.room, self.action_dt, self.sub_dt,
            outdoor=self.outdoor_at)
        self.state = samples[-1]
        self.steps += 1
        self.prev_action = int(action_index)
        r = reward(self.state.t_in, powers.energy_w, self.reward_params)
        terminal = self.steps >= self.max_steps or self._exhausted()
        if self.monitor is not None:
            self.monitor(samples)
        return EnvStep(self.observation(), r, terminal, self.state, samples,
                       powers.energy_w)


def env_step(env: ThermalEnvironment, action_index):
    """Advance *env* by one action interval; returns ``(state, reward)``."""
    result = env.step(action_index)
    return result.state, result.reward


def make_env_factory(room, space, outdoor, reward_params=None,
                     cfg: Optional[AgentConfig] = None):
    cfg = cfg or AgentConfig()

    def factory():
        return ThermalEnvironment(
            room, space, outdoor, reward_params,
            steps_per_episode=cfg.steps_per_episode, action_dt=cfg.action_dt,
            sub_dt=cfg.sub_dt, t_in_range=(cfg.t_in_low, cfg.t_in_high))

    return factory

# }}}


# {{{ policy and training

def select_action(net: DuelingNetwork, x, epsilon_explore, rng):
    """Epsilon-greedy action; greedy ties go to the lowest index."""
    if not 0 <= epsilon_explore <= 1:
        raise ConfigurationError(f"Invalid exploration rate: {epsilon_explore}")
    if epsilon_explore > 0 and rng.random() < epsilon_explore:
        return int(rng.integers(net.n_actions))
    return int(np.argmax(forward(net, x)))


def train(env_factory, cfg: AgentConfig, seed=0,
          network: Optional[DuelingNetwork] = None,
          logmgr=None) -> Tuple[DuelingNetwork, List[float]]:
    """Train a dueling Q-network with replay and soft target updates.

    Returns the online network and the cumulative reward of each episode.
    The whole run is fixed by *seed*, *cfg* and the environment.
    """
    env = env_factory()
    seeds = np.random.SeedSequence(seed).spawn(4)
    env_rng, act_rng, replay_rng = (np.random.default_rng(s) for s in seeds[:3])
    net_seed = int(seeds[3].generate_state(1)[0])

    if network is None:
        network = DuelingNetwork(OBSERVATION_DIM, env.space.size,
                                 cfg.hidden_width, cfg.trunk_layers,
                                 seed=net_seed)
    elif network.n_actions != env.space.size:
        raise NetworkError(
            f"Network has {network.n_actions} actions, the environment "
            f"{env.space.size}.")
    if cfg.episodes == 0:
        return network, []

    target = network.copy()
    hard_update(network, target)
    opt = OptimizerState(lr=cfg.lr)
    buffer = ReplayBuffer(cfg.memory_size)

    quantities = None
    if logmgr:
        from thermadapt.logging_quantities import add_training_quantities
        quantities = add_training_quantities(logmgr)

    logger.info("#### Training control data: ####")
    logger.info(f"\tepisodes = {cfg.episodes}")
    logger.info(f"\tsteps_per_episode = {cfg.steps_per_episode}")
    logger.info(f"\tbatch_size = {cfg.batch_size}")
    logger.info(f"\tgamma = {cfg.gamma}, tau = {cfg.tau}, lr = {cfg.lr}")
    logger.info(f"\tactions = {env.space.size}, seed = {seed}")
    logger.info("#### Training control data: ####")

    n_steps = 0
    n_updates = 0
    rewards = []
    loss = 0.0
    for episode in range(cfg.episodes):
        x = env.reset(rng=env_rng)
        total = 0.0
        while True:
            if logmgr:
                logmgr.tick_before()
            eps = epsilon_at(n_steps, cfg)
            action = select_action(network, x, eps, act_rng)
            result = env.step(action)
            buffer.push(Transition(x, action, result.reward, result.x_next,
                                   result.terminal))
            n_steps += 1
            total += result.reward

            if len(buffer) >= cfg.batch_size:
                if quantities:
                    with quantities["t_update"].start_sub_timer():
                        loss = _update(network, target, opt, buffer, cfg,
                                       replay_rng)
                else:
                    loss = _update(network, target, opt, buffer, cfg, replay_rng)
                n_updates += 1
                if not np.isfinite(loss):
                    raise TrainingError(
                        f"Non-finite loss {loss} at episode {episode}, "
                        f"step {env.steps}, update {n_updates}.")

            if logmgr:
                quantities["epsilon"].set_quantity(eps)
                quantities["loss"].set_quantity(loss)
                quantities["episode_reward"].set_quantity(total)
                logmgr.tick_after()

            x = result.x_next
            if result.terminal:
                break

        rewards.append(total)
        if check_step(episode + 1, cfg.nstatus):
            logger.info(f"episode {episode + 1}/{cfg.episodes}: "
                        f"reward = {total:.2f}, epsilon = {eps:.4f}, "
                        f"loss = {loss:.4g}")

    network.trained = n_updates > 0
    return network, rewards


def _update(network, target, opt, buffer, cfg, rng):
    xs, actions, rewards, xs_next, terminal = buffer.sample(cfg.batch_size, rng)
    q_next, _ = target.forward_batch(xs_next)
    bootstrap = np.where(terminal, 0.0, cfg.gamma * q_next.max(axis=1))
    td_targets = rewards + bootstrap
    if check_naninf(td_targets):
        raise TrainingError("Non-finite TD targets.")
    loss, grads = td_backward_batch(network, xs, actions, td_targets)
    optimizer_step(network, grads, opt)
    soft_update(network, target, cfg.tau)
    return loss

# }}}


# {{{ evaluation

@dataclass
class EvaluationResult:
    cumulative_reward: float
    occupancy: float
    trace: pd.DataFrame

    @property
    def total_energy_wh(self):
        step_h = 1.0
        if len(self.trace) > 1:
            step_h = float(np.diff(self.trace["clock_s"]).mean()) / 3600.0
        return float(((self.trace["heater_w"] + self.trace["cooler_w"])
                      * step_h).sum())


def rollout(net: DuelingNetwork, env: ThermalEnvironment, n_steps,
            epsilon=0.0, rng=None):
    """Run *net* in *env* from its current state; return trace rows."""
    if net.n_actions != env.space.size:
        raise NetworkError(
            f"Model has {net.n_actions} actions but the devices give "
            f"{env.space.size}; expand the model to the current devices.")
    x = env.observation()
    rows = []
    for step in range(n_steps):
        action = select_action(net, x, epsilon, rng)
        result = env.step(action)
        powers = env.space.powers(action)
        rows.append({
            "step": step,
            "clock_s": result.state.clock,
            "t_out": result.state.t_out,
            "t_in": result.state.t_in,
            "action_index": action,
            "heater_w": powers.heater_w,
            "cooler_w": powers.cooler_w,
            "window": WINDOW_OPEN if powers.window_open else WINDOW_CLOSE,
            "reward": result.reward,
            "epsilon": epsilon,
        })
        x = result.x_next
        if result.terminal:
            break
    return rows


def evaluate(net: DuelingNetwork, env_factory, n_steps, t_in=None, offset=0,
             prev_action=0) -> EvaluationResult:
    """Greedy rollout of *net* for up to *n_steps* steps.

    Occupancy is the fraction of steps ending inside the comfort zone.
    """
    env = env_factory()
    env.reset(t_in=t_in, offset=offset, prev_action=prev_action,
              max_steps=n_steps)
    rows = rollout(net, env, n_steps)
    trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    if not len(trace):
        return EvaluationResult(0.0, 0.0, trace)
    params = env.reward_params
    occupancy = float(trace["t_in"].between(params.comfort_low,
                                            params.comfort_high).mean())
    return EvaluationResult(float(trace["reward"].sum()), occupancy, trace)


def compare_policies(net_a, net_b, env_factory, n_steps, **kwargs):
    """Paired greedy rollouts of two networks on identical conditions."""
    return (evaluate(net_a, env_factory, n_steps, **kwargs),
            evaluate(net_b, env_factory, n_steps, **kwargs))


def write_trace_csv(trace: pd.DataFrame, path):
    trace.to_csv(path, index=False, columns=TRACE_COLUMNS)


def write_reward_curve(rewards, path):
    pd.DataFrame({"episode": np.arange(len(rewards), dtype=int),
                  "cumulative_reward": np.asarray(rewards, dtype=np.float64)}
                 ).to_csv(path, index=False)

# }}}


__all__ = [
    "ActionSpace", "RewardParams", "AgentConfig", "Transition", "ReplayBuffer",
    "ThermalEnvironment", "EnvStep", "EvaluationResult", "TrainingError",
    "build_action_space", "extend_action_space", "encode", "decode",
    "make_state_vector", "reward", "epsilon_at", "select_action", "env_step",
    "make_env_factory", "train", "rollout", "evaluate", "compare_policies",
    "write_trace_csv", "write_reward_curve",
]

# vim: foldmethod=marker
