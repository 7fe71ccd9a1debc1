"""Monitor-analyze-plan-execute loop over the knowledge store.

Every tick the loop receives a 5-minute outdoor observation, advances the
room, logs the observation and refits the forecasters. The active agent
picks an action every ``ticks_per_action`` ticks. Device changes are handled
first by expanding the stored networks; otherwise the indoor forecast and
the recent indoor history are checked for contextual novelty, which leads
to a model switch, an observation window and, when the goal is still
unmet, an alarm and retraining on the closest global model.

.. autoclass:: AnalyzerConfig
.. autoclass:: Novelty
.. autoclass:: AdaptationState
.. autoclass:: AdaptationLoop
.. autofunction:: detect_architectural
.. autofunction:: detect_contextual
.. autofunction:: model_switch
.. autofunction:: architectural_adapt
.. autofunction:: retrain
.. autofunction:: mape_tick
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

import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from thermadapt.agent import (
    ActionSpace, AgentConfig, RewardParams, ThermalEnvironment,
    build_action_space, extend_action_space, make_env_factory,
    make_state_vector, rollout, train)
from thermadapt.forecasting import ForecastError, TimeVaryingModel
from thermadapt.knowledge import (
    AgentModelEntry, GlobalModel, KnowledgeStore, ModelId, ModelKind,
    ObservationEntry, summarize_rewards)
from thermadapt.neural import expand, forward
from thermadapt.simutil import (
    ConfigurationError, check_naninf, configure_dataclass)
from thermadapt.thermal import (
    Device, RoomConfig, SimState, WINDOW_CLOSE, WINDOW_OPEN,
    simulate_action_interval)

logger = logging.getLogger(__name__)

EVENT_COLUMNS = ["tick", "phase", "event_kind", "detail"]

LOOP_TRACE_COLUMNS = ["tick", "clock_s", "t_out", "t_in", "action_index",
                      "heater_w", "cooler_w", "window", "phase",
                      "active_model", "forecast_t_in"]


class SwitchFailure(RuntimeError):
    """No stored agent fits the current action space."""

    pass


# {{{ types

class Phase(enum.Enum):
    MONITORING = "monitoring"
    OBSERVING = "observing"
    RETRAINING = "retraining"
    ALARMED = "alarmed"


class NoveltyKind(enum.Enum):
    ARCHITECTURAL = "architectural"
    CONTEXTUAL_PROACTIVE = "contextual_proactive"
    CONTEXTUAL_REACTIVE = "contextual_reactive"


@dataclass(frozen=True)
class Novelty:
    """A detected novelty.

    Architectural novelties carry the device diff, proactive ones the
    forecast that left the comfort zone.
    """

    kind: NoveltyKind
    detected_at: int
    added: Tuple[Device, ...] = ()
    changed: Tuple[Device, ...] = ()
    removed: Tuple[Device, ...] = ()
    forecast: Tuple[float, ...] = ()

    @property
    def is_contextual(self):
        return self.kind is not NoveltyKind.ARCHITECTURAL

    def describe(self):
        if self.kind is NoveltyKind.ARCHITECTURAL:
            parts = []
            for name, devs in (("added", self.added), ("changed", self.changed),
                               ("removed", self.removed)):
                if devs:
                    parts.append("{} {}".format(
                        name, ",".join(dev.id for dev in devs)))
            return "; ".join(parts)
        if self.kind is NoveltyKind.CONTEXTUAL_PROACTIVE:
            return "forecast " + " ".join(f"{v:.2f}" for v in self.forecast)
        return "indoor temperature outside comfort zone"


@dataclass(frozen=True)
class AnalyzerConfig:
    """Analyzer and planner settings.

    *reactive_window* counts monitoring ticks, *observe_steps* counts agent
    steps. With *retrain_ticks* > 0 and *background* set, retraining runs
    on a parsl thread pool and its result is adopted that many ticks later.
    """

    comfort_low: float = 18.0
    comfort_high: float = 22.0
    reactive_window: int = 12
    forecast_horizon: int = 3
    observe_steps: int = 12
    goal_fraction: float = 0.75
    ticks_per_action: int = 3
    tick_dt: float = 300.0
    max_retrains: int = 1
    retrain_ticks: int = 0
    background: bool = False

    def __post_init__(self):
        if not self.comfort_low < self.comfort_high:
            raise ConfigurationError(
                "Comfort zone needs comfort_low < comfort_high.")
        for name in ("reactive_window", "forecast_horizon", "observe_steps",
                     "ticks_per_action"):
            if getattr(self, name) < 1:
                raise ConfigurationError(
                    "Invalid analyzer parameter {}: {}".format(
                        name, getattr(self, name)))
        if not 0 < self.goal_fraction <= 1:
            raise ConfigurationError(f"Invalid goal fraction: {self.goal_fraction}")
        if not self.tick_dt > 0:
            raise ConfigurationError(f"Invalid tick length: {self.tick_dt}")
        if self.max_retrains < 0 or self.retrain_ticks < 0:
            raise ConfigurationError("Retraining limits must be >= 0.")

    @classmethod
    def from_dict(cls, data):
        return configure_dataclass(cls, data, "analyzer")

    @property
    def action_dt(self):
        return self.ticks_per_action * self.tick_dt

    def in_comfort(self, t_in):
        return self.comfort_low <= t_in <= self.comfort_high


@dataclass
class AdaptationState:
    active_model: ModelId
    phase: Phase = Phase.MONITORING
    remaining: int = 0
    alarm_log: List[Tuple[int, str]] = field(default_factory=list)
    retrains: int = 0
    alarm_raised: bool = False
    observed: List[bool] = field(default_factory=list)


class Event(NamedTuple):
    tick: int
    phase: str
    event_kind: str
    detail: str


def write_event_log(events: Sequence[Event], path):
    pd.DataFrame(list(events), columns=EVENT_COLUMNS).to_csv(path, index=False)


def read_event_log(path) -> List[Event]:
    frame = pd.read_csv(path, dtype={"tick": int, "phase": str,
                                     "event_kind": str, "detail": str},
                        keep_default_na=False)
    return [Event(int(t), p, k, d) for t, p, k, d
            in frame[EVENT_COLUMNS].itertuples(index=False, name=None)]

# }}}


# {{{ analyzer

def detect_architectural(registered_devices: Sequence[Device],
                         current_devices: Sequence[Device],
                         step=0) -> Optional[Novelty]:
    """Diff two device lists by id."""
    registered = {dev.id: dev for dev in registered_devices}
    current = {dev.id: dev for dev in current_devices}
    added = tuple(dev for dev in current_devices if dev.id not in registered)
    changed = tuple(dev for dev in current_devices
                    if dev.id in registered and dev != registered[dev.id])
    removed = tuple(dev for dev in registered_devices if dev.id not in current)
    if not (added or changed or removed):
        return None
    return Novelty(NoveltyKind.ARCHITECTURAL, step, added=added,
                   changed=changed, removed=removed)


def detect_contextual(forecast, recent, cfg: AnalyzerConfig,
                      step=0) -> Optional[Novelty]:
    """Check the indoor forecast, then the recent indoor temperatures.

    The forecast fires when its farthest point leaves the comfort zone; the
    history fires when each of the last ``reactive_window`` values is outside
    it. A *None* forecast or a short history skips the respective check.
    """
    if forecast is not None:
        forecast = np.asarray(forecast, dtype=np.float64)
        if len(forecast) != cfg.forecast_horizon:
            raise ForecastError(
                f"Forecast has {len(forecast)} points, expected "
                f"{cfg.forecast_horizon}.")
        if not cfg.in_comfort(forecast[-1]):
            return Novelty(NoveltyKind.CONTEXTUAL_PROACTIVE, step,
                           forecast=tuple(float(v) for v in forecast))

    recent = [float(v) for v in recent]
    if len(recent) >= cfg.reactive_window:
        window = recent[-cfg.reactive_window:]
        if not any(cfg.in_comfort(v) for v in window):
            return Novelty(NoveltyKind.CONTEXTUAL_REACTIVE, step)
    return None

# }}}


# {{{ planner

class SwitchResult(NamedTuple):
    model_id: ModelId
    rewards: Dict[int, float]


def model_switch(candidates: Sequence[AgentModelEntry], space: ActionSpace,
                 room: RoomConfig, reward_params: RewardParams, t_in,
                 outdoor, steps, prev_action=0, action_dt=900.0,
                 sub_dt=300.0, series_dt=300.0) -> SwitchResult:
    """Replay every compatible candidate and pick the best.

    Each candidate acts greedily for *steps* agent steps from *t_in*, with
    *outdoor* (spaced *series_dt* seconds) as the outdoor temperature. The
    greatest cumulative reward wins; ties go to the lowest index.
    """
    best_id = None
    best_reward = -np.inf
    rewards = {}
    for entry in sorted(candidates, key=lambda e: e.id.index):
        if entry.space != space:
            continue
        env = ThermalEnvironment(room, space, outdoor, reward_params,
                                 steps_per_episode=steps, action_dt=action_dt,
                                 sub_dt=sub_dt, series_dt=series_dt)
        env.reset(t_in=t_in, offset=0, prev_action=prev_action)
        total = float(sum(row["reward"]
                          for row in rollout(entry.network, env, steps)))
        rewards[entry.id.index] = total
        if total > best_reward:
            best_id, best_reward = entry.id, total
    if best_id is None:
        raise SwitchFailure("No stored agent matches the current devices.")
    return SwitchResult(best_id, rewards)


class ArchitecturalResult(NamedTuple):
    updated: List[AgentModelEntry]
    unchanged: List[AgentModelEntry]
    skipped: List[ModelId]


def architectural_adapt(entries: Sequence[AgentModelEntry],
                        devices: Sequence[Device]) -> ArchitecturalResult:
    """Expand every network to the joint action space of *devices*."""
    updated, unchanged, skipped = [], [], []
    for entry in entries:
        try:
            entry.validate()
            space = extend_action_space(entry.space, devices)
        except Exception as exc:
            logger.warning(f"Skipping {entry.id}: {exc}")
            skipped.append(entry.id)
            continue
        if space is None:
            logger.warning(f"Skipping {entry.id}: its actions do not map onto "
                           "the current devices")
            skipped.append(entry.id)
            continue
        extra = space.size - entry.space.size
        if extra == 0 and space == entry.space:
            unchanged.append(entry)
            continue
        network = expand(entry.network, extra, extra)
        updated.append(AgentModelEntry(entry.id, network, space,
                                       episodes=entry.episodes, seed=entry.seed,
                                       reward_summary=entry.reward_summary))
    return ArchitecturalResult(updated, unchanged, skipped)


def retrain(global_model: GlobalModel, cfg: AgentConfig, space: ActionSpace,
            room: RoomConfig, reward_params: RewardParams, model_id: ModelId,
            seed=0) -> AgentModelEntry:
    """Train a fresh agent on episodes drawn from *global_model*."""
    factory = make_env_factory(room, space, global_model.temperatures,
                               reward_params, cfg)
    network, rewards = train(factory, cfg, seed)
    return AgentModelEntry(model_id, network, space, episodes=cfg.episodes,
                           seed=seed, reward_summary=summarize_rewards(rewards))


class BackgroundRetrainer:
    """Runs :func:`retrain` on a parsl thread pool."""

    label = "retrain_threads"

    def __init__(self, max_threads=1):
        import parsl
        from parsl.config import Config
        from parsl.executors.threads import ThreadPoolExecutor

        config = Config(executors=[
            ThreadPoolExecutor(max_threads=max_threads, label=self.label)
        ])
        self._dfk = parsl.load(config)
        self._app = parsl.python_app(retrain, data_flow_kernel=self._dfk,
                                     executors=[self.label])

    def submit(self, *args, **kwargs):
        return self._app(*args, **kwargs)

    def close(self):
        import parsl
        self._dfk.cleanup()
        parsl.clear()

# }}}


# {{{ loop

class AdaptationLoop:
    """Single-threaded MAPE loop acting on a simulated room.

    .. attribute:: devices

        Devices physically present; the knowledge store holds the devices
        the stored agents were last adapted to.
    """

    def __init__(self, knowledge: KnowledgeStore, room: RoomConfig,
                 devices: Sequence[Device], active_model: ModelId,
                 cfg: Optional[AnalyzerConfig] = None,
                 agent_cfg: Optional[AgentConfig] = None,
                 reward_params: Optional[RewardParams] = None,
                 seed=0, t_in=20.0, logmgr=None):
        self.knowledge = knowledge
        self.room = room
        self.devices = list(devices)
        self.cfg = cfg or AnalyzerConfig()
        self.agent_cfg = agent_cfg or AgentConfig()
        self.reward_params = reward_params or RewardParams()
        self.seed = seed

        if not knowledge.devices:
            knowledge.devices = list(self.devices)
        entry = knowledge.get(active_model)
        if list(entry.space.devices) != list(knowledge.devices):
            raise ConfigurationError(
                f"Active model {active_model} was built for other devices.")
        self.space = entry.space
        self.state = AdaptationState(active_model=active_model)

        self.outdoor_model = TimeVaryingModel(knowledge.time_varying.cfg)
        self.t_in = float(t_in)
        self.t_out = None
        self.action = 0
        self.tick_count = 0
        self.events: List[Event] = []
        self.trace: List[dict] = []
        self._forecast_next = np.nan
        self._pending = None
        self._pending_due = None
        self._retrainer = None

        self.logmgr = logmgr
        self._quantities = None
        if logmgr:
            from thermadapt.logging_quantities import add_loop_quantities
            self._quantities = add_loop_quantities(logmgr)

    # {{{ bookkeeping

    @property
    def phase(self):
        return self.state.phase

    @property
    def active_entry(self) -> AgentModelEntry:
        return self.knowledge.get(self.state.active_model)

    def emit(self, tick, kind, detail=""):
        event = Event(tick, self.state.phase.value, kind, detail)
        self.events.append(event)
        logger.info(f"tick {tick}: {kind} [{event.phase}] {detail}")
        return event

    def _alarm(self, tick, reason):
        if self.state.alarm_raised:
            return
        self.state.alarm_raised = True
        self.state.alarm_log.append((tick, reason))
        logger.warning(f"ALARM at tick {tick}: {reason}")
        self.emit(tick, "alarm", reason)

    def set_devices(self, devices: Sequence[Device]):
        """Change the physically present devices."""
        self.devices = list(devices)

    def close(self):
        if self._retrainer is not None:
            self._retrainer.close()
            self._retrainer = None

    # }}}

    def tick(self, t_out) -> List[Event]:
        """Process one 5-minute observation; returns the events it emitted.

        A non-finite observation is reported and replaced by the previous
        one; without a previous observation the tick is skipped.
        """
        tick = self.tick_count
        nevents = len(self.events)
        t_out = float(t_out)
        if not np.isfinite(t_out):
            self.emit(tick, "error", f"non-finite outdoor temperature {t_out}")
            if self.t_out is None:
                self.tick_count += 1
                return self.events[nevents:]
            t_out = self.t_out
        self.t_out = t_out
        if self.logmgr:
            self.logmgr.tick_before()

        try:
            if tick % self.cfg.ticks_per_action == 0:
                self._act()
            self._advance()
        except Exception as exc:
            logger.error(f"tick {tick}: execution failed: {exc}")
            self.emit(tick, "error", f"execute: {exc}")

        self.knowledge.log.append(ObservationEntry(
            (tick + 1) * self.cfg.tick_dt, self.t_in, self.t_out, self.action))
        forecast_used = self._forecast_next

        try:
            self._monitor()
            if tick % self.cfg.ticks_per_action == self.cfg.ticks_per_action - 1:
                self._agent_step_done(tick)
            self._analyze_and_plan(tick)
        except Exception as exc:
            logger.error(f"tick {tick}: adaptation failed: {exc}")
            self.emit(tick, "error", f"{type(exc).__name__}: {exc}")

        self._record(tick, forecast_used)
        if self.logmgr:
            self._quantities["t_in"].set_quantity(self.t_in)
            self._quantities["t_out"].set_quantity(self.t_out)
            self._quantities["phase"].set_quantity(
                list(Phase).index(self.state.phase))
            self.logmgr.tick_after()
        self.tick_count += 1
        return self.events[nevents:]

    # {{{ execute and monitor

    def _act(self):
        entry = self.active_entry
        if entry.space != self.space:
            logger.error(f"Active model {entry.id} does not match the devices; "
                         "holding the first joint action")
            self.action = 0
            return
        x = make_state_vector(self.t_out, self.t_in, self.action, self.space)
        self.action = int(np.argmax(forward(entry.network, x)))

    def _advance(self):
        state = SimState(t_in=self.t_in, t_out=self.t_out)
        powers = self.space.powers(self.action)
        (new_state,) = simulate_action_interval(
            state, powers, self.room, self.cfg.tick_dt, self.cfg.tick_dt)
        self.t_in = new_state.t_in

    def _monitor(self):
        tv = self.knowledge.time_varying
        tv.push(self.t_in)
        self.outdoor_model.push(self.t_out)
        nxt = tv.forecast(1)
        self._forecast_next = np.nan if nxt is None else float(nxt[0])

    def _record(self, tick, forecast_used):
        powers = self.space.powers(self.action)
        self.trace.append({
            "tick": tick,
            "clock_s": (tick + 1) * self.cfg.tick_dt,
            "t_out": self.t_out,
            "t_in": self.t_in,
            "action_index": self.action,
            "heater_w": powers.heater_w,
            "cooler_w": powers.cooler_w,
            "window": WINDOW_OPEN if powers.window_open else WINDOW_CLOSE,
            "phase": self.state.phase.value,
            "active_model": str(self.state.active_model),
            "forecast_t_in": forecast_used,
        })

    def trace_frame(self):
        return pd.DataFrame(self.trace, columns=LOOP_TRACE_COLUMNS)

    # }}}

    # {{{ analyze and plan

    def _agent_step_done(self, tick):
        if self.state.phase is not Phase.OBSERVING:
            return
        self.state.observed.append(self.cfg.in_comfort(self.t_in))
        self.state.remaining -= 1
        if self.state.remaining <= 0:
            self._end_observation(tick)

    def _analyze_and_plan(self, tick):
        if self.state.phase is Phase.RETRAINING and tick >= self._pending_due:
            self._collect_retrain(tick)

        novelty = detect_architectural(self.knowledge.devices, self.devices, tick)
        if novelty is not None:
            self.emit(tick, "architectural_novelty", novelty.describe())
            self._adapt_architecture(tick)
            return

        if self.state.phase is not Phase.MONITORING:
            return
        forecast = self.knowledge.time_varying.forecast(self.cfg.forecast_horizon)
        if forecast is not None and check_naninf(forecast):
            forecast = None
        entries, _ = self.knowledge.recent_observations(self.cfg.reactive_window)
        novelty = detect_contextual(forecast, [e.t_in for e in entries],
                                    self.cfg, tick)
        if novelty is not None:
            self.emit(tick, novelty.kind.value, novelty.describe())
            self._switch(tick)

    def _adapt_architecture(self, tick):
        result = architectural_adapt(
            self.knowledge.list(ModelKind.AGENT), self.devices)
        for entry in result.updated:
            self.knowledge.update(entry)
        for model_id in result.skipped:
            self.emit(tick, "expansion_skipped", str(model_id))
        self.knowledge.devices = list(self.devices)

        if result.updated:
            sizes = ", ".join(f"{e.id}: {e.network.n_actions} actions"
                              for e in result.updated)
            self.emit(tick, "expansion", sizes)

        active = self.active_entry
        if list(active.space.devices) == self.devices:
            self.space = active.space
            return

        self.space = build_action_space(self.devices)
        self.action = 0
        compatible = [e for e in self.knowledge.list(ModelKind.AGENT)
                      if e.space == self.space]
        if compatible:
            self.state.active_model = compatible[0].id
            self.emit(tick, "device_model_switch",
                      f"{active.id} -> {compatible[0].id}")
            return
        self._escalate(tick, f"no agent matches the devices after removing or "
                             f"changing levels of {active.id}'s devices")

    def _replay_outdoor(self):
        horizon = self.cfg.reactive_window * self.cfg.ticks_per_action
        fc = self.outdoor_model.forecast(horizon)
        if fc is None or check_naninf(fc):
            fc = np.full(horizon, self.t_out)
        return np.concatenate(([self.t_out], fc))

    def _switch(self, tick):
        old = self.state.active_model
        try:
            result = model_switch(
                self.knowledge.list(ModelKind.AGENT), self.space, self.room,
                self.reward_params, self.t_in, self._replay_outdoor(),
                self.cfg.reactive_window, prev_action=self.action,
                action_dt=self.cfg.action_dt, sub_dt=self.cfg.tick_dt,
                series_dt=self.cfg.tick_dt)
        except SwitchFailure as exc:
            self.emit(tick, "switch_failure", str(exc))
            self._escalate(tick, str(exc))
            return
        scores = ", ".join(f"agent-{i}={r:.2f}" for i, r in result.rewards.items())
        self.state.active_model = result.model_id
        self.emit(tick, "model_switch", f"{old} -> {result.model_id} ({scores})")
        self._start_observing()

    def _start_observing(self):
        self.state.phase = Phase.OBSERVING
        self.state.remaining = self.cfg.observe_steps
        self.state.observed = []

    def _end_observation(self, tick):
        fraction = float(np.mean(self.state.observed))
        detail = (f"{self.state.active_model}: {fraction:.2f} of "
                  f"{len(self.state.observed)} steps in comfort")
        self.state.observed = []
        if fraction >= self.cfg.goal_fraction:
            self.state.phase = Phase.MONITORING
            self.state.retrains = 0
            self.state.alarm_raised = False
            self.emit(tick, "goal_met", detail)
            return
        self.emit(tick, "goal_failure", detail)
        self._escalate(tick, f"goal unmet after {self.cfg.observe_steps} steps "
                             f"({detail})")

    def _escalate(self, tick, reason):
        if self.state.retrains >= self.cfg.max_retrains:
            self._alarm(tick, reason)
            self.state.phase = Phase.ALARMED
            self.emit(tick, "alarmed", "retraining limit reached")
            return

        entries, _ = self.knowledge.recent_observations(self.cfg.reactive_window)
        mean_t_out = float(np.mean([e.t_out for e in entries])) if entries \
            else self.t_out
        glob = self.knowledge.nearest_global(mean_t_out)
        if glob is None:
            self._alarm(tick, reason)
            self.state.phase = Phase.ALARMED
            self.emit(tick, "alarmed", "no global model available")
            return

        self._alarm(tick, reason)
        self.state.retrains += 1
        k = self.knowledge.next_index(ModelKind.AGENT)
        model_id = ModelId(ModelKind.AGENT, k, f"retrained-{glob.id.label}")
        seed = int(np.random.SeedSequence([self.seed, k]).generate_state(1)[0])
        self.emit(tick, "retrain",
                  f"{model_id} on {glob.id} ({glob.id.label}, "
                  f"mean {glob.mean_temperature:.1f} C), "
                  f"{self.agent_cfg.episodes} episodes")
        args = (glob, self.agent_cfg, self.space, self.room,
                self.reward_params, model_id, seed)

        if self.cfg.background and self.cfg.retrain_ticks > 0:
            if self._retrainer is None:
                self._retrainer = BackgroundRetrainer()
            self._pending = self._retrainer.submit(*args)
            self._pending_due = tick + self.cfg.retrain_ticks
            self.state.phase = Phase.RETRAINING
            return

        if self._quantities:
            with self._quantities["t_retrain"].start_sub_timer():
                entry = retrain(*args)
        else:
            entry = retrain(*args)
        self._integrate(tick, entry)

    def _collect_retrain(self, tick):
        future, self._pending = self._pending, None
        self._integrate(tick, future.result())

    def _integrate(self, tick, entry: AgentModelEntry):
        if entry.space != self.space:
            result = architectural_adapt([entry], self.devices)
            if not result.updated:
                raise SwitchFailure(
                    f"Retrained {entry.id} does not fit the devices.")
            entry = result.updated[0]
        self.knowledge.register(entry)
        self.state.active_model = entry.id
        self.emit(tick, "retrain_complete",
                  f"{entry.id} registered, trained={entry.trained}")
        self._start_observing()

    # }}}


def mape_tick(loop: AdaptationLoop, observation) -> List[Event]:
    """Feed one outdoor temperature observation to *loop*."""
    return loop.tick(observation)

# }}}

# vim: foldmethod=marker
