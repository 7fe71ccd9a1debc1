"""Scenario files and the scenario runner.

A scenario is a YAML file (``format_version: 1``)::

    name: summer_flip
    seed: 7
    duration: 864              # 5-minute ticks
    room: room.yaml            # path or inline mapping, optional
    devices: [...]             # optional, replaces the room's devices
    reward: {setpoint: 20.0}   # optional reward parameter overrides
    initial_t_in: 20.0
    globals:                   # outdoor series, first one drives tick 0
      - {label: winter, synthetic: {kind: winter, days: 7}}
      - {label: summer, csv: summer.csv}
    agents:                    # the first one starts active
      - {label: winter-agent, train: {global: winter, episodes: 150}}
      - {label: weak, constant_action: 0}
      - {label: stored, path: model.bin}
    outdoor: winter            # optional, global driving tick 0
    script:
      - {tick: 288, action: switch_outdoor, global: summer}
      - {tick: 400, action: plug_device, device: {id: h2, kind: heater,
                                                  levels: [50, 200, 250, 400]}}
      - {tick: 600, action: unplug_device, device: h2}
    agent: {...}               # agent configuration overrides
    analyzer: {...}            # analyzer configuration overrides

Relative paths are resolved against the scenario file's directory.

.. autoclass:: Scenario
.. autofunction:: load_scenario
.. autofunction:: run_scenario
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

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List

import numpy as np
import yaml

from thermadapt.adaptation import (
    AdaptationLoop, AnalyzerConfig, write_event_log)
from thermadapt.agent import (
    OBSERVATION_DIM, AgentConfig, RewardParams, build_action_space,
    make_env_factory, train, write_reward_curve)
from thermadapt.knowledge import (
    AgentModelEntry, KnowledgeStore, ModelId, ModelKind, SeriesError,
    ingest_hourly_csv, summarize_rewards, synthetic_series)
from thermadapt.neural import constant_policy_network, load_network
from thermadapt.simutil import ConfigurationError
from thermadapt.thermal import (
    RoomConfig, default_devices, device_from_dict, load_room_config,
    room_from_dict)

logger = logging.getLogger(__name__)

SCENARIO_FORMAT_VERSION = 1

SCRIPT_ACTIONS = ("switch_outdoor", "plug_device", "unplug_device")

ADAPTATION_KINDS = ("expansion", "model_switch", "device_model_switch",
                    "retrain")

ADAPTED_KINDS = ("expansion", "model_switch", "device_model_switch",
                 "retrain_complete")


@dataclass
class Scenario:
    """A validated scenario; see the module documentation for the keys."""

    name: str
    seed: int
    duration: int
    room: RoomConfig
    devices: List
    reward: RewardParams
    initial_t_in: float
    globals: List[Dict[str, Any]]
    agents: List[Dict[str, Any]]
    outdoor: str
    script: List[Dict[str, Any]] = field(default_factory=list)
    agent_cfg: AgentConfig = field(default_factory=AgentConfig)
    analyzer_cfg: AnalyzerConfig = field(default_factory=AnalyzerConfig)
    base_dir: str = "."


# {{{ loading and validation

def _resolve(base_dir, path):
    path = str(path)
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def _collect(errors, what, func, *args):
    try:
        return func(*args)
    except (ConfigurationError, SeriesError, TypeError, ValueError) as exc:
        errors.append(f"{what}: {exc}")
        return None


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file.

    Every problem found is reported in a single :class:`ConfigurationError`.
    """
    try:
        with open(path) as f:
            data = yaml.load(f, Loader=yaml.FullLoader)
    except FileNotFoundError:
        raise ConfigurationError(f"No such scenario file: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Cannot parse {path}: {exc}") from None
    return scenario_from_dict(data, os.path.dirname(os.path.abspath(path)))


def scenario_from_dict(data, base_dir=".") -> Scenario:
    errors = []
    if not isinstance(data, dict):
        raise ConfigurationError("Scenario must be a mapping.")

    version = data.get("format_version")
    if version != SCENARIO_FORMAT_VERSION:
        errors.append(f"format_version: expected {SCENARIO_FORMAT_VERSION}, "
                      f"got {version}")
    known = {"format_version", "name", "seed", "duration", "room", "devices",
             "reward", "initial_t_in", "globals", "agents", "outdoor",
             "script", "agent", "analyzer"}
    for key in sorted(set(data) - known):
        errors.append(f"{key}: unknown scenario key")

    name = str(data.get("name", "scenario"))
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        errors.append(f"seed: expected an integer, got {seed!r}")
        seed = 0
    duration = data.get("duration")
    if not isinstance(duration, int) or duration < 1:
        errors.append(f"duration: expected a positive tick count, got {duration!r}")
        duration = 0

    room, devices = RoomConfig(), default_devices()
    room_data = data.get("room")
    if isinstance(room_data, str):
        room_path = _resolve(base_dir, room_data)
        if not os.path.exists(room_path):
            errors.append(f"room: no such file {room_path}")
        else:
            loaded = _collect(errors, "room", load_room_config, room_path)
            if loaded:
                room, devices = loaded
    elif room_data is not None:
        loaded = _collect(errors, "room", room_from_dict, room_data)
        if loaded:
            room, devices = loaded
    if data.get("devices") is not None:
        parsed = [_collect(errors, f"devices[{i}]", device_from_dict, d)
                  for i, d in enumerate(data["devices"])]
        if all(d is not None for d in parsed):
            devices = parsed
    ids = [dev.id for dev in devices]
    if len(set(ids)) != len(ids):
        errors.append(f"devices: duplicate ids {ids}")

    reward = _collect(errors, "reward",
                      lambda d: RewardParams(**{k: float(v) for k, v in d.items()}),
                      data.get("reward") or {}) or RewardParams()
    agent_cfg = _collect(errors, "agent", AgentConfig.from_dict,
                         data.get("agent")) or AgentConfig()
    analyzer_cfg = _collect(errors, "analyzer", AnalyzerConfig.from_dict,
                            data.get("analyzer")) or AnalyzerConfig()
    initial_t_in = _collect(errors, "initial_t_in", float,
                            data.get("initial_t_in", reward.setpoint))

    global_labels = []
    globals_ = data.get("globals") or []
    if not globals_:
        errors.append("globals: at least one outdoor series is required")
    for i, item in enumerate(globals_):
        where = f"globals[{i}]"
        if not isinstance(item, dict) or "label" not in item:
            errors.append(f"{where}: needs a label")
            continue
        global_labels.append(item["label"])
        if ("synthetic" in item) == ("csv" in item):
            errors.append(f"{where}: give exactly one of synthetic, csv")
        elif "csv" in item and not os.path.exists(_resolve(base_dir, item["csv"])):
            errors.append(f"{where}: no such file {item['csv']}")
        elif "synthetic" in item:
            spec = item["synthetic"] or {}
            if spec.get("kind") not in ("winter", "summer"):
                errors.append(f"{where}: synthetic kind must be winter or summer")
            if int(spec.get("days", 1)) < 1:
                errors.append(f"{where}: days must be >= 1")
    if len(set(global_labels)) != len(global_labels):
        errors.append(f"globals: duplicate labels {global_labels}")

    agents = data.get("agents") or []
    if not agents:
        errors.append("agents: at least one agent is required")
    agent_labels = []
    for i, item in enumerate(agents):
        where = f"agents[{i}]"
        if not isinstance(item, dict) or "label" not in item:
            errors.append(f"{where}: needs a label")
            continue
        agent_labels.append(item["label"])
        sources = [k for k in ("train", "constant_action", "path") if k in item]
        if len(sources) != 1:
            errors.append(f"{where}: give exactly one of train, constant_action, "
                          "path")
        elif "train" in item:
            if (item["train"] or {}).get("global") not in global_labels:
                errors.append(f"{where}: train.global must name a global")
        elif "path" in item and not os.path.exists(_resolve(base_dir, item["path"])):
            errors.append(f"{where}: no such file {item['path']}")
    if len(set(agent_labels)) != len(agent_labels):
        errors.append(f"agents: duplicate labels {agent_labels}")

    outdoor = data.get("outdoor", global_labels[0] if global_labels else None)
    if outdoor not in global_labels:
        errors.append(f"outdoor: {outdoor!r} is not a global label")

    script = data.get("script") or []
    for i, item in enumerate(script):
        where = f"script[{i}]"
        if not isinstance(item, dict):
            errors.append(f"{where}: must be a mapping")
            continue
        tick = item.get("tick")
        if not isinstance(tick, int) or not 0 <= tick < max(duration, 1):
            errors.append(f"{where}: tick {tick!r} outside [0, {duration})")
        action = item.get("action")
        if action not in SCRIPT_ACTIONS:
            errors.append(f"{where}: unknown action {action!r}")
        elif action == "switch_outdoor" and item.get("global") not in global_labels:
            errors.append(f"{where}: global must name a global")
        elif action == "plug_device":
            _collect(errors, where, device_from_dict, item.get("device") or {})
        elif action == "unplug_device" and not isinstance(item.get("device"), str):
            errors.append(f"{where}: device must be a device id")

    if errors:
        raise ConfigurationError("Invalid scenario:\n  " + "\n  ".join(errors))

    return Scenario(name=name, seed=seed, duration=duration, room=room,
                    devices=list(devices), reward=reward,
                    initial_t_in=initial_t_in, globals=list(globals_),
                    agents=list(agents), outdoor=outdoor,
                    script=sorted(script, key=lambda s: s["tick"]),
                    agent_cfg=agent_cfg, analyzer_cfg=analyzer_cfg,
                    base_dir=base_dir)

# }}}


# {{{ running

def build_globals(scenario: Scenario, seed):
    models = []
    for index, item in enumerate(scenario.globals, start=1):
        if "csv" in item:
            model = ingest_hourly_csv(_resolve(scenario.base_dir, item["csv"]),
                                      season=item.get("season"), index=index)
            model = replace(model, id=ModelId(ModelKind.GLOBAL, index,
                                              item["label"]))
        else:
            spec = dict(item["synthetic"])
            model = synthetic_series(
                spec.pop("kind"), int(spec.pop("days", 1)),
                seed=int(spec.pop("seed", seed + index)), index=index,
                label=item["label"], **spec)
        models.append(model)
    return models


def build_agents(scenario: Scenario, store: KnowledgeStore, seed, out_dir=None):
    space = build_action_space(scenario.devices)
    for index, item in enumerate(scenario.agents, start=1):
        model_id = ModelId(ModelKind.AGENT, index, item["label"])
        if "train" in item:
            spec = dict(item["train"])
            glob = store.find(ModelKind.GLOBAL, spec.pop("global"))
            agent_seed = int(spec.pop("seed", seed + 100 * index))
            cfg = replace(scenario.agent_cfg, **spec) if spec \
                else scenario.agent_cfg
            factory = make_env_factory(scenario.room, space, glob.temperatures,
                                       scenario.reward, cfg)
            network, rewards = train(factory, cfg, agent_seed)
            if out_dir:
                write_reward_curve(rewards, os.path.join(
                    out_dir, f"reward_curve-{item['label']}.csv"))
            entry = AgentModelEntry(model_id, network, space,
                                    episodes=cfg.episodes, seed=agent_seed,
                                    reward_summary=summarize_rewards(rewards))
        elif "constant_action" in item:
            network = constant_policy_network(OBSERVATION_DIM, space.size,
                                              int(item["constant_action"]))
            entry = AgentModelEntry(model_id, network, space)
        else:
            network = load_network(_resolve(scenario.base_dir, item["path"]))
            entry = AgentModelEntry(model_id, network, space)
        store.register(entry)


class OutdoorDriver:
    """Outdoor temperature at a clock time from the current global series.

    Series repeat periodically past their end.
    """

    def __init__(self, model, series_dt=900.0):
        self.series_dt = series_dt
        self.switch(model)

    def switch(self, model):
        self.model = model
        self._grid = np.arange(len(model.temperatures), dtype=np.float64)

    def __call__(self, clock):
        n = len(self.model.temperatures)
        return float(np.interp(clock / self.series_dt, self._grid,
                               self.model.temperatures, period=n))


def _occupancy(t_in, cfg: AnalyzerConfig):
    t_in = np.asarray(t_in, dtype=np.float64)
    if not len(t_in):
        return None
    return float(np.mean((t_in >= cfg.comfort_low) & (t_in <= cfg.comfort_high)))


def summarize_run(scenario: Scenario, loop: AdaptationLoop, trace):
    counts = {kind: 0 for kind in ADAPTATION_KINDS}
    last_adaptation = None
    for event in loop.events:
        if event.event_kind in counts:
            counts[event.event_kind] += 1
        if event.event_kind in ADAPTED_KINDS:
            last_adaptation = event.tick
    energy_wh = float(((trace["heater_w"] + trace["cooler_w"])
                       * loop.cfg.tick_dt / 3600.0).sum())
    after = None
    if last_adaptation is not None:
        after = _occupancy(trace["t_in"][trace["tick"] > last_adaptation],
                           loop.cfg)
    return {
        "name": scenario.name,
        "seed": scenario.seed,
        "ticks": int(len(trace)),
        "occupancy": _occupancy(trace["t_in"], loop.cfg),
        "occupancy_after_last_adaptation": after,
        "total_energy_wh": energy_wh,
        "adaptations": counts,
        "alarms": len(loop.state.alarm_log),
        "final_phase": loop.state.phase.value,
        "final_active_model": str(loop.state.active_model),
    }


def run_scenario(scenario: Scenario, out_dir=None, seed=None, logmgr=None):
    """Run *scenario*; write ``trace.csv``, ``events.csv`` and ``summary.yaml``.

    Returns the summary mapping and the finished loop.
    """
    seed = scenario.seed if seed is None else int(seed)
    if out_dir and not os.path.exists(out_dir):
        os.makedirs(out_dir)

    logger.info("#### Scenario control data: ####")
    logger.info(f"\tname = {scenario.name}")
    logger.info(f"\tseed = {seed}")
    logger.info(f"\tduration = {scenario.duration} ticks")
    logger.info(f"\tdevices = {[dev.id for dev in scenario.devices]}")
    logger.info(f"\tagents = {[a['label'] for a in scenario.agents]}")
    logger.info(f"\tglobals = {[g['label'] for g in scenario.globals]}")
    logger.info("#### Scenario control data: ####")

    store = KnowledgeStore(scenario.devices)
    for model in build_globals(scenario, seed):
        store.register(model)
    build_agents(scenario, store, seed, out_dir)

    outdoor = OutdoorDriver(store.find(ModelKind.GLOBAL, scenario.outdoor))
    loop = AdaptationLoop(store, scenario.room, scenario.devices,
                          store.list(ModelKind.AGENT)[0].id,
                          cfg=scenario.analyzer_cfg,
                          agent_cfg=scenario.agent_cfg,
                          reward_params=scenario.reward, seed=seed,
                          t_in=scenario.initial_t_in, logmgr=logmgr)

    script = list(scenario.script)
    try:
        for tick in range(scenario.duration):
            while script and script[0]["tick"] == tick:
                _apply_script(loop, outdoor, store, script.pop(0), tick)
            loop.tick(outdoor(tick * loop.cfg.tick_dt))
    finally:
        loop.close()

    trace = loop.trace_frame()
    summary = summarize_run(scenario, loop, trace)
    if out_dir:
        trace.to_csv(os.path.join(out_dir, "trace.csv"), index=False)
        write_event_log(loop.events, os.path.join(out_dir, "events.csv"))
        with open(os.path.join(out_dir, "summary.yaml"), "w") as f:
            yaml.dump(summary, f)
        store.save(os.path.join(out_dir, "knowledge"))
    logger.info(f"Scenario {scenario.name}: occupancy = {summary['occupancy']}, "
                f"energy = {summary['total_energy_wh']:.1f} Wh, "
                f"adaptations = {summary['adaptations']}")
    return summary, loop


def _apply_script(loop, outdoor, store, item, tick):
    action = item["action"]
    if action == "switch_outdoor":
        outdoor.switch(store.find(ModelKind.GLOBAL, item["global"]))
        loop.emit(tick, "script", f"outdoor series -> {item['global']}")
    elif action == "plug_device":
        device = device_from_dict(item["device"])
        loop.set_devices([dev for dev in loop.devices if dev.id != device.id]
                         + [device])
        loop.emit(tick, "script", f"plugged {device.id}")
    else:
        loop.set_devices([dev for dev in loop.devices
                          if dev.id != item["device"]])
        loop.emit(tick, "script", f"unplugged {item['device']}")

# }}}

# vim: foldmethod=marker
