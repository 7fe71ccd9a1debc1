"""Tests of novelty detection, the adaptation strategies and the MAPE loop."""

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
import pytest

from thermadapt.adaptation import (
    AdaptationLoop, AnalyzerConfig, Event, NoveltyKind, Phase, SwitchFailure,
    architectural_adapt, detect_architectural, detect_contextual, mape_tick,
    model_switch, read_event_log, retrain, write_event_log)
from thermadapt.agent import (
    AgentConfig, RewardParams, build_action_space, make_state_vector)
from thermadapt.forecasting import ForecastError
from thermadapt.knowledge import (
    AgentModelEntry, KnowledgeStore, ModelId, ModelKind, synthetic_series)
from thermadapt.neural import DuelingNetwork, constant_policy_network, forward
from thermadapt.simutil import ConfigurationError
from thermadapt.thermal import Device, DeviceKind, RoomConfig, default_devices

ALL_OFF = 0
COOLER = 2
HEATER = 8

TINY_AGENT = AgentConfig(episodes=0, hidden_width=8, batch_size=4,
                         memory_size=100)


def _plug_heater():
    return Device("heater2", DeviceKind.HEATER, (50, 200, 250, 400))


def _entry(index, network, devices=None, label=None):
    space = build_action_space(devices or default_devices())
    return AgentModelEntry(ModelId(ModelKind.AGENT, index, label or f"a{index}"),
                           network, space)


def _store(*actions, globals_=()):
    store = KnowledgeStore(default_devices())
    for i, action in enumerate(actions, 1):
        store.register(_entry(i, constant_policy_network(2, 12, action)))
    for model in globals_:
        store.register(model)
    return store


def _loop(store, t_in=20.0, **cfg):
    return AdaptationLoop(store, RoomConfig(), default_devices(),
                          ModelId(ModelKind.AGENT, 1), AnalyzerConfig(**cfg),
                          TINY_AGENT, RewardParams(), seed=3, t_in=t_in)


def _run(loop, t_out, nticks):
    events = []
    for _ in range(nticks):
        events.extend(mape_tick(loop, t_out))
    return events


# {{{ detection

def test_identical_devices():
    assert detect_architectural(default_devices(), default_devices()) is None


def test_added_device():
    novelty = detect_architectural(default_devices(),
                                   default_devices() + [_plug_heater()], step=7)
    assert novelty.kind is NoveltyKind.ARCHITECTURAL
    assert novelty.added == (_plug_heater(),)
    assert novelty.detected_at == 7
    assert not novelty.is_contextual


def test_changed_levels():
    devices = default_devices()
    devices[0] = Device("heater", DeviceKind.HEATER, (0, 400))
    novelty = detect_architectural(default_devices(), devices)
    assert [d.id for d in novelty.changed] == ["heater"]
    assert novelty.added == () and novelty.removed == ()
    assert "changed heater" in novelty.describe()


def test_removed_device():
    novelty = detect_architectural(default_devices(), default_devices()[:2])
    assert [d.id for d in novelty.removed] == ["window"]


@pytest.mark.parametrize(("forecast", "recent", "expected"), [
    ([19.0, 20.0, 21.0], [20.0] * 12, None),
    ([21.0, 22.5, 23.5], [20.0] * 12, NoveltyKind.CONTEXTUAL_PROACTIVE),
    ([21.9, 21.8, 21.7], [23.0] * 12, NoveltyKind.CONTEXTUAL_REACTIVE),
    ([21.0, 21.0, 17.0], [23.0] * 12, NoveltyKind.CONTEXTUAL_PROACTIVE),
    ([21.9, 21.8, 21.7], [23.0] * 11 + [22.0], None),
    ([21.9, 21.8, 21.7], [23.0] * 5, None),
    (None, [23.0] * 12, NoveltyKind.CONTEXTUAL_REACTIVE),
    ([18.0, 20.0, 22.0], [17.9] * 12, NoveltyKind.CONTEXTUAL_REACTIVE),
])
def test_detect_contextual(forecast, recent, expected):
    novelty = detect_contextual(forecast, recent, AnalyzerConfig())
    if expected is None:
        assert novelty is None
    else:
        assert novelty.kind is expected
        assert novelty.is_contextual


def test_forecast_length_is_checked():
    with pytest.raises(ForecastError):
        detect_contextual([20.0, 21.0], [], AnalyzerConfig())


@pytest.mark.parametrize("data", [
    {"comfort_low": 22.0, "comfort_high": 18.0},
    {"reactive_window": 0},
    {"observe_steps": 0},
    {"goal_fraction": 0.0},
    {"background": "yes"},
    {"window": 12},
])
def test_invalid_analyzer_config(data):
    with pytest.raises(ConfigurationError):
        AnalyzerConfig.from_dict(data)

# }}}


# {{{ strategies

def _switch(candidates, t_out=30.0, t_in=25.0):
    return model_switch(candidates, build_action_space(default_devices()),
                        RoomConfig(), RewardParams(), t_in,
                        np.full(37, t_out), steps=12)


def test_switch_single_candidate():
    result = _switch([_entry(4, constant_policy_network(2, 12, HEATER))])
    assert result.model_id.index == 4
    assert list(result.rewards) == [4]


def test_switch_prefers_competent_agent():
    result = _switch([_entry(1, constant_policy_network(2, 12, HEATER)),
                      _entry(2, constant_policy_network(2, 12, COOLER))])
    assert result.model_id.index == 2
    assert result.rewards[2] > result.rewards[1]


def test_switch_ties_go_to_lowest_index():
    result = _switch([_entry(3, constant_policy_network(2, 12, COOLER)),
                      _entry(2, constant_policy_network(2, 12, COOLER))])
    assert result.model_id.index == 2
    assert result.rewards[2] == result.rewards[3]


def test_switch_without_compatible_candidate():
    big = default_devices() + [_plug_heater()]
    with pytest.raises(SwitchFailure):
        _switch([_entry(1, constant_policy_network(2, 48, 0), devices=big)])


def test_architectural_adapt_expands_every_network():
    entries = [_entry(1, DuelingNetwork(2, 12, hidden_width=8, seed=1)),
               _entry(2, constant_policy_network(2, 12, COOLER))]
    devices = default_devices() + [_plug_heater()]
    result = architectural_adapt(entries, devices)
    assert not result.skipped and not result.unchanged
    assert [e.id.index for e in result.updated] == [1, 2]
    for old, new in zip(entries, result.updated):
        assert new.network.n_actions == 48
        assert new.network.input_dim == old.network.input_dim + 36
        assert new.space.size == 48

    rng = np.random.default_rng(0)
    for _ in range(10):
        t_out, t_in = rng.uniform(0, 35, size=2)
        prev = int(rng.integers(12))
        for old, new in zip(entries, result.updated):
            q_old = forward(old.network,
                            make_state_vector(t_out, t_in, prev, old.space))
            q_new = forward(new.network,
                            make_state_vector(t_out, t_in, prev, new.space))
            assert int(np.argmax(q_new)) == int(np.argmax(q_old))


def test_architectural_adapt_empty_diff():
    entries = [_entry(1, constant_policy_network(2, 12, 0))]
    result = architectural_adapt(entries, default_devices())
    assert result.updated == [] and result.unchanged == entries


def test_architectural_adapt_skips_corrupt_models():
    good = _entry(1, constant_policy_network(2, 12, 0))
    bad = _entry(2, constant_policy_network(2, 12, 0))
    bad.network = DuelingNetwork(2, 5, hidden_width=4)
    result = architectural_adapt([good, bad],
                                 default_devices() + [_plug_heater()])
    assert [e.id.index for e in result.updated] == [1]
    assert result.skipped == [bad.id]


def test_retrain_without_episodes():
    glob = synthetic_series("summer", 2)
    model_id = ModelId(ModelKind.AGENT, 5, "retrained")
    entry = retrain(glob, TINY_AGENT, build_action_space(default_devices()),
                    RoomConfig(), RewardParams(), model_id, seed=1)
    assert entry.id == model_id
    assert not entry.trained
    assert entry.network.n_actions == 12

# }}}


# {{{ loop

def test_steady_regime_is_quiet():
    loop = _loop(_store(ALL_OFF))
    assert _run(loop, 20.0, 100) == []
    assert loop.phase is Phase.MONITORING
    assert len(loop.knowledge.log) == 100
    trace = loop.trace_frame()
    assert len(trace) == 100
    assert (trace["t_in"] == 20.0).all()
    assert trace["forecast_t_in"].iloc[:30].isna().all()
    assert trace["forecast_t_in"].iloc[30:].eq(20.0).all()


def test_reactive_trigger_after_full_window():
    loop = _loop(_store(ALL_OFF), t_in=23.0)
    assert _run(loop, 30.0, 11) == []
    events = mape_tick(loop, 30.0)
    assert [e.event_kind for e in events] == ["contextual_reactive",
                                              "model_switch"]
    assert all(e.tick == 11 for e in events)
    assert loop.phase is Phase.OBSERVING
    assert loop.state.remaining == 12


def test_escalation_order(caplog):
    summer = synthetic_series("summer", 2, index=1)
    loop = _loop(_store(ALL_OFF, globals_=[summer]), t_in=23.0,
                 observe_steps=2)
    with caplog.at_level(logging.WARNING):
        events = _run(loop, 30.0, 24)
    kinds = [e.event_kind for e in events]
    assert kinds == ["contextual_reactive", "model_switch", "goal_failure",
                     "alarm", "retrain", "retrain_complete", "goal_failure",
                     "alarmed"]
    assert [e.tick for e in events] == [11, 11, 17, 17, 17, 17, 23, 23]
    assert kinds.count("alarm") == 1
    assert loop.phase is Phase.ALARMED
    assert loop.state.active_model == ModelId(ModelKind.AGENT, 2)
    assert not loop.active_entry.trained
    assert loop.state.alarm_log == [(17, loop.state.alarm_log[0][1])]
    assert "ALARM at tick 17" in caplog.text

    # alarmed stays put on further contextual violations
    assert _run(loop, 30.0, 12) == []


def test_missing_global_model_alarms():
    loop = _loop(_store(ALL_OFF), t_in=23.0, observe_steps=2)
    events = _run(loop, 30.0, 24)
    assert [e.event_kind for e in events] == [
        "contextual_reactive", "model_switch", "goal_failure", "alarm",
        "alarmed"]
    assert events[-1].detail == "no global model available"
    assert len(loop.knowledge.list(ModelKind.AGENT)) == 1
    assert loop.phase is Phase.ALARMED


def test_non_finite_observation_is_reported():
    loop = _loop(_store(ALL_OFF))
    _run(loop, 20.0, 4)
    events = mape_tick(loop, float("nan"))
    assert [e.event_kind for e in events] == ["error"]
    assert _run(loop, 20.0, 4) == []
    assert loop.t_in == 20.0
    assert loop.phase is Phase.MONITORING


def test_device_plug_expands_models():
    loop = _loop(_store(ALL_OFF, COOLER))
    _run(loop, 20.0, 5)
    loop.set_devices(default_devices() + [_plug_heater()])
    events = mape_tick(loop, 20.0)
    assert [e.event_kind for e in events] == ["architectural_novelty",
                                              "expansion"]
    assert "added heater2" in events[0].detail
    assert loop.phase is Phase.MONITORING
    assert loop.space.size == 48
    assert all(e.network.n_actions == 48
               for e in loop.knowledge.list(ModelKind.AGENT))
    assert loop.knowledge.devices == loop.devices
    assert _run(loop, 20.0, 3) == []
    assert loop.trace[-1]["heater_w"] == 50.0


def test_device_removal_without_compatible_agent():
    loop = _loop(_store(ALL_OFF))
    _run(loop, 20.0, 2)
    loop.set_devices(default_devices()[:2])
    kinds = [e.event_kind for e in mape_tick(loop, 20.0)]
    assert kinds[:2] == ["architectural_novelty", "expansion_skipped"]
    assert kinds[-1] == "alarmed"
    assert loop.space.size == 6


def test_device_removal_activates_matching_agent():
    store = _store(ALL_OFF)
    small = default_devices()[:2]
    store.register(_entry(2, constant_policy_network(2, 6, 0), devices=small))
    loop = _loop(store)
    _run(loop, 20.0, 2)
    loop.set_devices(small)
    events = mape_tick(loop, 20.0)
    kinds = [e.event_kind for e in events]
    assert kinds == ["architectural_novelty", "expansion_skipped",
                     "device_model_switch"]
    assert "model_switch" not in kinds
    assert events[-1].detail == "agent-1 -> agent-2"
    assert loop.state.active_model == ModelId(ModelKind.AGENT, 2)
    assert loop.space.size == 6
    assert loop.phase is Phase.MONITORING


def test_background_retraining_is_adopted_on_deadline():
    pytest.importorskip("parsl")
    summer = synthetic_series("summer", 2, index=1)
    loop = _loop(_store(ALL_OFF, globals_=[summer]), t_in=23.0,
                 observe_steps=2, background=True, retrain_ticks=3)
    try:
        events = _run(loop, 30.0, 21)
    finally:
        loop.close()
    kinds = [(e.tick, e.event_kind) for e in events]
    assert (17, "retrain") in kinds
    assert (20, "retrain_complete") in kinds
    assert loop.phase is Phase.OBSERVING


def test_event_log_round_trip(tmp_path):
    events = [Event(0, "monitoring", "expansion", "agent-1: 48 actions, x"),
              Event(3, "observing", "goal_met", ""),
              Event(9, "alarmed", "alarm", 'quoted "reason"')]
    path = tmp_path / "events.csv"
    write_event_log(events, path)
    assert read_event_log(path) == events

# }}}

# vim: foldmethod=marker
