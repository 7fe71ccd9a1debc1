"""Tests of scenario validation and scripted adaptation runs."""

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

import copy
import os
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
import yaml

from thermadapt.adaptation import read_event_log
from thermadapt.agent import build_action_space, make_state_vector
from thermadapt.knowledge import (
    KnowledgeStore, ModelId, ModelKind, synthetic_series)
from thermadapt.neural import forward
from thermadapt.scenario import (
    ADAPTATION_KINDS, OutdoorDriver, load_scenario, run_scenario,
    scenario_from_dict)
from thermadapt.simutil import ConfigurationError

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..",
                            "scenarios")

SMALL = {
    "format_version": 1,
    "name": "small",
    "seed": 4,
    "duration": 60,
    "initial_t_in": 20.0,
    "globals": [
        {"label": "mild",
         "synthetic": {"kind": "winter", "days": 1, "mean": 14.0,
                       "amplitude": 3.0, "seed": 2}},
    ],
    "agents": [
        {"label": "trained", "train": {"global": "mild", "episodes": 2}},
        {"label": "all-off", "constant_action": 0},
    ],
    "outdoor": "mild",
    "agent": {"steps_per_episode": 8, "batch_size": 4, "memory_size": 100,
              "hidden_width": 8, "episodes": 0},
}


def _small(**overrides):
    data = copy.deepcopy(SMALL)
    data.update(overrides)
    return data


def test_small_scenario_outputs(tmp_path):
    summary, loop = run_scenario(scenario_from_dict(_small()), str(tmp_path))
    assert summary["ticks"] == 60
    for name in ("trace.csv", "events.csv", "summary.yaml",
                 "reward_curve-trained.csv"):
        assert os.path.exists(tmp_path / name)

    trace = pd.read_csv(tmp_path / "trace.csv")
    assert len(trace) == 60
    assert list(trace["tick"]) == list(range(60))
    assert read_event_log(tmp_path / "events.csv") == loop.events

    with open(tmp_path / "summary.yaml") as f:
        assert yaml.safe_load(f) == summary

    store = KnowledgeStore.load(str(tmp_path / "knowledge"))
    assert [e.id.label for e in store.list(ModelKind.AGENT)][:2] == [
        "trained", "all-off"]
    assert len(store.log) == 60


def test_scenario_runs_are_reproducible(tmp_path):
    scenario = scenario_from_dict(_small())
    run_scenario(scenario, str(tmp_path / "a"))
    run_scenario(scenario, str(tmp_path / "b"))
    for name in ("trace.csv", "events.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_scripted_device_plug():
    data = _small(agents=[{"label": "all-off", "constant_action": 0}],
                  duration=12,
                  script=[{"tick": 6, "action": "plug_device",
                           "device": {"id": "heater2", "kind": "heater",
                                      "levels": [50, 200, 250, 400]}}])
    summary, loop = run_scenario(scenario_from_dict(data))
    kinds = [(e.tick, e.event_kind) for e in loop.events]
    assert kinds[:3] == [(6, "script"), (6, "architectural_novelty"),
                         (6, "expansion")]
    assert summary["adaptations"]["expansion"] == 1
    assert loop.space.size == 48


def test_validation_reports_every_problem():
    data = _small(duration=0, colour="red", outdoor="tropics",
                  agents=[{"constant_action": 0},
                          {"label": "x", "train": {"global": "nowhere"}}],
                  script=[{"tick": 3, "action": "teleport"}])
    with pytest.raises(ConfigurationError) as excinfo:
        scenario_from_dict(data)
    message = str(excinfo.value)
    for fragment in ("duration", "colour", "agents[0]", "agents[1]",
                     "outdoor", "script[0]"):
        assert fragment in message


def test_bad_agent_settings_are_reported():
    with pytest.raises(ConfigurationError, match="agent"):
        scenario_from_dict(_small(agent={"gamma": 3.0}))


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_scenario(str(tmp_path / "absent.yaml"))


def test_outdoor_driver_repeats_series():
    model = synthetic_series("winter", 1, seed=0)
    driver = OutdoorDriver(model)
    assert driver(0.0) == pytest.approx(model.temperatures[0])
    assert driver(450.0) == pytest.approx(
        0.5 * (model.temperatures[0] + model.temperatures[1]))
    assert driver(96 * 900.0) == pytest.approx(model.temperatures[0])


# {{{ shipped scenarios

def _shipped(name, tmp_path):
    scenario = load_scenario(
        os.path.join(SCENARIO_DIR, name, "run_params.yaml"))
    return run_scenario(scenario, str(tmp_path))


def _kinds(events):
    return ["contextual" if e.event_kind.startswith("contextual_")
            else e.event_kind for e in events]


def _in_order(kinds, expected):
    remaining = iter(kinds)
    return all(kind in remaining for kind in expected)


def test_in_order_helper():
    kinds = ["contextual", "model_switch", "goal_met", "goal_failure"]
    assert _in_order(kinds, ["contextual", "goal_failure"])
    assert not _in_order(kinds, ["goal_failure", "model_switch"])


@pytest.mark.slow
def test_winter_steady_is_quiet(tmp_path):
    summary, loop = _shipped("winter_steady", tmp_path / "agent")
    assert summary["ticks"] == 576
    assert summary["adaptations"] == {kind: 0 for kind in ADAPTATION_KINDS}
    assert summary["alarms"] == 0
    assert "contextual" not in _kinds(loop.events)
    assert summary["final_phase"] == "monitoring"
    assert summary["occupancy"] >= 0.8

    scenario = load_scenario(os.path.join(SCENARIO_DIR, "winter_steady",
                                          "run_params.yaml"))
    scenario.agents = [{"label": "all-off", "constant_action": 0}]
    scenario.analyzer_cfg = replace(scenario.analyzer_cfg, max_retrains=0)
    idle, _ = run_scenario(scenario, str(tmp_path / "idle"))
    assert summary["occupancy"] > idle["occupancy"]


@pytest.mark.slow
def test_summer_flip_triggers_adaptation(tmp_path):
    summary, loop = _shipped("summer_flip", tmp_path)
    assert (288, "script") in [(e.tick, e.event_kind) for e in loop.events]
    after_flip = _kinds(e for e in loop.events if e.tick >= 288)
    assert _in_order(after_flip, ["contextual", "model_switch", "goal_failure",
                                  "alarm", "retrain", "retrain_complete"])
    assert summary["adaptations"]["model_switch"] >= 1
    assert summary["adaptations"]["retrain"] >= 1
    assert summary["alarms"] <= summary["adaptations"]["retrain"] + 1
    assert summary["occupancy_after_last_adaptation"] >= 0.75


@pytest.mark.slow
def test_device_plug_expands_agents(tmp_path):
    scenario = load_scenario(
        os.path.join(SCENARIO_DIR, "device_plug", "run_params.yaml"))
    summary, loop = run_scenario(scenario, str(tmp_path))
    ticks = [(e.tick, e.event_kind) for e in loop.events]
    assert [t for t, kind in ticks if kind == "expansion"] == [144]
    assert all(t >= 144 for t, kind in ticks if kind == "retrain")
    assert summary["adaptations"]["expansion"] == 1
    assert all(e.network.n_actions == 48
               for e in loop.knowledge.list(ModelKind.AGENT))
    assert summary["occupancy_after_last_adaptation"] >= 0.8

    # the same run stopped before the plug holds the unexpanded networks
    _, before = run_scenario(replace(scenario, duration=144, script=[]))
    original = before.knowledge.get(ModelId(ModelKind.AGENT, 1)).network
    assert original.n_actions == 12
    space = build_action_space(scenario.devices)

    trace = loop.trace_frame()
    contextual = [t for t, kind in ticks if kind.startswith("contextual_")]
    last = contextual[0] if contextual else len(trace) - 1
    checked = 0
    for k in range(147, last + 1, 3):
        prev, row = trace.iloc[k - 1], trace.iloc[k]
        assert row["active_model"] == "agent-1"
        x = make_state_vector(row["t_out"], prev["t_in"],
                              int(prev["action_index"]), space)
        assert row["action_index"] == int(np.argmax(forward(original, x)))
        checked += 1
    assert checked

# }}}

# vim: foldmethod=marker
