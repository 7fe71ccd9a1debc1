"""Knowledge shared by the adaptation loop.

The store keeps the agent models, the global environment models (outdoor
temperature series used to generate training episodes), the live
time-varying forecaster, the registered devices and the observation log.

On disk a store is a directory::

    store.yaml                 manifest (format_version, entries, devices)
    models/agent-<index>.bin   serialized Q-networks
    models/time_varying.yaml   forecaster window and coefficients
    series/global-<index>.csv  timestamp,temperature_c
    log.csv                    timestamp,t_in,t_out,action_index

.. autoclass:: ModelKind
.. autoclass:: ModelId
.. autoclass:: GlobalModel
.. autoclass:: AgentModelEntry
.. autoclass:: ObservationLog
.. autoclass:: KnowledgeStore
.. autofunction:: ingest_hourly_csv
.. autofunction:: synthetic_series
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
import os
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml

from thermadapt.agent import OBSERVATION_DIM, ActionSpace
from thermadapt.forecasting import ArimaConfig, ArimaModel, TimeVaryingModel
from thermadapt.neural import DuelingNetwork, load_network, save_network
from thermadapt.thermal import Device, device_from_dict, device_to_dict

logger = logging.getLogger(__name__)

STORE_FORMAT_VERSION = 1
SERIES_DT = 900.0
POINTS_PER_DAY = 96
REPLICATION = 3

SYNTHETIC_REGIMES = {
    "summer": (30.0, 10.0),
    "winter": (5.0, 7.0),
}


class SeriesError(RuntimeError):
    """Malformed or gapped outdoor temperature series."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class KnowledgeError(RuntimeError):
    pass


class ModelNotFoundError(KnowledgeError):
    pass


class DuplicateModelError(KnowledgeError):
    pass


# {{{ identifiers and entries

class ModelKind(enum.Enum):
    AGENT = "agent"
    GLOBAL = "global"
    TIME_VARYING = "time_varying"


_KIND_ORDER = {ModelKind.AGENT: 0, ModelKind.GLOBAL: 1, ModelKind.TIME_VARYING: 2}


@dataclass(frozen=True)
class ModelId:
    """Registry key ``(kind, index)``; the label is descriptive only."""

    kind: ModelKind
    index: int
    label: str = field(default="", compare=False)

    @property
    def key(self):
        return (_KIND_ORDER[self.kind], self.index)

    def __str__(self):
        return f"{self.kind.value}-{self.index}"


@dataclass
class GlobalModel:
    """Outdoor temperature series on a uniform 900 s grid."""

    id: ModelId
    timestamps: np.ndarray
    temperatures: np.ndarray
    season: str = "unknown"

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        self.temperatures = np.asarray(self.temperatures, dtype=np.float64)
        n = len(self.timestamps)
        if n != len(self.temperatures) or not n:
            raise SeriesError("Timestamps and temperatures must be non-empty "
                              "and of equal length.")
        steps = np.diff(self.timestamps)
        if np.any(steps != SERIES_DT):
            raise SeriesError(f"Series {self.id} is not on a {SERIES_DT:g} s grid.")

    def __len__(self):
        return len(self.temperatures)

    @property
    def mean_temperature(self):
        return float(np.mean(self.temperatures))

    def to_frame(self):
        return pd.DataFrame({"timestamp": self.timestamps,
                             "temperature_c": self.temperatures})


@dataclass
class AgentModelEntry:
    """A Q-network with the action space it was built for."""

    id: ModelId
    network: DuelingNetwork
    space: ActionSpace
    episodes: int = 0
    seed: int = 0
    reward_summary: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.network.n_actions != self.space.size:
            raise KnowledgeError(
                f"Agent {self.id}: network has {self.network.n_actions} actions, "
                f"descriptor {self.space.size}.")
        if self.network.state_dim != OBSERVATION_DIM:
            raise KnowledgeError(
                f"Agent {self.id}: unexpected state width "
                f"{self.network.state_dim}.")

    @property
    def trained(self):
        return self.network.trained


def summarize_rewards(rewards):
    """First/last decile means of a reward curve."""
    rewards = np.asarray(rewards, dtype=np.float64)
    if not len(rewards):
        return {}
    k = max(1, len(rewards) // 10)
    return {"episodes": int(len(rewards)),
            "first_decile_mean": float(rewards[:k].mean()),
            "last_decile_mean": float(rewards[-k:].mean())}

# }}}


# {{{ outdoor series

def _season_from_name(path):
    stem = os.path.basename(str(path)).lower()
    for season in ("summer", "winter", "spring", "autumn", "fall"):
        if season in stem:
            return season
    return "unknown"


def ingest_hourly_csv(path, season=None, index=1) -> GlobalModel:
    """Read hourly outdoor temperatures and replicate them to 15 minutes.

    Each hourly value is emitted three times at 900 s spacing, so the
    returned series is a step function starting at the first timestamp.
    Errors cite the file line number (the header is line 1).
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise SeriesError(f"No such series file: {path}") from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise SeriesError(f"Cannot parse {path}: {exc}") from None

    missing = {"timestamp", "temperature_c"} - set(frame.columns)
    if missing:
        raise SeriesError("Missing columns: {}".format(", ".join(sorted(missing))),
                          line=1)
    if not len(frame):
        raise SeriesError(f"Series file {path} has no rows.")

    temps = pd.to_numeric(frame["temperature_c"].str.strip(), errors="coerce")
    bad = temps.isna() | ~np.isfinite(temps)
    if bad.any():
        row = int(np.argmax(bad.to_numpy()))
        raise SeriesError(
            "invalid temperature {!r}".format(frame["temperature_c"].iloc[row]),
            line=row + 2)

    stamps = _parse_timestamps(frame["timestamp"])
    if len(stamps) > 1:
        gaps = np.diff(stamps)
        wrong = np.flatnonzero(gaps != 3600.0)
        if len(wrong):
            row = int(wrong[0]) + 1
            raise SeriesError(
                f"expected hourly spacing, got {gaps[wrong[0]]:g} s",
                line=row + 2)

    values = np.repeat(temps.to_numpy(dtype=np.float64), REPLICATION)
    timestamps = stamps[0] + SERIES_DT * np.arange(len(values))
    if season is None:
        season = _season_from_name(path)
    model_id = ModelId(ModelKind.GLOBAL, index,
                       os.path.splitext(os.path.basename(str(path)))[0])
    logger.info(f"Ingested {len(frame)} hourly rows from {path} "
                f"into {len(values)} points ({season})")
    return GlobalModel(model_id, timestamps, values, season)


def _parse_timestamps(column):
    numeric = pd.to_numeric(column.str.strip(), errors="coerce")
    if not numeric.isna().any():
        return numeric.to_numpy(dtype=np.float64)
    parsed = pd.to_datetime(column.str.strip(), errors="coerce", utc=True)
    if parsed.isna().any():
        row = int(np.argmax(parsed.isna().to_numpy()))
        raise SeriesError("invalid timestamp {!r}".format(column.iloc[row]),
                          line=row + 2)
    return (parsed - pd.Timestamp(0, tz="UTC")).dt.total_seconds()\
        .to_numpy(dtype=np.float64)


def synthetic_series(kind, days, seed=0, mean=None, amplitude=None, noise=1.0,
                     index=1, label=None) -> GlobalModel:
    """Daily sinusoid plus Gaussian noise, 96 points per day.

    The daily maximum falls at 15:00. *mean* and *amplitude* override the
    regime defaults of *kind*.
    """
    if kind not in SYNTHETIC_REGIMES:
        raise SeriesError(f"Unknown synthetic regime: {kind}")
    if days < 1:
        raise SeriesError(f"Invalid number of days: {days}")
    default_mean, default_amplitude = SYNTHETIC_REGIMES[kind]
    mean = default_mean if mean is None else float(mean)
    amplitude = default_amplitude if amplitude is None else float(amplitude)

    n = POINTS_PER_DAY * int(days)
    timestamps = SERIES_DT * np.arange(n)
    hours = timestamps / 3600.0
    rng = np.random.default_rng(seed)
    temps = (mean + amplitude * np.sin(2.0 * np.pi * (hours - 9.0) / 24.0)
             + noise * rng.standard_normal(n))
    model_id = ModelId(ModelKind.GLOBAL, index, label or f"synthetic-{kind}")
    return GlobalModel(model_id, timestamps, temps, kind)

# }}}


# {{{ observation log

class ObservationEntry(NamedTuple):
    timestamp: float
    t_in: float
    t_out: float
    action_index: int


LOG_COLUMNS = list(ObservationEntry._fields)


class ObservationLog:
    """Append-only record of monitored observations."""

    def __init__(self, entries: Sequence[ObservationEntry] = ()):
        self._entries: List[ObservationEntry] = []
        for entry in entries:
            self.append(entry)

    def __len__(self):
        return len(self._entries)

    def __getitem__(self, i):
        return self._entries[i]

    def __iter__(self):
        return iter(self._entries)

    def append(self, entry: ObservationEntry):
        entry = ObservationEntry(float(entry.timestamp), float(entry.t_in),
                                 float(entry.t_out), int(entry.action_index))
        if self._entries and entry.timestamp <= self._entries[-1].timestamp:
            raise KnowledgeError(
                f"Non-monotone observation timestamp {entry.timestamp}.")
        self._entries.append(entry)

    def recent(self, n) -> Tuple[List[ObservationEntry], bool]:
        """Last *n* entries in order, and whether fewer than *n* exist."""
        if n <= 0:
            return [], False
        return list(self._entries[-n:]), len(self._entries) < n

    def to_frame(self):
        return pd.DataFrame(self._entries, columns=LOG_COLUMNS)

    @classmethod
    def from_frame(cls, frame):
        return cls(ObservationEntry(*row) for row in
                   frame[LOG_COLUMNS].itertuples(index=False, name=None))

# }}}


# {{{ store

class KnowledgeStore:
    """Registry of agent and global models plus the monitored history.

    Only the adaptation loop writes to a store.
    """

    def __init__(self, devices: Sequence[Device] = (),
                 arima_cfg: Optional[ArimaConfig] = None):
        self._agents: Dict[int, AgentModelEntry] = {}
        self._globals: Dict[int, GlobalModel] = {}
        self.devices: List[Device] = list(devices)
        self.time_varying = TimeVaryingModel(arima_cfg)
        self.log = ObservationLog()

    def _table(self, kind):
        if kind is ModelKind.AGENT:
            return self._agents
        if kind is ModelKind.GLOBAL:
            return self._globals
        raise KnowledgeError(f"No registry for {kind.value} models.")

    def register(self, entry):
        table = self._table(entry.id.kind)
        if entry.id.index in table:
            raise DuplicateModelError(f"Model {entry.id} is already registered.")
        table[entry.id.index] = entry
        logger.info(f"Registered {entry.id} ({entry.id.label})")
        return entry.id

    def update(self, entry):
        """Replace a registered entry with the same id."""
        table = self._table(entry.id.kind)
        if entry.id.index not in table:
            raise ModelNotFoundError(f"Model {entry.id} is not registered.")
        table[entry.id.index] = entry

    def get(self, model_id: ModelId):
        table = self._table(model_id.kind)
        try:
            return table[model_id.index]
        except KeyError:
            raise ModelNotFoundError(
                f"Model {model_id} is not registered.") from None

    def list(self, kind: ModelKind):
        table = self._table(kind)
        return [table[i] for i in sorted(table)]

    def next_index(self, kind: ModelKind):
        table = self._table(kind)
        return max(table, default=0) + 1

    def find(self, kind: ModelKind, label):
        for entry in self.list(kind):
            if entry.id.label == label:
                return entry
        raise ModelNotFoundError(f"No {kind.value} model labelled {label!r}.")

    def nearest_global(self, mean_t_out) -> Optional[GlobalModel]:
        """Global model whose mean temperature is closest to *mean_t_out*."""
        candidates = self.list(ModelKind.GLOBAL)
        if not candidates:
            return None
        return min(candidates,
                   key=lambda g: abs(g.mean_temperature - mean_t_out))

    def recent_observations(self, n):
        return self.log.recent(n)

    # {{{ persistence

    def save(self, directory):
        model_dir = os.path.join(directory, "models")
        series_dir = os.path.join(directory, "series")
        for d in (model_dir, series_dir):
            if not os.path.exists(d):
                os.makedirs(d)

        agents = []
        for entry in self.list(ModelKind.AGENT):
            filename = f"models/agent-{entry.id.index}.bin"
            save_network(entry.network, os.path.join(directory, filename))
            agents.append({
                "index": entry.id.index,
                "label": entry.id.label,
                "file": filename,
                "descriptor": entry.space.descriptor(),
                "episodes": entry.episodes,
                "seed": entry.seed,
                "trained": entry.trained,
                "reward_summary": dict(entry.reward_summary),
            })

        globals_ = []
        for model in self.list(ModelKind.GLOBAL):
            filename = f"series/global-{model.id.index}.csv"
            model.to_frame().to_csv(os.path.join(directory, filename),
                                    index=False)
            globals_.append({"index": model.id.index, "label": model.id.label,
                             "season": model.season, "file": filename})

        tv = self.time_varying
        tv_data = {
            "config": {"p": tv.cfg.p, "q": tv.cfg.q,
                       "window_size": tv.cfg.window_size,
                       "horizon": tv.cfg.horizon, "max_iter": tv.cfg.max_iter,
                       "rtol": tv.cfg.rtol},
            "window": [float(v) for v in tv.window],
            "model": None if tv.model is None else tv.model.to_dict(),
        }
        with open(os.path.join(model_dir, "time_varying.yaml"), "w") as f:
            yaml.dump(tv_data, f)

        self.log.to_frame().to_csv(os.path.join(directory, "log.csv"),
                                   index=False)

        manifest = {
            "format_version": STORE_FORMAT_VERSION,
            "devices": [device_to_dict(dev) for dev in self.devices],
            "agents": agents,
            "globals": globals_,
            "time_varying": "models/time_varying.yaml",
            "log": "log.csv",
        }
        with open(os.path.join(directory, "store.yaml"), "w") as f:
            yaml.dump(manifest, f)
        logger.info(f"Saved knowledge store to {directory}")

    @classmethod
    def load(cls, directory):
        manifest_path = os.path.join(directory, "store.yaml")
        if not os.path.exists(manifest_path):
            raise KnowledgeError(f"No store manifest in {directory}.")
        with open(manifest_path) as f:
            manifest = yaml.load(f, Loader=yaml.FullLoader)
        version = manifest.get("format_version")
        if version != STORE_FORMAT_VERSION:
            raise KnowledgeError(
                f"Unsupported store format version {version}, "
                f"expected {STORE_FORMAT_VERSION}.")

        def _path(rel, what):
            path = os.path.join(directory, rel)
            if not os.path.exists(path):
                raise KnowledgeError(f"Missing file {rel} for {what}.")
            return path

        tv_path = _path(manifest["time_varying"], "the time-varying model")
        with open(tv_path) as f:
            tv_data = yaml.load(f, Loader=yaml.FullLoader)
        store = cls([device_from_dict(d) for d in manifest.get("devices", [])],
                    ArimaConfig(**tv_data["config"]))
        store.time_varying.window.extend(tv_data["window"])
        if tv_data["model"] is not None:
            store.time_varying.model = ArimaModel.from_dict(tv_data["model"])

        for item in manifest.get("agents", []):
            model_id = ModelId(ModelKind.AGENT, int(item["index"]), item["label"])
            network = load_network(_path(item["file"], model_id))
            space = ActionSpace.from_descriptor(item["descriptor"])
            store.register(AgentModelEntry(
                model_id, network, space, episodes=int(item["episodes"]),
                seed=int(item["seed"]),
                reward_summary=dict(item.get("reward_summary") or {})))

        for item in manifest.get("globals", []):
            model_id = ModelId(ModelKind.GLOBAL, int(item["index"]), item["label"])
            frame = pd.read_csv(_path(item["file"], model_id),
                                float_precision="round_trip")
            store.register(GlobalModel(model_id, frame["timestamp"].to_numpy(),
                                       frame["temperature_c"].to_numpy(),
                                       item["season"]))

        frame = pd.read_csv(_path(manifest["log"], "the observation log"),
                            float_precision="round_trip")
        store.log = ObservationLog.from_frame(frame)
        return store

    # }}}

# }}}

# vim: foldmethod=marker
