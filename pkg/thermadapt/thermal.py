"""Single-room thermal simulator.

The room air is a single thermal mass exchanging heat with the outside
through the four vertical walls, the windows and air infiltration. Heaters
add power, coolers remove it, and an open window raises the infiltration
rate.

.. autoclass:: RoomConfig
.. autoclass:: Device
.. autoclass:: SimState
.. autofunction:: conductance
.. autofunction:: step_temperature
.. autofunction:: simulate_action_interval
.. autofunction:: load_room_config
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
import math
from dataclasses import dataclass, fields, replace
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import yaml

from thermadapt.simutil import ConfigurationError, health_check

logger = logging.getLogger(__name__)

WINDOW_CLOSE = "CLOSE"
WINDOW_OPEN = "OPEN"
WINDOW_LEVELS = (WINDOW_CLOSE, WINDOW_OPEN)

DEFAULT_ACTION_DT = 900.0
DEFAULT_SUB_DT = 300.0


class DeviceKind(enum.Enum):
    HEATER = "heater"
    COOLER = "cooler"
    WINDOW = "window"


@dataclass(frozen=True)
class RoomConfig:
    """Room geometry and envelope. Defaults are the reference room.

    .. attribute:: wall_r
    .. attribute:: window_r

        Thermal resistances in m²·K/W.

    .. attribute:: ach

        Air changes per hour with the window closed.

    .. attribute:: ach_window_open

        Air changes per hour with the window open.
    """

    width_m: float = 5.0
    height_m: float = 3.0
    depth_m: float = 3.0
    wall_r: float = 3.6
    window_r: float = 0.176
    ach: float = 1.7
    window_area_m2: float = 1.0
    n_windows: int = 1
    air_density: float = 1.225
    air_specific_heat: float = 1005.0
    ach_window_open: float = 8.0

    def __post_init__(self):
        for name in ("width_m", "height_m", "depth_m", "wall_r", "window_r",
                     "air_density", "air_specific_heat"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(
                    "Invalid room parameter {}: {}".format(name,
                                                           getattr(self, name)))
        if self.ach < 0 or self.ach_window_open < 0:
            raise ConfigurationError("Air changes per hour must be >= 0.")
        if self.window_area_m2 < 0 or self.n_windows < 0:
            raise ConfigurationError("Window area and count must be >= 0.")
        if self.window_area_m2 * self.n_windows >= self.total_wall_area:
            raise ConfigurationError(
                "Window area {} exceeds wall area {}.".format(
                    self.window_area_m2 * self.n_windows, self.total_wall_area))

    @property
    def total_wall_area(self):
        return 2.0 * (self.width_m * self.height_m + self.depth_m * self.height_m)

    @property
    def volume(self):
        return self.width_m * self.height_m * self.depth_m

    @property
    def heat_capacity(self):
        """Heat capacity of the room air in J/K."""
        return self.air_density * self.air_specific_heat * self.volume


@dataclass(frozen=True)
class Device:
    """An actuator with discrete settings.

    Heater and cooler levels are watts; window levels are
    ``("CLOSE", "OPEN")``.
    """

    id: str
    kind: DeviceKind
    levels: Tuple

    def __post_init__(self):
        if not self.levels:
            raise ConfigurationError(f"Device {self.id} has no levels.")
        if self.kind is DeviceKind.WINDOW:
            if tuple(self.levels) != WINDOW_LEVELS:
                raise ConfigurationError(
                    f"Window {self.id} levels must be {WINDOW_LEVELS}.")
        else:
            levels = [float(lvl) for lvl in self.levels]
            if any(lvl < 0 for lvl in levels):
                raise ConfigurationError(f"Device {self.id} has negative power.")
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise ConfigurationError(
                    f"Device {self.id} levels must be strictly increasing.")
            object.__setattr__(self, "levels", tuple(levels))
        object.__setattr__(self, "levels", tuple(self.levels))


class DevicePowers(NamedTuple):
    heater_w: float
    cooler_w: float
    window_open: bool

    @property
    def energy_w(self):
        return self.heater_w + self.cooler_w


@dataclass(frozen=True)
class SimState:
    t_in: float
    t_out: float
    step_index: int = 0
    clock: float = 0.0


def default_devices():
    """Return the reference heater, cooler and window."""
    return [
        Device("heater", DeviceKind.HEATER, (0.0, 200.0, 400.0)),
        Device("cooler", DeviceKind.COOLER, (0.0, 400.0)),
        Device("window", DeviceKind.WINDOW, WINDOW_LEVELS),
    ]


def powers_for(devices: Sequence[Device], settings: Sequence) -> DevicePowers:
    """Combine one setting per device into the powers acting on the room.

    Heater powers add, cooler powers add, and the room counts as ventilated
    when any window is open.
    """
    if len(devices) != len(settings):
        raise ConfigurationError("One setting per device is required.")
    heater_w = 0.0
    cooler_w = 0.0
    window_open = False
    for device, setting in zip(devices, settings):
        if device.kind is DeviceKind.HEATER:
            heater_w += float(setting)
        elif device.kind is DeviceKind.COOLER:
            cooler_w += float(setting)
        else:
            window_open = window_open or setting == WINDOW_OPEN
    return DevicePowers(heater_w, cooler_w, window_open)


# {{{ physics

def conductance(room: RoomConfig, n_windows: Optional[int] = None,
                window_open: bool = False) -> float:
    """Return the total heat loss coefficient UA in W/K.

    Conduction through walls and windows (area over R-value) plus
    infiltration at the effective air change rate.
    """
    if n_windows is None:
        n_windows = room.n_windows
    window_area = n_windows * room.window_area_m2
    wall_area = room.total_wall_area - window_area
    if wall_area <= 0:
        raise ConfigurationError(
            "Non-positive effective wall area: {}".format(wall_area))

    ach_eff = room.ach_window_open if window_open else room.ach
    return (wall_area / room.wall_r
            + window_area / room.window_r
            + ach_eff / 3600.0 * room.heat_capacity)


def step_temperature(state: SimState, powers: DevicePowers, room: RoomConfig,
                     dt: float) -> float:
    """Advance the indoor temperature by one explicit Euler step of *dt* s."""
    if not dt > 0:
        raise ConfigurationError("Invalid time step: {}".format(dt))
    ua = conductance(room, window_open=powers.window_open)
    flux = powers.heater_w - powers.cooler_w - ua * (state.t_in - state.t_out)
    t_in = state.t_in + dt * flux / room.heat_capacity
    health_check("temperature", t_in)
    return t_in


def simulate_action_interval(state: SimState, powers: DevicePowers,
                             room: RoomConfig,
                             action_dt: float = DEFAULT_ACTION_DT,
                             sub_dt: float = DEFAULT_SUB_DT,
                             outdoor: Optional[Callable[[float], float]] = None
                             ) -> List[SimState]:
    """Hold *powers* for *action_dt* seconds, sub-stepping every *sub_dt*.

    *outdoor* maps the simulated clock (seconds) to the outdoor temperature;
    without it the outdoor temperature of *state* is held. Returns the
    ``action_dt / sub_dt`` intermediate states, the last one being the state
    at the end of the action interval.
    """
    if not sub_dt > 0 or not action_dt > 0:
        raise ConfigurationError("Cadences must be positive.")
    nsub = int(round(action_dt / sub_dt))
    if nsub < 1 or not math.isclose(nsub * sub_dt, action_dt):
        raise ConfigurationError(
            "Action interval {} is not divisible by sub-step {}.".format(
                action_dt, sub_dt))

    states = []
    current = state
    for _ in range(nsub):
        t_in = step_temperature(current, powers, room, sub_dt)
        clock = current.clock + sub_dt
        t_out = current.t_out if outdoor is None else float(outdoor(clock))
        current = SimState(t_in=t_in, t_out=t_out,
                           step_index=current.step_index + 1, clock=clock)
        states.append(current)
    return states

# }}}


# {{{ configuration files

def device_from_dict(data) -> Device:
    try:
        kind = DeviceKind(str(data["kind"]).lower())
    except KeyError as exc:
        raise ConfigurationError(f"Device entry missing key {exc}.") from None
    except ValueError:
        raise ConfigurationError(
            "Invalid device kind: {}".format(data["kind"])) from None
    try:
        dev_id = str(data["id"])
        levels = data["levels"]
    except KeyError as exc:
        raise ConfigurationError(f"Device entry missing key {exc}.") from None
    if kind is DeviceKind.WINDOW:
        levels = tuple(str(lvl).upper() for lvl in levels)
    return Device(dev_id, kind, tuple(levels))


def device_to_dict(device: Device):
    levels = list(device.levels)
    if device.kind is not DeviceKind.WINDOW:
        levels = [float(lvl) for lvl in levels]
    return {"id": device.id, "kind": device.kind.value, "levels": levels}


def room_from_dict(data) -> Tuple[RoomConfig, List[Device]]:
    """Build a room and its devices from a parsed key/value mapping.

    Missing keys keep the reference defaults; a missing ``devices`` entry
    gives :func:`default_devices`.
    """
    data = dict(data or {})
    device_data = data.pop("devices", None)
    known = {f.name: f.type for f in fields(RoomConfig)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(
            "Unknown room parameters: {}".format(", ".join(unknown)))

    room = RoomConfig()
    overrides = {}
    for key, value in data.items():
        try:
            overrides[key] = int(value) if key == "n_windows" else float(value)
        except (TypeError, ValueError):
            raise ConfigurationError(
                "Invalid room parameter {}: {}".format(key, value)) from None
    room = replace(room, **overrides)

    if device_data is None:
        devices = default_devices()
    else:
        devices = [device_from_dict(entry) for entry in device_data]
    ids = [dev.id for dev in devices]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("Duplicate device ids: {}".format(ids))
    return room, devices


def load_room_config(path) -> Tuple[RoomConfig, List[Device]]:
    """Read a room file. See :func:`room_from_dict` for the keys."""
    with open(path) as f:
        input_data = yaml.load(f, Loader=yaml.FullLoader)
    room, devices = room_from_dict(input_data)
    logger.info(f"Loaded room from {path}: UA={conductance(room):.3f} W/K, "
                f"{len(devices)} devices")
    return room, devices

# }}}

# vim: foldmethod=marker
