"""Shared simulation utilities: step checks, health checks and error types.

.. autofunction:: check_step
.. autofunction:: check_naninf
.. autofunction:: check_range
.. autoexception:: ConfigurationError
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
from dataclasses import fields

import numpy as np

logger = logging.getLogger(__name__)


class ConfigurationError(RuntimeError):
    """Invalid room, device, cadence or scenario configuration."""

    pass


class HealthCheckError(RuntimeError):
    """Simple exception to stop a simulation that went unhealthy."""

    pass


def check_step(step, interval):
    """Return *True* when *step* falls on *interval*.

    A non-positive *interval* disables the check.
    """
    if interval <= 0:
        return False
    return step % interval == 0


def check_naninf(values):
    """Return *True* if any entry of *values* is NaN or infinite."""
    return not bool(np.all(np.isfinite(np.asarray(values, dtype=np.float64))))


def check_range(values, min_value, max_value):
    """Return *True* if any entry of *values* lies outside the closed range."""
    arr = np.asarray(values, dtype=np.float64)
    return bool(np.any((arr < min_value) | (arr > max_value)))


def health_check(name, values, min_value=-np.inf, max_value=np.inf):
    """Raise :class:`HealthCheckError` if *values* are non-finite or out of range."""
    if check_naninf(values):
        logger.info(f"NANs/Infs in {name} data.")
        raise HealthCheckError(f"Non-finite {name}.")
    if check_range(values, min_value, max_value):
        logger.info(f"{name} range violation ({min_value}, {max_value}).")
        raise HealthCheckError(f"{name} out of range.")


SEED_ENV_VARS = ("REPTILE_SEED", "THERMADAPT_SEED")


def resolve_seed(flag_seed=None, file_seed=None, env=None):
    """Pick the run seed.

    The flag wins, then ``REPTILE_SEED``, then its alias ``THERMADAPT_SEED``,
    then the seed in the input file, then 0.
    """
    if flag_seed is not None:
        return int(flag_seed)
    if env is None:
        env = os.environ
    for name in SEED_ENV_VARS:
        env_seed = env.get(name)
        if env_seed:
            try:
                return int(env_seed)
            except ValueError:
                raise ConfigurationError(
                    "Invalid {}: {}".format(name, env_seed)) from None
    if file_seed is not None:
        return int(file_seed)
    return 0


def configure_dataclass(cls, data, what="parameter"):
    """Build *cls* from its defaults overridden by the keys in *data*.

    Values are coerced to the type of the default; unknown keys and values
    that do not convert raise :class:`ConfigurationError`.
    """
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(
            "Unknown {} keys: {}".format(what, ", ".join(unknown)))
    overrides = {}
    for key, value in data.items():
        default = getattr(cls, key)
        if isinstance(default, bool) and not isinstance(value, bool):
            raise ConfigurationError(
                "Invalid {} {}: {}".format(what, key, value))
        try:
            overrides[key] = type(default)(value)
        except (TypeError, ValueError):
            raise ConfigurationError(
                "Invalid {} {}: {}".format(what, key, value)) from None
    return cls(**overrides)
