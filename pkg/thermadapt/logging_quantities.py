"""Run logging through :mod:`logpyle`.

.. autofunction:: initialize_logmgr
.. autoclass:: LogUserQuantity
.. autofunction:: add_training_quantities
.. autofunction:: add_loop_quantities
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

from logpyle import (
    IntervalTimer, LogManager, LogQuantity, PostLogQuantity,
    add_general_quantities, add_run_info)

logger = logging.getLogger(__name__)


def initialize_logmgr(enable_logmgr, filename=None, mode="wu"):
    """Create a :class:`logpyle.LogManager` with the general quantities.

    Returns *None* when *enable_logmgr* is false.
    """
    if not enable_logmgr:
        return None

    if filename:
        log_dir = os.path.dirname(filename)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)

    logmgr = LogManager(filename=filename, mode=mode)
    add_run_info(logmgr)
    add_general_quantities(logmgr)
    logger.info(f"Run log written to {filename}")
    return logmgr


class LogUserQuantity(PostLogQuantity):
    """Logging support for a value set by the caller each step."""

    def __init__(self, name="user_quantity", value=None, unit="1",
                 description=None):
        LogQuantity.__init__(self, name, unit, description)
        self._quantity_value = value

    def set_quantity(self, value):
        self._quantity_value = value

    def __call__(self):
        return self._quantity_value


def _add_user_quantities(logmgr, specs):
    quantities = {}
    for name, unit, description in specs:
        quantity = LogUserQuantity(name=name, value=0.0, unit=unit,
                                   description=description)
        logmgr.add_quantity(quantity)
        quantities[name] = quantity
    return quantities


def add_training_quantities(logmgr):
    """Register exploration rate, loss, episode reward and update timer."""
    quantities = _add_user_quantities(logmgr, [
        ("epsilon", "1", "Exploration rate"),
        ("loss", "1", "Mean squared TD error of the last update"),
        ("episode_reward", "1", "Reward accumulated in the current episode"),
    ])
    timer = IntervalTimer("t_update", "Time spent in network updates")
    logmgr.add_quantity(timer)
    quantities["t_update"] = timer

    logmgr.add_watches([
        ("step", "step = {value}, "),
        ("epsilon", "epsilon = {value:.4f}, "),
        ("loss", "loss = {value:.4g}, "),
        ("t_step", "step walltime: {value:6g} s\n")])
    return quantities


def add_loop_quantities(logmgr):
    """Register indoor/outdoor temperature and the adaptation phase code."""
    quantities = _add_user_quantities(logmgr, [
        ("t_in", "degC", "Indoor temperature"),
        ("t_out", "degC", "Outdoor temperature"),
        ("phase", "1", "Adaptation phase code"),
    ])
    timer = IntervalTimer("t_retrain", "Time spent retraining agents")
    logmgr.add_quantity(timer)
    quantities["t_retrain"] = timer

    logmgr.add_watches([
        ("step", "tick = {value}, "),
        ("t_in", "t_in = {value:.2f}, "),
        ("t_out", "t_out = {value:.2f}\n")])
    return quantities
