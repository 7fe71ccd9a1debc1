"""Online ARIMA(p, 1, q) forecaster over a sliding window.

The model is fitted on the first differences of the window by minimising
the conditional sum of squared residuals (pre-sample residuals are zero)
with step-halving gradient descent. Forecasts iterate the difference
equation with future innovations set to zero and integrate back onto the
last raw observation.

.. autoclass:: ArimaConfig
.. autoclass:: ArimaModel
.. autoclass:: TimeVaryingModel
.. autofunction:: difference
.. autofunction:: undifference
.. autofunction:: fit
.. autofunction:: forecast
.. autofunction:: refit_on_arrival
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
from collections import deque
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.signal import lfilter

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


class ForecastError(RuntimeError):
    pass


@dataclass(frozen=True)
class ArimaConfig:
    p: int = 2
    q: int = 1
    window_size: int = 30
    horizon: int = 3
    max_iter: int = 500
    rtol: float = 1.0e-8

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise ForecastError(f"Invalid ARIMA orders p={self.p}, q={self.q}.")
        if self.window_size <= self.p + self.q + 2:
            raise ForecastError(
                f"Window of {self.window_size} points is too short for "
                f"p={self.p}, q={self.q}.")
        if self.horizon < 1:
            raise ForecastError(f"Invalid forecast horizon: {self.horizon}")


@dataclass
class ArimaModel:
    """Fitted coefficients of ``y'_t = c + e_t + sum phi_i y'_{t-i}
    + sum theta_i e_{t-i}`` on the differenced window.

    *converged* is *False* when the optimiser ran out of iterations and the
    coefficients are the best found so far.
    """

    phi: np.ndarray
    theta: np.ndarray
    c: float
    sigma2: float
    last_window: np.ndarray
    converged: bool = True
    ssr: float = 0.0

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64).reshape(-1)
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        self.last_window = np.asarray(self.last_window,
                                      dtype=np.float64).reshape(-1)
        self.c = float(self.c)
        self.sigma2 = float(self.sigma2)

    @property
    def p(self):
        return len(self.phi)

    @property
    def q(self):
        return len(self.theta)

    def to_dict(self):
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "phi": [float(v) for v in self.phi],
            "theta": [float(v) for v in self.theta],
            "c": self.c,
            "sigma2": self.sigma2,
            "converged": bool(self.converged),
            "ssr": float(self.ssr),
            "last_window": [float(v) for v in self.last_window],
        }

    @classmethod
    def from_dict(cls, data):
        version = data.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ForecastError(
                "Unsupported time-varying model version: {}".format(version))
        return cls(phi=data["phi"], theta=data["theta"], c=data["c"],
                   sigma2=data["sigma2"], last_window=data["last_window"],
                   converged=data.get("converged", True),
                   ssr=data.get("ssr", 0.0))


def difference(series):
    """Return the first differences of *series*."""
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1 or len(series) < 2:
        raise ForecastError("Differencing needs at least two points.")
    return series[1:] - series[:-1]


def undifference(deltas, initial):
    """Invert :func:`difference` given the first raw value *initial*."""
    deltas = np.asarray(deltas, dtype=np.float64)
    out = np.empty(len(deltas) + 1)
    out[0] = initial
    acc = float(initial)
    for i, d in enumerate(deltas):
        acc = acc + d
        out[i + 1] = acc
    return out


# {{{ conditional sum of squares

def _unpack(beta, p):
    return beta[0], beta[1:1 + p], beta[1 + p:]


def _css_residuals(y, beta, p):
    """Residuals of the differenced series *y* for t = p, ..., n-1."""
    c, phi, theta = _unpack(beta, p)
    n = len(y)
    u = y[p:] - c
    for i in range(1, p + 1):
        u = u - phi[i - 1] * y[p - i:n - i]
    if len(theta):
        return lfilter([1.0], np.concatenate(([1.0], theta)), u)
    return u


def _css_gradient(y, beta, p, resid):
    """Jacobian of the residuals with respect to ``(c, phi, theta)``."""
    c, phi, theta = _unpack(beta, p)
    n = len(y)
    m = n - p
    denom = np.concatenate(([1.0], theta))
    columns = [-np.ones(m)]
    for i in range(1, p + 1):
        columns.append(-y[p - i:n - i])
    for j in range(1, len(theta) + 1):
        lagged = np.zeros(m)
        lagged[j:] = resid[:m - j]
        columns.append(-lagged)
    jac = np.column_stack(columns)
    if len(theta):
        jac = lfilter([1.0], denom, jac, axis=0)
    return jac


def _ssr(y, beta, p):
    resid = _css_residuals(y, beta, p)
    return float(np.dot(resid, resid)), resid


def _admissible(beta, p):
    theta = beta[1 + p:]
    return bool(np.all(np.isfinite(beta))) and float(np.sum(np.abs(theta))) < 1.0


def _ols_start(y, p, q):
    beta = np.zeros(1 + p + q)
    if p == 0:
        beta[0] = float(np.mean(y))
        return beta
    n = len(y)
    design = np.column_stack([np.ones(n - p)]
                             + [y[p - i:n - i] for i in range(1, p + 1)])
    coef, *_ = np.linalg.lstsq(design, y[p:], rcond=None)
    beta[:1 + p] = coef
    return beta

# }}}


def fit(window, cfg: ArimaConfig) -> ArimaModel:
    """Fit an ARIMA(p, 1, q) model on *window* by conditional least squares.

    The descent starts from the better of the all-zero model and the
    least-squares autoregression, so the result never has a larger residual
    sum of squares than the all-zero model.
    """
    window = np.asarray(window, dtype=np.float64)
    if len(window) != cfg.window_size:
        raise ForecastError(
            f"Window has {len(window)} points, expected {cfg.window_size}.")
    y = difference(window)
    p, q = cfg.p, cfg.q
    n_eff = len(y) - p

    if np.ptp(y) == 0.0:
        return ArimaModel(phi=np.zeros(p), theta=np.zeros(q), c=float(y[0]),
                          sigma2=0.0, last_window=window, converged=True,
                          ssr=0.0)

    beta = np.zeros(1 + p + q)
    ssr, resid = _ssr(y, beta, p)
    start = _ols_start(y, p, q)
    if _admissible(start, p):
        ssr_start, resid_start = _ssr(y, start, p)
        if np.isfinite(ssr_start) and ssr_start <= ssr:
            beta, ssr, resid = start, ssr_start, resid_start

    converged = False
    step = None
    for _ in range(cfg.max_iter):
        jac = _css_gradient(y, beta, p, resid)
        grad = 2.0 * jac.T @ resid
        if not np.any(grad):
            converged = True
            break
        if step is None:
            step = 0.5 / max(float(np.sum(jac * jac)), 1.0e-300)

        accepted = False
        while step > 1.0e-300:
            trial = beta - step * grad
            if _admissible(trial, p):
                trial_ssr, trial_resid = _ssr(y, trial, p)
                if trial_ssr < ssr:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            # no descent left along the gradient
            converged = True
            break

        rel_change = (ssr - trial_ssr) / max(ssr, 1.0e-300)
        beta, ssr, resid = trial, trial_ssr, trial_resid
        step *= 2.0
        if rel_change < cfg.rtol:
            converged = True
            break

    if not converged:
        logger.debug(f"ARIMA fit did not converge in {cfg.max_iter} iterations")

    c, phi, theta = _unpack(beta, p)
    return ArimaModel(phi=phi.copy(), theta=theta.copy(), c=float(c),
                      sigma2=ssr / n_eff, last_window=window,
                      converged=converged, ssr=ssr)


def forecast(model: ArimaModel, horizon: int):
    """Forecast *horizon* raw values past the end of ``model.last_window``."""
    y = difference(model.last_window)
    p, q = model.p, model.q
    beta = np.concatenate(([model.c], model.phi, model.theta))
    if len(y) > p:
        resid = list(_css_residuals(y, beta, p))
    else:
        resid = []

    ys = list(y)
    es = [0.0] * p + resid
    for _ in range(horizon):
        value = model.c
        for i in range(1, p + 1):
            value += model.phi[i - 1] * ys[-i]
        for j in range(1, q + 1):
            if len(es) >= j:
                value += model.theta[j - 1] * es[-j]
        ys.append(value)
        es.append(0.0)

    return undifference(ys[len(y):], model.last_window[-1])[1:]


class TimeVaryingModel:
    """Single-owner holder of the sliding window and its latest fit.

    .. attribute:: model

        The latest :class:`ArimaModel`, or *None* until the window fills.
    """

    def __init__(self, cfg: Optional[ArimaConfig] = None):
        self.cfg = cfg or ArimaConfig()
        self.window = deque(maxlen=self.cfg.window_size)
        self.model = None

    @property
    def is_full(self):
        return len(self.window) == self.cfg.window_size

    def push(self, obs):
        self.window.append(float(obs))
        if not self.is_full:
            return self.model

        window = np.array(self.window)
        new_model = fit(window, self.cfg)
        if not new_model.converged and self.model is not None:
            # keep the previous coefficients, re-anchored on the new window
            new_model = replace(self.model, last_window=window,
                                converged=False)
        self.model = new_model
        return self.model

    def forecast(self, horizon=None):
        if self.model is None:
            return None
        return forecast(self.model, horizon or self.cfg.horizon)


def refit_on_arrival(state: TimeVaryingModel, new_obs):
    """Slide the window of *state* by *new_obs* and refit."""
    return state.push(new_obs)

# vim: foldmethod=marker
