"""Dueling deep Q-network written directly on top of :mod:`numpy`.

A stack of fully connected rectified-linear trunk layers feeds two streams,
a state value ``V(x)`` and action advantages ``A(x, a)``, recombined as

.. math::

    Q(x, a) = V(x) + A(x, a) - \\frac{1}{|A|} \\sum_{a'} A(x, a').

All arithmetic is double precision.

Parameter blocks, in the fixed order used by :func:`serialize`:

* ``trunk.<i>.weight`` ``(hidden, in)``, ``trunk.<i>.bias`` ``(hidden,)``
* ``value.hidden.weight``, ``value.hidden.bias``
* ``value.out.weight`` ``(1, hidden)``, ``value.out.bias`` ``(1,)``
* ``advantage.hidden.weight``, ``advantage.hidden.bias``
* ``advantage.out.weight`` ``(n_actions, hidden)``,
  ``advantage.out.bias`` ``(n_actions,)``

Model file layout (little-endian): 8-byte magic ``b"TADQN\\0\\0\\0"``, then
``uint32`` format version, state_dim, n_actions, hidden_width,
trunk_layers, flags (bit 0: trained), then every parameter block as
``float64`` in the order above.

.. autoclass:: DuelingNetwork
.. autoclass:: OptimizerState
.. autofunction:: forward
.. autofunction:: td_backward
.. autofunction:: optimizer_step
.. autofunction:: soft_update
.. autofunction:: expand
.. autofunction:: serialize
.. autofunction:: deserialize
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
import struct
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

logger = logging.getLogger(__name__)

MODEL_MAGIC = b"TADQN\x00\x00\x00"
MODEL_FORMAT_VERSION = 1
_HEADER = struct.Struct("<6I")
_FLAG_TRAINED = 1


class NetworkError(RuntimeError):
    """Dimension or architecture mismatch."""

    pass


class ModelFormatError(NetworkError):
    """A serialized network could not be decoded."""

    pass


def _param_shapes(state_dim, n_actions, hidden_width, trunk_layers):
    input_dim = state_dim + n_actions
    shapes = {}
    fan_in = input_dim
    for i in range(trunk_layers):
        shapes[f"trunk.{i}.weight"] = (hidden_width, fan_in)
        shapes[f"trunk.{i}.bias"] = (hidden_width,)
        fan_in = hidden_width
    for stream, n_out in (("value", 1), ("advantage", n_actions)):
        shapes[f"{stream}.hidden.weight"] = (hidden_width, hidden_width)
        shapes[f"{stream}.hidden.bias"] = (hidden_width,)
        shapes[f"{stream}.out.weight"] = (n_out, hidden_width)
        shapes[f"{stream}.out.bias"] = (n_out,)
    return shapes


class DuelingNetwork:
    """A dueling Q-network over ``state_dim + n_actions`` inputs.

    .. attribute:: params

        Ordered mapping of parameter names to :class:`numpy.ndarray`.

    .. attribute:: trained

        *False* until a training run with at least one update finished.
    """

    def __init__(self, state_dim, n_actions, hidden_width=256, trunk_layers=2,
                 params=None, seed=0, trained=False):
        if state_dim < 0 or n_actions < 1 or hidden_width < 1 or trunk_layers < 1:
            raise NetworkError(
                f"Invalid architecture: state_dim={state_dim}, "
                f"n_actions={n_actions}, hidden_width={hidden_width}, "
                f"trunk_layers={trunk_layers}")
        self.state_dim = int(state_dim)
        self.n_actions = int(n_actions)
        self.hidden_width = int(hidden_width)
        self.trunk_layers = int(trunk_layers)
        self.trained = bool(trained)

        shapes = _param_shapes(self.state_dim, self.n_actions,
                               self.hidden_width, self.trunk_layers)
        if params is None:
            rng = np.random.default_rng(seed)
            params = {}
            for name, shape in shapes.items():
                if name.endswith(".weight"):
                    bound = 1.0 / np.sqrt(shape[1])
                    params[name] = rng.uniform(-bound, bound, size=shape)
                else:
                    params[name] = np.zeros(shape)
        else:
            if list(params) != list(shapes):
                raise NetworkError("Parameter blocks do not match architecture.")
            for name, shape in shapes.items():
                if params[name].shape != shape:
                    raise NetworkError(
                        f"Parameter {name} has shape {params[name].shape}, "
                        f"expected {shape}.")
            params = {name: np.array(value, dtype=np.float64)
                      for name, value in params.items()}
        self.params: Dict[str, np.ndarray] = params

    @property
    def input_dim(self):
        return self.state_dim + self.n_actions

    @property
    def architecture(self):
        return (self.state_dim, self.n_actions, self.hidden_width,
                self.trunk_layers)

    def copy(self):
        return DuelingNetwork(*self.architecture, params=self.params,
                              trained=self.trained)

    # {{{ forward/backward

    def forward_batch(self, xs):
        """Evaluate Q for a batch *xs* of shape ``(batch, input_dim)``.

        Returns the Q values and the activation cache for :meth:`backward`.
        """
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.input_dim:
            raise NetworkError(
                f"Input has shape {xs.shape}, expected (batch, {self.input_dim}).")
        prm = self.params
        cache = {"x": xs}
        h = xs
        for i in range(self.trunk_layers):
            z = h @ prm[f"trunk.{i}.weight"].T + prm[f"trunk.{i}.bias"]
            cache[f"trunk.{i}"] = (h, z)
            h = np.maximum(z, 0.0)
        cache["trunk_out"] = h

        outs = {}
        for stream in ("value", "advantage"):
            z = h @ prm[f"{stream}.hidden.weight"].T + prm[f"{stream}.hidden.bias"]
            hs = np.maximum(z, 0.0)
            cache[f"{stream}.hidden"] = (h, z)
            cache[f"{stream}.out"] = (hs, None)
            outs[stream] = (hs @ prm[f"{stream}.out.weight"].T
                            + prm[f"{stream}.out.bias"])

        value = outs["value"]
        adv = outs["advantage"]
        q = value + adv - adv.mean(axis=1, keepdims=True)
        cache["value"] = value
        return q, cache

    def value(self, x):
        _, cache = self.forward_batch(np.atleast_2d(x))
        return float(cache["value"][0, 0])

    def backward(self, cache, dq):
        """Backpropagate ``dloss/dQ`` of shape ``(batch, n_actions)``."""
        prm = self.params
        grads = {}
        dvalue = dq.sum(axis=1, keepdims=True)
        dadv = dq - dq.mean(axis=1, keepdims=True)

        dtrunk = 0.0
        for stream, dout in (("value", dvalue), ("advantage", dadv)):
            hs, _ = cache[f"{stream}.out"]
            grads[f"{stream}.out.weight"] = dout.T @ hs
            grads[f"{stream}.out.bias"] = dout.sum(axis=0)
            dhs = dout @ prm[f"{stream}.out.weight"]
            h, z = cache[f"{stream}.hidden"]
            dz = dhs * (z > 0.0)
            grads[f"{stream}.hidden.weight"] = dz.T @ h
            grads[f"{stream}.hidden.bias"] = dz.sum(axis=0)
            dtrunk = dtrunk + dz @ prm[f"{stream}.hidden.weight"]

        dh = dtrunk
        for i in reversed(range(self.trunk_layers)):
            h, z = cache[f"trunk.{i}"]
            dz = dh * (z > 0.0)
            grads[f"trunk.{i}.weight"] = dz.T @ h
            grads[f"trunk.{i}.bias"] = dz.sum(axis=0)
            dh = dz @ prm[f"trunk.{i}.weight"]

        return {name: grads[name] for name in prm}

    # }}}


Gradients = Dict[str, np.ndarray]


@dataclass
class OptimizerState:
    """Adam moments, step count and hyper-parameters."""

    lr: float = 1.0e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1.0e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def forward(net: DuelingNetwork, x):
    """Return the Q values of a single state vector *x*."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise NetworkError(f"Expected a single state vector, got {x.shape}.")
    q, _ = net.forward_batch(x[np.newaxis, :])
    return q[0]


def td_backward_batch(net: DuelingNetwork, xs, actions, td_targets):
    """Mean squared TD error over a batch and its parameter gradients."""
    td_targets = np.asarray(td_targets, dtype=np.float64)
    if not np.all(np.isfinite(td_targets)):
        raise NetworkError("Non-finite TD target.")
    actions = np.asarray(actions, dtype=np.intp)
    if np.any(actions < 0) or np.any(actions >= net.n_actions):
        raise NetworkError(f"Action index out of range [0, {net.n_actions}).")

    q, cache = net.forward_batch(xs)
    batch = q.shape[0]
    rows = np.arange(batch)
    err = q[rows, actions] - td_targets
    loss = float(np.mean(err * err))
    dq = np.zeros_like(q)
    dq[rows, actions] = 2.0 * err / batch
    return loss, net.backward(cache, dq)


def td_backward(net: DuelingNetwork, x, action_index, td_target):
    """Return ``(Q(x, a) - target)**2`` and its gradients."""
    x = np.asarray(x, dtype=np.float64)
    return td_backward_batch(net, x[np.newaxis, :], [action_index], [td_target])


def adam_update(params, grads, opt: OptimizerState):
    """Apply one Adam step to the mapping *params* in place."""
    for name, g in grads.items():
        if name not in params or params[name].shape != g.shape:
            raise NetworkError(f"Gradient {name} does not match parameters.")
    opt.step += 1
    bias1 = 1.0 - opt.beta1 ** opt.step
    bias2 = 1.0 - opt.beta2 ** opt.step
    for name, g in grads.items():
        m = opt.m.get(name)
        if m is None or m.shape != g.shape:
            m = np.zeros_like(g)
            opt.v[name] = np.zeros_like(g)
        m = opt.beta1 * m + (1.0 - opt.beta1) * g
        v = opt.beta2 * opt.v[name] + (1.0 - opt.beta2) * g * g
        opt.m[name] = m
        opt.v[name] = v
        params[name] -= opt.lr * (m / bias1) / (np.sqrt(v / bias2) + opt.eps)
    return params, opt


def optimizer_step(net: DuelingNetwork, grads: Gradients, opt: OptimizerState):
    """Adam step on *net* (in place). Returns ``(net, opt)``."""
    adam_update(net.params, grads, opt)
    return net, opt


def _check_same_architecture(a: DuelingNetwork, b: DuelingNetwork):
    if a.architecture != b.architecture:
        raise NetworkError(
            f"Architecture mismatch: {a.architecture} vs {b.architecture}")


def soft_update(online: DuelingNetwork, target: DuelingNetwork, tau):
    """Blend *online* into *target* in place: ``tau*online + (1-tau)*target``."""
    _check_same_architecture(online, target)
    for name, value in online.params.items():
        target.params[name] = tau * value + (1.0 - tau) * target.params[name]
    return target


def hard_update(online: DuelingNetwork, target: DuelingNetwork):
    return soft_update(online, target, 1.0)


def expand(net: DuelingNetwork, extra_inputs, extra_outputs, recenter=True):
    """Return a copy of *net* with zero-connected extra inputs and actions.

    New input columns of the first trunk layer and new advantage rows and
    biases are zero. With *recenter*, the advantage output layer is first
    shifted to zero mean over actions, which leaves every Q value unchanged
    and makes the zero advantages of the new actions neutral, so Q on the
    original actions is preserved. Without it, all pre-existing parameters
    are kept bit-identical and Q moves by a per-state constant.
    """
    if extra_inputs < 0 or extra_outputs < 0:
        raise NetworkError("Expansion counts must be >= 0.")
    if extra_inputs == 0 and extra_outputs == 0:
        return net.copy()

    params = {name: value.copy() for name, value in net.params.items()}
    w0 = params["trunk.0.weight"]
    params["trunk.0.weight"] = np.hstack(
        [w0, np.zeros((w0.shape[0], extra_inputs))])

    w_adv = params["advantage.out.weight"]
    b_adv = params["advantage.out.bias"]
    if extra_outputs:
        if recenter:
            w_adv = w_adv - w_adv.mean(axis=0, keepdims=True)
            b_adv = b_adv - b_adv.mean()
        w_adv = np.vstack([w_adv, np.zeros((extra_outputs, w_adv.shape[1]))])
        b_adv = np.concatenate([b_adv, np.zeros(extra_outputs)])
    params["advantage.out.weight"] = w_adv
    params["advantage.out.bias"] = b_adv

    new_actions = net.n_actions + extra_outputs
    new_state_dim = net.input_dim + extra_inputs - new_actions
    if new_state_dim < 0:
        raise NetworkError("Expansion leaves fewer inputs than actions.")
    logger.info(f"Expanding network: inputs {net.input_dim} -> "
                f"{net.input_dim + extra_inputs}, actions {net.n_actions} -> "
                f"{new_actions}")
    return DuelingNetwork(new_state_dim, new_actions, net.hidden_width,
                          net.trunk_layers, params=params, trained=net.trained)


def constant_policy_network(state_dim, n_actions, action_index,
                            hidden_width=8, trunk_layers=1):
    """A network whose greedy action is *action_index* for every input."""
    if not 0 <= action_index < n_actions:
        raise NetworkError(f"Action index {action_index} out of range.")
    shapes = _param_shapes(state_dim, n_actions, hidden_width, trunk_layers)
    params = {name: np.zeros(shape) for name, shape in shapes.items()}
    params["advantage.out.bias"][action_index] = 1.0
    return DuelingNetwork(state_dim, n_actions, hidden_width, trunk_layers,
                          params=params, trained=True)


# {{{ serialization

def serialize(net: DuelingNetwork) -> bytes:
    flags = _FLAG_TRAINED if net.trained else 0
    chunks = [MODEL_MAGIC,
              _HEADER.pack(MODEL_FORMAT_VERSION, net.state_dim, net.n_actions,
                           net.hidden_width, net.trunk_layers, flags)]
    for value in net.params.values():
        chunks.append(np.ascontiguousarray(value, dtype="<f8").tobytes())
    return b"".join(chunks)


def deserialize(payload: bytes) -> DuelingNetwork:
    payload = bytes(payload)
    nmagic = len(MODEL_MAGIC)
    if len(payload) < nmagic + _HEADER.size:
        raise ModelFormatError("Truncated model header.")
    if payload[:nmagic] != MODEL_MAGIC:
        raise ModelFormatError("Not a Q-network model file (bad magic).")
    version, state_dim, n_actions, hidden_width, trunk_layers, flags = \
        _HEADER.unpack_from(payload, nmagic)
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"Unsupported model format version {version}, "
            f"expected {MODEL_FORMAT_VERSION}.")
    if n_actions < 1 or hidden_width < 1 or trunk_layers < 1:
        raise ModelFormatError("Corrupt model header.")

    shapes = _param_shapes(state_dim, n_actions, hidden_width, trunk_layers)
    expected = sum(int(np.prod(shape)) for shape in shapes.values()) * 8
    offset = nmagic + _HEADER.size
    if len(payload) - offset != expected:
        raise ModelFormatError(
            f"Model payload has {len(payload) - offset} bytes, "
            f"expected {expected}.")

    params = {}
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        params[name] = np.frombuffer(payload, dtype="<f8", count=count,
                                     offset=offset).astype(np.float64)\
            .reshape(shape)
        offset += count * 8
    return DuelingNetwork(state_dim, n_actions, hidden_width, trunk_layers,
                          params=params, trained=bool(flags & _FLAG_TRAINED))


def save_network(net: DuelingNetwork, path):
    with open(path, "wb") as f:
        f.write(serialize(net))


def load_network(path) -> DuelingNetwork:
    with open(path, "rb") as f:
        return deserialize(f.read())

# }}}

# vim: foldmethod=marker
