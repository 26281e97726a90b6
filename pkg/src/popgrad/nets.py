"""Dense feed-forward networks on flat parameter vectors, with exact backprop and Adam.

A network's weights and biases live in one contiguous float64 vector so that a
policy can be handled as a genome by the evolutionary layer; layer views are
reconstructed on demand from the layer sizes. Only small MLP shapes are
supported: no convolutions, no recurrence, no general autodiff graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

HIDDEN_NONLINEARITIES = ("tanh", "relu", "leaky_relu")
OUTPUT_NONLINEARITIES = ("tanh", "identity")


class DivergenceError(RuntimeError):
    """Raised when training produces non-finite numbers."""


@dataclass(frozen=True)
class NetSpec:
    """Architecture of one MLP: layer sizes plus nonlinearities.

    ``layer_sizes`` runs input -> hidden... -> output. The hidden nonlinearity
    is applied after every layer except the last, the output nonlinearity after
    the last.
    """

    layer_sizes: tuple[int, ...]
    hidden_nonlinearity: str = "tanh"
    output_nonlinearity: str = "tanh"
    leaky_slope: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(n) for n in self.layer_sizes))
        if len(self.layer_sizes) < 2:
            raise ValueError(f"need at least input and output layers, got {self.layer_sizes}")
        if any(n < 1 for n in self.layer_sizes):
            raise ValueError(f"layer sizes must be positive, got {self.layer_sizes}")
        if self.hidden_nonlinearity not in HIDDEN_NONLINEARITIES:
            raise ValueError(f"unknown hidden nonlinearity {self.hidden_nonlinearity!r}")
        if self.output_nonlinearity not in OUTPUT_NONLINEARITIES:
            raise ValueError(f"unknown output nonlinearity {self.output_nonlinearity!r}")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ValueError(f"leaky_slope must lie in (0, 1), got {self.leaky_slope}")

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_params(self) -> int:
        return param_count(self.layer_sizes)


def actor_spec(obs_dim: int, action_dim: int, hidden=(400, 300),
               nonlinearity: str = "tanh") -> NetSpec:
    """Policy network: observations in, tanh-squashed actions out."""
    return NetSpec((obs_dim, *hidden, action_dim), nonlinearity, "tanh")


def critic_spec(obs_dim: int, action_dim: int, hidden=(400, 300)) -> NetSpec:
    """Action-value network: [state; action] concatenated into the first layer."""
    return NetSpec((obs_dim + action_dim, *hidden, 1), "leaky_relu", "identity")


@lru_cache(maxsize=None)
def _layout(layer_sizes: tuple[int, ...]):
    """Offsets of each layer's weight block and bias block in the flat vector."""
    offsets = []
    pos = 0
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        w_end = pos + fan_in * fan_out
        b_end = w_end + fan_out
        offsets.append((pos, w_end, b_end, fan_in, fan_out))
        pos = b_end
    return tuple(offsets), pos


def param_count(layer_sizes) -> int:
    return _layout(tuple(int(n) for n in layer_sizes))[1]


def unflatten(spec: NetSpec, params: np.ndarray):
    """Views of the flat vector as per-layer (weights, bias) pairs.

    Weights have shape (fan_in, fan_out); the views alias ``params``, so
    writing through them mutates the flat vector.
    """
    params = _check_params(spec, params)
    layers = []
    for start, w_end, b_end, fan_in, fan_out in _layout(spec.layer_sizes)[0]:
        w = params[start:w_end].reshape(fan_in, fan_out)
        b = params[w_end:b_end]
        layers.append((w, b))
    return layers


def flatten(spec: NetSpec, layers) -> np.ndarray:
    """Inverse of :func:`unflatten`; exact round trip."""
    parts = []
    for w, b in layers:
        parts.append(np.asarray(w, dtype=np.float64).ravel())
        parts.append(np.asarray(b, dtype=np.float64).ravel())
    flat = np.concatenate(parts)
    if flat.size != spec.n_params:
        raise ValueError(f"layer shapes give {flat.size} parameters, spec wants {spec.n_params}")
    return flat


def _check_params(spec: NetSpec, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    want = _layout(spec.layer_sizes)[1]
    if params.ndim != 1 or params.size != want:
        raise ValueError(f"parameter vector has size {params.size}, spec wants {want}")
    return params


def _activate(name: str, pre: np.ndarray, slope: float) -> np.ndarray:
    if name == "tanh":
        return np.tanh(pre)
    if name == "relu":
        return np.maximum(pre, 0.0)
    if name == "leaky_relu":
        return np.maximum(pre, slope * pre)  # equal to the piecewise form for slope < 1
    return pre  # identity


def _activate_grad(name: str, pre: np.ndarray, act: np.ndarray, slope: float) -> np.ndarray:
    if name == "tanh":
        return 1.0 - act * act
    if name == "relu":
        return (pre > 0.0).astype(np.float64)
    if name == "leaky_relu":
        return np.where(pre >= 0.0, 1.0, slope)
    return np.ones_like(pre)  # identity


def forward(spec: NetSpec, params: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate the network. ``x`` may be one input vector or a (batch, in) matrix."""
    params = _check_params(spec, params)
    h = np.asarray(x, dtype=np.float64)
    if h.shape[-1] != spec.in_dim:
        raise ValueError(f"input has size {h.shape[-1]}, spec wants {spec.in_dim}")
    offsets, _ = _layout(spec.layer_sizes)
    last = len(offsets) - 1
    hidden = spec.hidden_nonlinearity
    for i, (start, w_end, b_end, fan_in, fan_out) in enumerate(offsets):
        pre = h @ params[start:w_end].reshape(fan_in, fan_out) + params[w_end:b_end]
        h = _activate(spec.output_nonlinearity if i == last else hidden, pre,
                      spec.leaky_slope)
    return h


def _forward_pass(spec: NetSpec, params: np.ndarray, xb: np.ndarray):
    """Forward evaluation keeping the per-layer pre-activations and activations."""
    offsets, _ = _layout(spec.layer_sizes)
    last = len(offsets) - 1
    acts = [xb]
    pres = []
    h = xb
    for i, (start, w_end, b_end, fan_in, fan_out) in enumerate(offsets):
        pre = h @ params[start:w_end].reshape(fan_in, fan_out) + params[w_end:b_end]
        name = spec.output_nonlinearity if i == last else spec.hidden_nonlinearity
        h = _activate(name, pre, spec.leaky_slope)
        pres.append(pre)
        acts.append(h)
    return acts, pres


def _backprop(spec: NetSpec, params: np.ndarray, acts, pres, ub: np.ndarray,
              need_param_grad: bool = True):
    """Reverse pass over cached activations; returns (param_grad, input_grad)."""
    offsets, _ = _layout(spec.layer_sizes)
    last = len(offsets) - 1
    grad = np.empty_like(params) if need_param_grad else None
    delta = ub
    for i in range(last, -1, -1):
        name = spec.output_nonlinearity if i == last else spec.hidden_nonlinearity
        delta = delta * _activate_grad(name, pres[i], acts[i + 1], spec.leaky_slope)
        start, w_end, b_end, fan_in, fan_out = offsets[i]
        if need_param_grad:
            grad[start:w_end] = (acts[i].T @ delta).ravel()
            grad[w_end:b_end] = delta.sum(axis=0)
        delta = delta @ params[start:w_end].reshape(fan_in, fan_out).T
    return grad, delta


def backward(spec: NetSpec, params: np.ndarray, x: np.ndarray, upstream: np.ndarray):
    """Gradient of ``output . upstream`` with respect to parameters and input.

    Returns ``(param_grad, input_grad)``. For a (batch, in) input with a
    (batch, out) upstream, ``param_grad`` is summed over the batch and
    ``input_grad`` is per-row. Deterministic: a plain reverse pass over the
    cached forward activations.
    """
    params = _check_params(spec, params)
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    squeeze = x.ndim == 1
    xb = x[None, :] if squeeze else x
    ub = upstream[None, :] if upstream.ndim == 1 else upstream
    if xb.shape[1] != spec.in_dim:
        raise ValueError(f"input has size {xb.shape[1]}, spec wants {spec.in_dim}")
    if ub.shape != (xb.shape[0], spec.out_dim):
        raise ValueError(
            f"upstream gradient has shape {ub.shape}, expected {(xb.shape[0], spec.out_dim)}")
    acts, pres = _forward_pass(spec, params, xb)
    grad, delta = _backprop(spec, params, acts, pres, ub)
    input_grad = delta[0] if squeeze else delta
    return grad, input_grad


def init_params(spec: NetSpec, seed) -> np.ndarray:
    """Fresh parameter vector, uniform in +-1/sqrt(fan_in) per layer.

    ``seed`` is anything ``numpy.random.default_rng`` accepts, including an
    existing Generator. Layers are drawn in order, weights before biases, so a
    fixed seed gives a bitwise-identical vector.
    """
    rng = np.random.default_rng(seed)
    params = np.empty(spec.n_params, dtype=np.float64)
    for start, w_end, b_end, fan_in, _ in _layout(spec.layer_sizes)[0]:
        bound = 1.0 / np.sqrt(fan_in)
        params[start:b_end] = rng.uniform(-bound, bound, size=b_end - start)
    return params


@dataclass
class AdamState:
    """Adam first/second moment estimates plus the step counter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    @classmethod
    def zeros(cls, n: int, learning_rate: float = 1e-3, **kw) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), learning_rate=learning_rate, **kw)


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray):
    """One bias-corrected Adam step toward lower objective. Mutates both arguments.

    Raises DivergenceError on non-finite gradient coordinates; the step is not
    applied and the counter not advanced in that case.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.shape:
        raise ValueError(f"gradient has size {grad.size}, parameters have {params.size}")
    if not np.isfinite(grad).all():
        raise DivergenceError("non-finite gradient passed to adam_step")
    state.t += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * grad
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    params -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps_hat)
    return params, state
