"""Minimal dense ReLU network with exact reverse-mode gradients.

All parameters of a network live in one flat float64 vector; the per-layer
weight matrices and bias vectors are contiguous views into it. That makes
optimizer updates single vector operations and keeps copies cheap, which is
what the training loop leans on.

Layout of the flat vector, in order: W0 (row-major, shape out0 x in0), b0,
W1, b1, ... Wn, bn. The same layout is used for gradients and for JSON
snapshots.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np


def _flat_size(sizes: tuple[int, ...]) -> int:
    return sum(sizes[i + 1] * sizes[i] + sizes[i + 1] for i in range(len(sizes) - 1))


_LAYOUTS: dict[tuple[int, ...], tuple[int, list]] = {}


def _layout(sizes: tuple[int, ...]):
    """Cached (total length, [(w_start, w_stop, w_shape, b_start, b_stop), ...])."""
    cached = _LAYOUTS.get(sizes)
    if cached is None:
        if len(sizes) < 2:
            raise ValueError("network needs at least one layer (two sizes)")
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be positive, got {sizes}")
        spans = []
        off = 0
        for i in range(len(sizes) - 1):
            fan_in, fan_out = sizes[i], sizes[i + 1]
            w_stop = off + fan_out * fan_in
            spans.append((off, w_stop, (fan_out, fan_in), w_stop, w_stop + fan_out))
            off = w_stop + fan_out
        cached = (off, spans)
        _LAYOUTS[sizes] = cached
    return cached


class NetworkParams:
    """Parameters of a dense MLP: ReLU between layers, identity at the output.

    `sizes` is the full layer-width chain (input, hidden..., output); a
    single-layer network has len(sizes) == 2 and no ReLU anywhere.
    """

    __slots__ = ("sizes", "flat", "weights", "biases")

    def __init__(self, sizes, flat: np.ndarray | None = None):
        sizes = tuple(map(int, sizes))
        n, spans = _layout(sizes)
        if flat is None:
            flat = np.zeros(n, dtype=np.float64)
        else:
            flat = np.asarray(flat, dtype=np.float64)
            if flat.shape != (n,):
                raise ValueError(f"flat vector has {flat.shape[0]} entries, layout needs {n}")
        self.sizes = sizes
        self.flat = flat
        self.weights = [flat[a:b].reshape(shape) for a, b, shape, _, _ in spans]
        self.biases = [flat[a:b] for _, _, _, a, b in spans]

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.sizes, self.flat.copy())

    def zeros_like(self) -> "NetworkParams":
        return NetworkParams(self.sizes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkParams):
            return NotImplemented
        return self.sizes == other.sizes and np.array_equal(self.flat, other.flat)


def he_uniform_init(sizes, rng: np.random.Generator) -> NetworkParams:
    """He-uniform weights (bound sqrt(6/fan_in)) and zero biases."""
    params = NetworkParams(sizes)
    for w in params.weights:
        bound = np.sqrt(6.0 / w.shape[1])
        w[:] = rng.uniform(-bound, bound, size=w.shape)
    return params


def _forward_raw(params: NetworkParams, a: np.ndarray) -> np.ndarray:
    """Forward pass without input validation (internal hot path)."""
    weights, biases = params.weights, params.biases
    last = len(weights) - 1
    for i in range(last):
        a = a @ weights[i].T
        a += biases[i]
        np.maximum(a, 0.0, out=a)
    a = a @ weights[last].T
    a += biases[last]
    return a


def forward(params: NetworkParams, batch: np.ndarray) -> np.ndarray:
    """Batched forward pass; rows are inputs, columns of the result are actions."""
    a = np.asarray(batch, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != params.in_dim:
        raise ValueError(f"batch shape {a.shape} does not match input dim {params.in_dim}")
    return _forward_raw(params, a)


def forward_single(params: NetworkParams, obs: np.ndarray) -> np.ndarray:
    """Action values for one observation vector (1-D fast path)."""
    a = obs
    weights, biases = params.weights, params.biases
    last = len(weights) - 1
    for i in range(last):
        a = weights[i] @ a
        a += biases[i]
        np.maximum(a, 0.0, out=a)
    a = weights[last] @ a
    a += biases[last]
    return a


def _forward_cached(params: NetworkParams, batch: np.ndarray):
    """Forward pass keeping the per-layer inputs and pre-activations."""
    inputs = [batch]
    pre = []
    a = batch
    last = params.n_layers - 1
    for i in range(params.n_layers):
        z = a @ params.weights[i].T + params.biases[i]
        pre.append(z)
        if i != last:
            a = np.maximum(z, 0.0)
            inputs.append(a)
    return pre[-1], inputs, pre


def backward_mse(
    params: NetworkParams,
    batch: np.ndarray,
    action_index: np.ndarray,
    targets: np.ndarray,
) -> tuple[float, NetworkParams]:
    """Mean squared error over the selected action outputs, with exact gradients.

    loss = mean_j (targets[j] - out[j, action_index[j]])^2; outputs for
    non-selected actions get zero gradient. Returns (loss, grads) where grads
    shares the NetworkParams layout.
    """
    batch = np.asarray(batch, dtype=np.float64)
    actions = np.asarray(action_index, dtype=np.intp)
    targets = np.asarray(targets, dtype=np.float64)
    m = batch.shape[0]
    if actions.shape != (m,) or targets.shape != (m,):
        raise ValueError("action_index and targets must match the batch row count")
    if batch.ndim != 2 or batch.shape[1] != params.in_dim:
        raise ValueError(f"batch shape {batch.shape} does not match input dim {params.in_dim}")
    if actions.size and (actions.min() < 0 or actions.max() >= params.out_dim):
        raise IndexError(f"action index out of range for {params.out_dim} outputs")

    out, inputs, pre = _forward_cached(params, batch)
    rows = np.arange(m)
    err = out[rows, actions] - targets
    loss = float(err @ err) / m

    grads = params.zeros_like()
    dz = np.zeros_like(out)
    dz[rows, actions] = (2.0 / m) * err
    for i in range(params.n_layers - 1, -1, -1):
        np.matmul(dz.T, inputs[i], out=grads.weights[i])
        dz.sum(axis=0, out=grads.biases[i])
        if i > 0:
            dz = dz @ params.weights[i]
            dz *= pre[i - 1] > 0.0
    return loss, grads


@dataclass
class OptimizerConfig:
    kind: str = "adam"  # "sgd" or "adam"
    learning_rate: float = 2.5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def validate(self) -> None:
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"optimizer.kind: expected 'sgd' or 'adam', got {self.kind!r}")
        if not self.learning_rate > 0:
            raise ValueError(f"optimizer.learning_rate: must be > 0, got {self.learning_rate}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("optimizer betas must lie in [0, 1)")
        if not self.eps > 0:
            raise ValueError("optimizer.eps must be > 0")


@dataclass
class OptimizerState:
    """First-order optimizer state; moment vectors mirror the flat param layout."""

    config: OptimizerConfig
    step_count: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def init_optimizer(config: OptimizerConfig, params: NetworkParams) -> OptimizerState:
    config.validate()
    if config.kind == "sgd":
        return OptimizerState(config=config)
    n = params.flat.shape[0]
    return OptimizerState(config=config, m=np.zeros(n), v=np.zeros(n))


def apply_update(
    params: NetworkParams, grads: NetworkParams, opt: OptimizerState
) -> tuple[NetworkParams, OptimizerState]:
    """One optimizer step; returns fresh params and state, inputs untouched."""
    if grads.sizes != params.sizes:
        raise ValueError("gradient layout does not match parameters")
    cfg = opt.config
    t = opt.step_count + 1
    if cfg.kind == "sgd":
        new_flat = params.flat - cfg.learning_rate * grads.flat
        return NetworkParams(params.sizes, new_flat), replace(opt, step_count=t)
    # Adam with the usual bias correction.
    b1, b2 = cfg.beta1, cfg.beta2
    m = b1 * opt.m
    m += (1.0 - b1) * grads.flat
    v = b2 * opt.v
    v += (1.0 - b2) * grads.flat * grads.flat
    step = np.sqrt(v)
    step *= 1.0 / np.sqrt(1.0 - b2**t)
    step += cfg.eps
    np.divide(m, step, out=step)
    step *= cfg.learning_rate / (1.0 - b1**t)
    new_flat = params.flat - step
    return NetworkParams(params.sizes, new_flat), OptimizerState(cfg, t, m, v)


def gradient_check(
    params: NetworkParams,
    batch: np.ndarray,
    action_index: np.ndarray,
    targets: np.ndarray,
    fd_step: float = 1e-5,
) -> float:
    """Max relative error between analytic gradients and central differences.

    Relative error per coordinate: |analytic - numeric| / max(1e-12,
    |analytic| + |numeric|).
    """
    if not fd_step > 0:
        raise ValueError("fd_step must be > 0")
    _, grads = backward_mse(params, batch, action_index, targets)
    worst = 0.0
    flat = params.flat
    for i in range(flat.shape[0]):
        orig = flat[i]
        flat[i] = orig + fd_step
        lo_p, _ = _loss_only(params, batch, action_index, targets)
        flat[i] = orig - fd_step
        lo_m, _ = _loss_only(params, batch, action_index, targets)
        flat[i] = orig
        numeric = (lo_p - lo_m) / (2.0 * fd_step)
        analytic = grads.flat[i]
        denom = max(1e-12, abs(analytic) + abs(numeric))
        worst = max(worst, abs(analytic - numeric) / denom)
    return worst


def _loss_only(params, batch, action_index, targets):
    out = forward(params, batch)
    rows = np.arange(batch.shape[0])
    err = out[rows, action_index] - targets
    return float(err @ err) / batch.shape[0], out


def params_to_json(params: NetworkParams) -> str:
    """Snapshot as JSON: layer-size chain plus the flat layer-ordered, row-major values."""
    return json.dumps({"sizes": list(params.sizes), "values": params.flat.tolist()})


def params_from_json(text: str) -> NetworkParams:
    doc = json.loads(text)
    return NetworkParams(doc["sizes"], np.asarray(doc["values"], dtype=np.float64))


def save_params(params: NetworkParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(params_to_json(params))


def load_params(path) -> NetworkParams:
    with open(path, "r", encoding="utf-8") as fh:
        return params_from_json(fh.read())
