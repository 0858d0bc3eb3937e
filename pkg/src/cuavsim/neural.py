"""Small dense Q-network: forward pass, squared-error backprop and Adam.

All parameters of a network live in one flat float64 buffer; the
per-layer weight matrices (``out x in``) and bias vectors are views into
it, so optimiser updates and target-network copies are single vector
operations.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

ACTIVATIONS = ("relu", "identity")


class ShapeError(ValueError):
    pass


class DenseNet:
    def __init__(self, sizes: Sequence[int], activations: Optional[Sequence[str]] = None,
                 params: Optional[np.ndarray] = None):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ShapeError(f"need at least an input and an output size, got {sizes}")
        n_layers = len(sizes) - 1
        if activations is None:
            activations = ("relu",) * (n_layers - 1) + ("identity",)
        activations = tuple(activations)
        if len(activations) != n_layers:
            raise ShapeError(f"{n_layers} layers but {len(activations)} activations")
        if any(a not in ACTIVATIONS for a in activations):
            raise ShapeError(f"activations must be drawn from {ACTIVATIONS}, got {activations}")
        if activations[-1] != "identity":
            raise ShapeError("the output layer must be linear")
        self.sizes = sizes
        self.activations = activations
        n_params = sum(o * i + o for i, o in zip(sizes[:-1], sizes[1:]))
        if params is None:
            params = np.zeros(n_params)
        else:
            params = np.array(params, dtype=np.float64).ravel()
            if params.size != n_params:
                raise ShapeError(f"expected {n_params} parameters, got {params.size}")
        self._bind(params)

    def _bind(self, flat: np.ndarray) -> None:
        """Point the layer views at ``flat`` (no copy)."""
        self.params = flat
        self.weights, self.biases = _layer_views(flat, self.sizes)

    @classmethod
    def init(cls, sizes: Sequence[int], rng: np.random.Generator,
             activations: Optional[Sequence[str]] = None) -> "DenseNet":
        """Weights uniform in +-sqrt(6 / fan_in), biases zero."""
        net = cls(sizes, activations)
        for w in net.weights:
            limit = np.sqrt(6.0 / w.shape[1])
            w[...] = rng.uniform(-limit, limit, size=w.shape)
        return net

    @property
    def n_inputs(self) -> int:
        return self.sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.sizes[-1]

    def to_text(self) -> str:
        lines = ["sizes " + " ".join(map(str, self.sizes)),
                 "activations " + " ".join(self.activations)]
        for w, b in zip(self.weights, self.biases):
            lines.extend(" ".join(repr(float(x)) for x in row) for row in w)
            lines.append(" ".join(repr(float(x)) for x in b))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<text>") -> "DenseNet":
        lines = text.splitlines()
        if len(lines) < 2 or not lines[0].startswith("sizes ") or not lines[1].startswith("activations "):
            raise ValueError(f"{source}: missing sizes/activations header")
        sizes = [int(s) for s in lines[0].split()[1:]]
        activations = lines[1].split()[1:]
        values = [float(x) for line in lines[2:] for x in line.split()]
        net = cls(sizes, activations)
        # file order is W0 rows, b0, W1 rows, b1, ... which is the buffer order
        if len(values) != net.params.size:
            raise ValueError(f"{source}: expected {net.params.size} parameters, found {len(values)}")
        net.params[:] = values
        return net

    def dump(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "DenseNet":
        return cls.from_text(Path(path).read_text(), str(path))


def _layer_views(flat: np.ndarray, sizes: Sequence[int]):
    weights, biases = [], []
    offset = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[offset:offset + n_in * n_out].reshape(n_out, n_in))
        offset += n_in * n_out
        biases.append(flat[offset:offset + n_out])
        offset += n_out
    return weights, biases


def _check_input(net: DenseNet, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.n_inputs or x.ndim > 2:
        raise ShapeError(f"network expects inputs of length {net.n_inputs}, got shape {x.shape}")
    return x


def forward(net: DenseNet, x) -> np.ndarray:
    """Q-values for one input vector or a batch (rows)."""
    h = _check_input(net, x)
    for w, b, act in zip(net.weights, net.biases, net.activations):
        h = h @ w.T + b
        if act == "relu":
            h = np.maximum(h, 0.0)
    return h


def mse_loss(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ShapeError(f"prediction/target shapes differ: {predictions.shape} vs {targets.shape}")
    return float(np.mean((targets - predictions) ** 2))


def loss_and_gradient(net: DenseNet, inputs, actions, targets) -> tuple[float, np.ndarray]:
    """Batch loss ``mean((y_i - Q(x_i)[a_i])**2)`` and its flat gradient.

    Only the output selected by each example's action carries error.
    """
    x = _check_input(net, inputs)
    if x.ndim == 1:
        x = x[None, :]
    actions = np.asarray(actions, dtype=np.intp)
    targets = np.asarray(targets, dtype=np.float64)
    batch = x.shape[0]
    if batch == 0 or actions.shape != (batch,) or targets.shape != (batch,):
        raise ShapeError("need one action and one target per (non-empty) batch row")

    acts = [x]
    pre = []
    h = x
    for w, b, act in zip(net.weights, net.biases, net.activations):
        z = h @ w.T + b
        pre.append(z)
        h = np.maximum(z, 0.0) if act == "relu" else z
        acts.append(h)

    rows = np.arange(batch)
    err = h[rows, actions] - targets
    loss = float(np.mean(err**2))

    grad = np.empty_like(net.params)
    gw, gb = _layer_views(grad, net.sizes)
    delta = np.zeros_like(h)
    delta[rows, actions] = (2.0 / batch) * err
    for layer in range(len(net.weights) - 1, -1, -1):
        if net.activations[layer] == "relu":
            delta = delta * (pre[layer] > 0)
        np.matmul(delta.T, acts[layer], out=gw[layer])
        gb[layer][:] = delta.sum(axis=0)
        if layer:
            delta = delta @ net.weights[layer]
    return loss, grad


def backward(net: DenseNet, batch_inputs, per_example_action, per_example_target) -> np.ndarray:
    return loss_and_gradient(net, batch_inputs, per_example_action, per_example_target)[1]


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_stab: float = 1e-8
    zeta: float = 1e-3

    @classmethod
    def for_net(cls, net: DenseNet, zeta: float = 1e-3, **kwargs) -> "AdamState":
        return cls(np.zeros_like(net.params), np.zeros_like(net.params), zeta=zeta, **kwargs)


def adam_step(net: DenseNet, gradients: np.ndarray, opt: AdamState) -> tuple[DenseNet, AdamState]:
    """One bias-corrected Adam descent step, applied in place."""
    g = np.asarray(gradients, dtype=np.float64)
    if g.shape != net.params.shape or opt.first_moment.shape != net.params.shape:
        raise ShapeError("gradient / optimiser state do not match the network parameters")
    opt.step += 1
    m, v = opt.first_moment, opt.second_moment
    m *= opt.beta1
    m += (1.0 - opt.beta1) * g
    v *= opt.beta2
    v += (1.0 - opt.beta2) * (g * g)
    # zeta * m_hat / (sqrt(v_hat) + eps), with the bias corrections folded into scalars
    denom = np.sqrt(v)
    denom *= 1.0 / np.sqrt(1.0 - opt.beta2**opt.step)
    denom += opt.eps_stab
    update = m * (opt.zeta / (1.0 - opt.beta1**opt.step))
    update /= denom
    net.params -= update
    return net, opt


def clone_params(src: DenseNet) -> DenseNet:
    return DenseNet(src.sizes, src.activations, src.params)


class NetStack:
    """``G`` networks of one shape whose parameters are the rows of one array.

    ``member(g)`` is an ordinary :class:`DenseNet` viewing row ``g``, so
    per-network code and the batched functions below see the same numbers.
    """

    def __init__(self, sizes: Sequence[int], count: int, activations: Optional[Sequence[str]] = None):
        proto = DenseNet(sizes, activations)
        self.sizes, self.activations = proto.sizes, proto.activations
        self.params = np.zeros((count, proto.params.size))
        self.weights, self.biases = [], []
        offset = 0
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            self.weights.append(self.params[:, offset:offset + n_in * n_out].reshape(count, n_out, n_in))
            offset += n_in * n_out
            self.biases.append(self.params[:, offset:offset + n_out])
            offset += n_out

    def __len__(self) -> int:
        return self.params.shape[0]

    def member(self, g: int) -> DenseNet:
        net = DenseNet(self.sizes, self.activations)
        net._bind(self.params[g])
        return net


def stack_forward(stack: NetStack, x: np.ndarray) -> np.ndarray:
    """Q-values for inputs of shape ``(G, batch, n_in)``; one batch per network."""
    h = x
    for w, b, act in zip(stack.weights, stack.biases, stack.activations):
        h = h @ w.transpose(0, 2, 1) + b[:, None, :]
        if act == "relu":
            h = np.maximum(h, 0.0)
    return h


def stack_loss_and_gradient(stack: NetStack, x: np.ndarray, actions: np.ndarray,
                            targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-network losses ``(G,)`` and flat gradients ``(G, n_params)``."""
    count, batch = actions.shape
    acts, pre = [x], []
    h = x
    for w, b, act in zip(stack.weights, stack.biases, stack.activations):
        z = h @ w.transpose(0, 2, 1) + b[:, None, :]
        pre.append(z)
        h = np.maximum(z, 0.0) if act == "relu" else z
        acts.append(h)

    g_idx, rows = np.ogrid[:count, :batch]
    err = h[g_idx, rows, actions] - targets
    losses = np.mean(err**2, axis=1)

    grad = np.empty_like(stack.params)
    delta = np.zeros_like(h)
    delta[g_idx, rows, actions] = (2.0 / batch) * err
    offsets = np.cumsum([0] + [o * i + o for i, o in zip(stack.sizes[:-1], stack.sizes[1:])])
    for layer in range(len(stack.weights) - 1, -1, -1):
        if stack.activations[layer] == "relu":
            delta = delta * (pre[layer] > 0)
        n_out, n_in = stack.sizes[layer + 1], stack.sizes[layer]
        lo = offsets[layer]
        grad[:, lo:lo + n_out * n_in] = (delta.transpose(0, 2, 1) @ acts[layer]).reshape(count, -1)
        grad[:, lo + n_out * n_in:offsets[layer + 1]] = delta.sum(axis=1)
        if layer:
            delta = delta @ stack.weights[layer]
    return losses, grad
