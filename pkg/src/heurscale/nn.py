"""Feedforward ReLU networks in numpy, with hand-written backprop and Adam.

Two shapes are supported:

* fixed depth: ``input -> linear(m) -> ReLU -> linear(out)``
* fixed width: ``h`` hidden layers of width ``d + 3``, each
  ``linear -> batch-norm -> ReLU``.  One plain layer (two when ``h`` is even)
  is followed by residual blocks of two layers; a block adds its input to the
  second layer's normalised output before the final ReLU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import losses
from .criteria import FitCriterion
from .errors import DivergedError, FormatError, NondifferentiableLossError, ShapeMismatchError
from .losses import LossConfig

FIXED_DEPTH = "fixed_depth"
FIXED_WIDTH = "fixed_width"
TRAIN = "train"
EVAL = "eval"

BN_EPS = 1e-5
BN_MOMENTUM = 0.9


@dataclass(frozen=True)
class Architecture:
    kind: str
    input_dim: int
    size: int  # hidden neurons (fixed depth) or hidden layers (fixed width)
    output_dim: int = 1
    batch_norm: bool = True

    def __post_init__(self):
        if self.kind not in (FIXED_DEPTH, FIXED_WIDTH):
            raise ValueError(f"unknown architecture kind {self.kind!r}")
        if self.input_dim < 1 or self.size < 1 or self.output_dim < 1:
            raise ValueError(f"dimensions must be positive: {self}")
        if self.kind == FIXED_DEPTH and self.batch_norm:
            object.__setattr__(self, "batch_norm", False)

    @property
    def width(self) -> int:
        return self.size if self.kind == FIXED_DEPTH else self.input_dim + 3

    @property
    def hidden_layers(self) -> int:
        return 1 if self.kind == FIXED_DEPTH else self.size

    @property
    def plain_layers(self) -> int:
        if self.kind == FIXED_DEPTH:
            return 1
        return 1 if self.size % 2 else 2

    @property
    def residual_blocks(self) -> int:
        return (self.hidden_layers - self.plain_layers) // 2

    def plan(self) -> list[tuple[int, ...]]:
        """Hidden-layer indices grouped into units: (i,) plain, (i, j) residual block."""
        units: list[tuple[int, ...]] = [(i,) for i in range(self.plain_layers)]
        i = self.plain_layers
        for _ in range(self.residual_blocks):
            units.append((i, i + 1))
            i += 2
        return units

    def linear_shapes(self) -> list[tuple[int, int]]:
        shapes = []
        fan_in = self.input_dim
        for _ in range(self.hidden_layers):
            shapes.append((fan_in, self.width))
            fan_in = self.width
        shapes.append((fan_in, self.output_dim))
        return shapes


def param_count(arch: Architecture) -> int:
    """Weights and biases of the linear layers; batch-norm parameters are not counted."""
    d, o = arch.input_dim, arch.output_dim
    if arch.kind == FIXED_DEPTH:
        m = arch.size
        return m * (d + 1) + o * (m + 1)
    w, h = arch.width, arch.size
    return w * (d + 1) + (h - 1) * w * (w + 1) + o * (w + 1)


def _param_names(arch: Architecture) -> list[str]:
    names = []
    for i in range(arch.hidden_layers):
        names += [f"W{i}", f"b{i}"]
        if arch.batch_norm:
            names += [f"gamma{i}", f"beta{i}"]
    return names + ["W_out", "b_out"]


class Network:
    """Parameters plus the forward/backward passes for one architecture."""

    def __init__(self, arch: Architecture, params: dict[str, np.ndarray], buffers: dict[str, np.ndarray] | None = None):
        self.arch = arch
        self.params = params
        self.buffers = buffers if buffers is not None else {}
        self._cache = None
        self._check_shapes()
        self.pack()

    def pack(self) -> np.ndarray:
        """Move all trainable parameters into one contiguous vector; ``params`` become views of it."""
        names = _param_names(self.arch)
        flat = np.concatenate([np.asarray(self.params[k], dtype=np.float64).ravel() for k in names])
        pos = 0
        for k in names:
            shape = np.shape(self.params[k])
            size = int(np.prod(shape))
            self.params[k] = flat[pos : pos + size].reshape(shape)
            pos += size
        self.flat = flat
        return flat

    def flatten_grads(self, grads: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([grads[k].ravel() for k in _param_names(self.arch)])

    def _check_shapes(self):
        arch = self.arch
        for i, (fi, fo) in enumerate(arch.linear_shapes()):
            key = "_out" if i == arch.hidden_layers else str(i)
            w, b = self.params.get(f"W{key}"), self.params.get(f"b{key}")
            if w is None or b is None or w.shape != (fi, fo) or b.shape != (fo,):
                raise ShapeMismatchError(f"layer {key} parameters do not match {arch}")

    @property
    def param_count(self) -> int:
        return param_count(self.arch)

    def copy(self) -> "Network":
        return Network(
            self.arch,
            {k: v.copy() for k, v in self.params.items()},
            {k: v.copy() for k, v in self.buffers.items()},
        )

    # -- forward -----------------------------------------------------------

    def _affine(self, a, i, mode, update_stats):
        u = a @ self.params[f"W{i}"] + self.params[f"b{i}"]
        if not self.arch.batch_norm:
            return u, (a, None, None, None)
        gamma, beta = self.params[f"gamma{i}"], self.params[f"beta{i}"]
        if mode == TRAIN:
            mu = u.mean(axis=0)
            var = u.var(axis=0)
            if update_stats:
                self.buffers[f"mean{i}"] = BN_MOMENTUM * self.buffers[f"mean{i}"] + (1 - BN_MOMENTUM) * mu
                self.buffers[f"var{i}"] = BN_MOMENTUM * self.buffers[f"var{i}"] + (1 - BN_MOMENTUM) * var
        else:
            mu, var = self.buffers[f"mean{i}"], self.buffers[f"var{i}"]
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (u - mu) * inv_std
        return gamma * xhat + beta, (a, xhat, inv_std, mode)

    def forward(self, x, mode: str = EVAL, update_stats: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.arch.input_dim:
            raise ShapeMismatchError(f"expected (batch, {self.arch.input_dim}) input, got {x.shape}")
        if x.shape[0] == 0:
            raise ShapeMismatchError("empty batch")
        units = []
        a = x
        for unit in self.arch.plan():
            if len(unit) == 1:
                z, c = self._affine(a, unit[0], mode, update_stats)
                units.append((z, c))
                a = np.maximum(z, 0.0)
            else:
                i, j = unit
                z1, c1 = self._affine(a, i, mode, update_stats)
                a1 = np.maximum(z1, 0.0)
                z2, c2 = self._affine(a1, j, mode, update_stats)
                s = z2 + a
                units.append((z1, c1, s, c2))
                a = np.maximum(s, 0.0)
        out = a @ self.params["W_out"] + self.params["b_out"]
        self._cache = (units, a)
        return out[:, 0] if self.arch.output_dim == 1 else out

    __call__ = forward

    # -- backward ----------------------------------------------------------

    def _affine_back(self, dy, i, cache, grads):
        a, xhat, inv_std, mode = cache
        if xhat is None:
            du = dy
        else:
            grads[f"gamma{i}"] = (dy * xhat).sum(axis=0)
            grads[f"beta{i}"] = dy.sum(axis=0)
            dxhat = dy * self.params[f"gamma{i}"]
            if mode == TRAIN:
                n = dy.shape[0]
                du = inv_std / n * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
            else:
                du = dxhat * inv_std
        grads[f"W{i}"] = a.T @ du
        grads[f"b{i}"] = du.sum(axis=0)
        return du @ self.params[f"W{i}"].T

    def backward(self, dout) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss given its gradient ``dout`` w.r.t. the last forward's outputs."""
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        units, a_last = self._cache
        dout = np.asarray(dout, dtype=np.float64).reshape(a_last.shape[0], self.arch.output_dim)
        grads: dict[str, np.ndarray] = {
            "W_out": a_last.T @ dout,
            "b_out": dout.sum(axis=0),
        }
        da = dout @ self.params["W_out"].T
        for unit, cache in zip(reversed(self.arch.plan()), reversed(units)):
            if len(unit) == 1:
                z, c = cache
                da = self._affine_back(da * (z > 0), unit[0], c, grads)
            else:
                i, j = unit
                z1, c1, s, c2 = cache
                ds = da * (s > 0)
                da1 = self._affine_back(ds, j, c2, grads)
                da = ds + self._affine_back(da1 * (z1 > 0), i, c1, grads)
        return grads


def _init_params(arch: Architecture, rng: np.random.Generator | None):
    params, buffers = {}, {}
    shapes = arch.linear_shapes()
    for i, (fi, fo) in enumerate(shapes):
        key = "_out" if i == len(shapes) - 1 else str(i)
        if rng is None:
            w = np.zeros((fi, fo))
        else:
            w = rng.standard_normal((fi, fo)) * math.sqrt(2.0 / fi)
        params[f"W{key}"] = w
        params[f"b{key}"] = np.zeros(fo)
        if arch.batch_norm and key != "_out":
            params[f"gamma{i}"] = np.ones(fo)
            params[f"beta{i}"] = np.zeros(fo)
            buffers[f"mean{i}"] = np.zeros(fo)
            buffers[f"var{i}"] = np.ones(fo)
    return params, buffers


def build(arch: Architecture, rng: np.random.Generator | None = None) -> Network:
    """He-normal weights and zero biases; ``rng=None`` gives an all-zero network."""
    params, buffers = _init_params(arch, rng)
    return Network(arch, params, buffers)


def build_fixed_depth(d: int, m: int, output_dim: int = 1, rng: np.random.Generator | None = None) -> Network:
    return build(Architecture(FIXED_DEPTH, d, m, output_dim), rng)


def build_fixed_width(
    d: int, h: int, output_dim: int = 1, rng: np.random.Generator | None = None, batch_norm: bool = True
) -> Network:
    return build(Architecture(FIXED_WIDTH, d, h, output_dim, batch_norm), rng)


def loss_and_grads(net: Network, x, labels, loss: LossConfig, mode: str = TRAIN):
    """Mean batch loss and its gradient with respect to every parameter."""
    if not loss.differentiable:
        raise NondifferentiableLossError("the 0/1 loss cannot be backpropagated")
    out = net.forward(x, mode)
    value = losses.evaluate(loss, out, labels)
    grads = net.backward(losses.gradient(loss, out, labels))
    return value, grads


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState) -> dict[str, np.ndarray]:
    """One bias-corrected Adam update, applied in place."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1 - b1**state.step
    c2 = 1 - b2**state.step
    for k, g in grads.items():
        if k not in state.m:
            state.m[k] = np.zeros_like(g)
            state.v[k] = np.zeros_like(g)
        m, v = state.m[k], state.v[k]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        params[k] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


@dataclass
class TrainReport:
    epochs: int
    satisfied: bool
    final_loss: float
    best_metric: float
    final_metric: float
    loss_history: list[float] = field(default_factory=list)
    metric_history: list[float] = field(default_factory=list)


def train(
    net: Network,
    features,
    labels,
    loss: LossConfig,
    epochs: int,
    batch_size: int,
    criterion: FitCriterion | None,
    rng: np.random.Generator,
    lr: float = 1e-3,
) -> TrainReport:
    """Shuffled mini-batch Adam, checking ``criterion`` on the training set after each epoch.

    Stops as soon as the criterion holds. Raises :class:`DivergedError` on a
    non-finite loss.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    if not loss.differentiable:
        raise NondifferentiableLossError("train with a differentiable loss")
    state = AdamState(lr=lr)
    net.pack()
    store = {"flat": net.flat}
    report = TrainReport(0, False, math.nan, math.nan, math.nan)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, batch_size):
            idx = order[lo : lo + batch_size]
            out = net.forward(x[idx], TRAIN)
            value, dout = losses.value_and_grad(loss, out, y[idx])
            total += value * len(idx)
            grads = net.backward(dout)
            adam_step(store, {"flat": net.flatten_grads(grads)}, state)
        epoch_loss = total / n
        if not math.isfinite(epoch_loss):
            raise DivergedError(f"loss became {epoch_loss} at epoch {epoch}")
        report.epochs = epoch
        report.final_loss = epoch_loss
        report.loss_history.append(epoch_loss)
        if criterion is not None:
            metric = criterion.measure(net.forward(x, EVAL), y)
            report.metric_history.append(metric)
            report.final_metric = metric
            if criterion.better(metric, report.best_metric):
                report.best_metric = metric
            if criterion.satisfied_by(metric):
                report.satisfied = True
                break
    return report


# -- checkpoints ---------------------------------------------------------------

CHECKPOINT_MAGIC = b"HSNN1\n"


def save_model(path, net: Network, meta: dict | None = None) -> None:
    """Text header of key=value lines, a blank line, then float64 little-endian parameters."""
    arch = net.arch
    header = {
        "kind": arch.kind,
        "input_dim": arch.input_dim,
        "size": arch.size,
        "output_dim": arch.output_dim,
        "batch_norm": int(arch.batch_norm),
    }
    for k, v in (meta or {}).items():
        if k in header or "\n" in str(v) or "=" in str(k):
            raise ValueError(f"bad metadata key {k!r}")
        header[k] = v
    blob = [net.params[k] for k in _param_names(arch)] + [net.buffers[k] for k in sorted(net.buffers)]
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        for k, v in header.items():
            fh.write(f"{k}={v}\n".encode())
        fh.write(b"\n")
        for arr in blob:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path) -> tuple[Network, dict]:
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise FormatError(f"{path}: not a model checkpoint")
    end = data.find(b"\n\n", len(CHECKPOINT_MAGIC) - 1)
    if end < 0:
        raise FormatError(f"{path}: unterminated header")
    meta = dict(line.split("=", 1) for line in data[len(CHECKPOINT_MAGIC) : end].decode().splitlines())
    try:
        arch = Architecture(meta["kind"], int(meta["input_dim"]), int(meta["size"]), int(meta["output_dim"]), bool(int(meta["batch_norm"])))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad architecture header ({exc})") from exc
    params, buffers = _init_params(arch, None)
    names = [(params, k) for k in _param_names(arch)] + [(buffers, k) for k in sorted(buffers)]
    flat = np.frombuffer(data[end + 2 :], dtype="<f8")
    expected = sum(store[k].size for store, k in names)
    if flat.size != expected:
        raise FormatError(f"{path}: expected {expected} parameters, found {flat.size}")
    pos = 0
    for store, k in names:
        size = store[k].size
        store[k] = flat[pos : pos + size].reshape(store[k].shape).copy()
        pos += size
    extra = {k: v for k, v in meta.items() if k not in ("kind", "input_dim", "size", "output_dim", "batch_norm")}
    return Network(arch, params, buffers), extra
