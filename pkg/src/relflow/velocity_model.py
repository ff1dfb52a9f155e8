"""Time-conditioned MLP velocity predictor ``N(x, dt)`` with exact gradients.

The network sees ``concat(x, time_features(dt))`` and returns a velocity of
the same width as ``x``. Parameters live in float32; all arithmetic runs in
float64.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .rng import Rng
from .storage import HeaderMismatchError, pack_container, unpack_container

CKPT_MAGIC = b"RFCKPT1\n"


@dataclass(frozen=True)
class ModelArch:
    input_dim: int
    hidden_dims: tuple[int, ...] = (128, 128, 128)
    fourier_bands: int = 6
    activation: str = "silu"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        object.__setattr__(self, "activation", self.activation.lower())
        if self.input_dim < 1 or any(h < 1 for h in self.hidden_dims) or self.fourier_bands < 1:
            raise ValueError(f"invalid architecture {self}")
        if self.activation not in ("silu", "tanh"):
            raise ValueError(f"activation must be silu or tanh, got {self.activation!r}")

    @property
    def n_time_features(self) -> int:
        return 2 * self.fourier_bands + 2

    def layer_sizes(self) -> list[tuple[int, int]]:
        """``(out, in)`` per affine layer, input to output."""
        widths = [self.input_dim + self.n_time_features, *self.hidden_dims, self.input_dim]
        return [(o, i) for i, o in zip(widths[:-1], widths[1:])]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d


@dataclass
class VelocityModel:
    arch: ModelArch
    params: list[np.ndarray] = field(default_factory=list)  # W0, b0, W1, b1, ...

    @classmethod
    def init(cls, arch: ModelArch, seed: int = 0) -> "VelocityModel":
        """Glorot-uniform weights from the seeded stream, zero biases."""
        rng = Rng(seed, 0x1417)
        params = []
        for out_dim, in_dim in arch.layer_sizes():
            bound = math.sqrt(6.0 / (in_dim + out_dim))
            w = (2.0 * rng.uniform(out_dim * in_dim) - 1.0) * bound
            params.append(w.reshape(out_dim, in_dim).astype(np.float32))
            params.append(np.zeros(out_dim, dtype=np.float32))
        return cls(arch, params)

    @classmethod
    def zeros(cls, arch: ModelArch) -> "VelocityModel":
        params = []
        for out_dim, in_dim in arch.layer_sizes():
            params += [np.zeros((out_dim, in_dim), np.float32), np.zeros(out_dim, np.float32)]
        return cls(arch, params)

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self, dtype=None) -> "VelocityModel":
        return VelocityModel(self.arch, [p.astype(dtype or p.dtype, copy=True) for p in self.params])

    def __call__(self, x, dt):
        return forward(self, x, dt)


def time_features(dt, n_bands: int) -> np.ndarray:
    """``[dt, exp(-dt), sin(2^k pi dt), cos(2^k pi dt) for k < n_bands]``.

    Scalar ``dt`` gives a vector; an array gives one row per entry.
    """
    dt = np.asarray(dt, dtype=np.float64)
    if np.any(~np.isfinite(dt)) or np.any(dt <= 0):
        raise ValueError("dt must be > 0 and finite")
    freqs = (2.0 ** np.arange(n_bands)) * math.pi
    ang = dt[..., None] * freqs
    feats = np.empty(dt.shape + (2 * n_bands + 2,))
    feats[..., 0] = dt
    feats[..., 1] = np.exp(-dt)
    feats[..., 2::2] = np.sin(ang)
    feats[..., 3::2] = np.cos(ang)
    return feats


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _act(z, kind):
    if kind == "tanh":
        return np.tanh(z)
    return z * _sigmoid(z)


def _act_grad(z, kind):
    if kind == "tanh":
        return 1.0 - np.tanh(z) ** 2
    s = _sigmoid(z)
    return s * (1.0 + z * (1.0 - s))


def _as_batch(model, x, dt):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x.reshape(1, -1) if single else x.reshape(x.shape[0], -1)
    if xb.shape[1] != model.arch.input_dim:
        raise ValueError(f"input width {xb.shape[1]} != model input_dim {model.arch.input_dim}")
    dt = np.asarray(dt, dtype=np.float64)
    dtb = np.broadcast_to(dt, (xb.shape[0],)) if dt.ndim == 0 else dt.reshape(-1)
    if dtb.shape[0] != xb.shape[0]:
        raise ValueError("need one dt per batch row")
    feats = time_features(dtb, model.arch.fourier_bands)
    return x.shape, np.concatenate([xb, feats], axis=1)


def _forward_cached(model, x, dt):
    shape, h = _as_batch(model, x, dt)
    kind = model.arch.activation
    n_layers = len(model.params) // 2
    inputs, pre = [], []
    for ell in range(n_layers):
        w = model.params[2 * ell].astype(np.float64)
        b = model.params[2 * ell + 1].astype(np.float64)
        inputs.append(h)
        z = h @ w.T + b
        if ell < n_layers - 1:
            pre.append(z)
            h = _act(z, kind)
        else:
            h = z
    return shape, h, (inputs, pre)


def forward(model: VelocityModel, x, dt) -> np.ndarray:
    """Velocity prediction with the same shape as ``x`` (one row or a batch)."""
    shape, out, _ = _forward_cached(model, x, dt)
    return out.reshape(shape)


def backward(model: VelocityModel, x, dt, upstream) -> list[np.ndarray]:
    """Gradients of ``sum(upstream * forward(x, dt))`` for every parameter.

    Returned in float64, in the order of ``model.params``.
    """
    _, out, cache = _forward_cached(model, x, dt)
    return _backprop(model, out, cache, upstream)


def _backprop(model, out, cache, upstream):
    inputs, pre = cache
    g = np.asarray(upstream, dtype=np.float64)
    if g.size != out.size:
        raise ValueError(f"upstream gradient has {g.size} values, output has {out.size}")
    g = g.reshape(out.shape)
    kind = model.arch.activation
    n_layers = len(model.params) // 2
    grads: list[np.ndarray] = [None] * len(model.params)  # type: ignore[list-item]
    for ell in reversed(range(n_layers)):
        if ell < n_layers - 1:
            g = g * _act_grad(pre[ell], kind)
        grads[2 * ell] = g.T @ inputs[ell]
        grads[2 * ell + 1] = g.sum(axis=0)
        if ell:
            g = g @ model.params[2 * ell].astype(np.float64)
    return grads


def loss_and_grads(model: VelocityModel, x, dt, target):
    """Batch-mean squared error against ``target`` and its parameter gradients.

    Returns ``(loss, prediction, grads)`` from a single forward pass.
    """
    shape, out, cache = _forward_cached(model, x, dt)
    diff = out - np.asarray(target, dtype=np.float64).reshape(out.shape)
    b = out.shape[0]
    loss = float(np.sum(diff * diff)) / b
    grads = _backprop(model, out, cache, (2.0 / b) * diff)
    return loss, out.reshape(shape), grads


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls([np.zeros_like(p, dtype=np.float32) for p in params],
                   [np.zeros_like(p, dtype=np.float32) for p in params])


def adam_step(params, grads, state: AdamState, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``."""
    if lr <= 0:
        raise ValueError("learning rate must be > 0")
    if len(grads) != len(params):
        raise ValueError("one gradient per parameter is required")
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in parameter {i}")
    t = state.step + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m64 = beta1 * m.astype(np.float64) + (1.0 - beta1) * g
        v64 = beta2 * v.astype(np.float64) + (1.0 - beta2) * g * g
        upd = lr * (m64 / c1) / (np.sqrt(v64 / c2) + eps)
        new_p.append((p.astype(np.float64) - upd).astype(p.dtype))
        new_m.append(m64.astype(np.float32))
        new_v.append(v64.astype(np.float32))
    return new_p, AdamState(new_m, new_v, t)


def _layer_names(arch):
    names = []
    for ell, (o, i) in enumerate(arch.layer_sizes()):
        names += [(f"layer{ell}.weight", [o, i]), (f"layer{ell}.bias", [o])]
    return names


def save_checkpoint(model: VelocityModel, path):
    names = _layer_names(model.arch)
    header = {
        "arch": model.arch.to_dict(),
        "layers": [{"name": n, "shape": s} for n, s in names],
        "n_values": model.n_params,
        "dtype": "f32",
        "endianness": "LE",
    }
    payload = np.concatenate([np.asarray(p, dtype=np.float32).ravel() for p in model.params])
    Path(path).write_bytes(pack_container(CKPT_MAGIC, header, payload))


def load_checkpoint(path) -> VelocityModel:
    header, vals = unpack_container(Path(path).read_bytes(), CKPT_MAGIC, n_values_key="n_values")
    try:
        arch = ModelArch(**header["arch"])
        layers = [(d["name"], list(d["shape"])) for d in header["layers"]]
    except (KeyError, TypeError, ValueError) as e:
        raise HeaderMismatchError(f"bad checkpoint header: {e}") from None
    if layers != _layer_names(arch):
        raise HeaderMismatchError("layer list does not match the architecture")
    if sum(math.prod(s) for _, s in layers) != vals.size:
        raise HeaderMismatchError("layer sizes do not add up to the payload length")
    params, pos = [], 0
    for _, shape in layers:
        n = math.prod(shape)
        params.append(vals[pos:pos + n].reshape(shape).astype(np.float32))
        pos += n
    return VelocityModel(arch, params)
