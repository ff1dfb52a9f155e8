"""Curriculum training of the velocity model and the ablation variants.

Every mode draws a batch of ``(network input, dt, target)`` triples:

* ``relativeflow`` + ``coupled``: exact pairs on the conditional path from a
  source sample to a clean sample, target ``(x_t - x_{t-dt}) / expm1(dt)``.
* ``relativeflow`` + ``blind_degrade``: ``x_{t-dt} = D_dt(x_t)`` from a
  reference pool, same target.
* ``fm_linear``: straight line from source to reference, target ``x1 - x0``,
  conditioned on the remaining time ``1 - s``.
* ``fm_cot``: exponential-time path from source to reference with endpoint
  supervision.
* ``fm_svf``: degradation pairs with the linear-path divisor ``dt``.

After each epoch the dt range expands as ``(lo * alpha, hi / alpha)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields
from enum import Enum

import numpy as np

from .datagen import RingSpec, coupled_endpoints, heterogeneous_references, sample_gaussian
from .degradation import DegradationSpec, Kind, degrade
from .rng import Rng, log_uniform, mix
from .svf import target_velocity
from .velocity_model import AdamState, ModelArch, VelocityModel, adam_step, loss_and_grads

DT_FLOOR = 1e-4
DT_CEIL = 5.0


class Mode(str, Enum):
    FM_LINEAR = "fm_linear"
    FM_COT = "fm_cot"
    FM_SVF = "fm_svf"
    RELATIVEFLOW = "relativeflow"


class Supervision(str, Enum):
    COUPLED = "coupled"
    BLIND_DEGRADE = "blind_degrade"


class TrainingDiverged(FloatingPointError):
    pass


def _enum(cls, v):
    return cls(str(getattr(v, "value", v)).lower())


@dataclass(frozen=True)
class TrainConfig:
    mode: Mode = Mode.RELATIVEFLOW
    supervision: Supervision = Supervision.COUPLED
    epochs: int = 50
    steps_per_epoch: int = 100
    batch_size: int = 256
    lr: float = 1e-3
    alpha_decay: float = 0.9
    dt_min0: float = 0.05
    dt_max0: float = 0.2
    t_min: float = 0.1
    t_max: float = 3.0
    seed: int = 42
    degradation: DegradationSpec = field(default_factory=lambda: DegradationSpec(kind=Kind.TOY))

    def __post_init__(self):
        object.__setattr__(self, "mode", _enum(Mode, self.mode))
        object.__setattr__(self, "supervision", _enum(Supervision, self.supervision))
        if isinstance(self.degradation, dict):
            object.__setattr__(self, "degradation", DegradationSpec.from_dict(self.degradation))
        if not 0 < self.dt_min0 <= self.dt_max0:
            raise ValueError(f"need 0 < dt_min0 <= dt_max0, got {self.dt_min0}, {self.dt_max0}")
        if not self.alpha_decay > 0:
            raise ValueError("alpha_decay must be > 0")
        if self.epochs < 0 or self.steps_per_epoch < 1 or self.batch_size < 1:
            raise ValueError("epochs >= 0, steps_per_epoch >= 1 and batch_size >= 1 required")
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if not 0 < self.t_min <= self.t_max:
            raise ValueError("need 0 < t_min <= t_max")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        bad = sorted(set(d) - {f.name for f in fields(cls)})
        if bad:
            raise KeyError(f"unknown train key(s): {', '.join(bad)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["supervision"] = self.supervision.value
        d["degradation"] = self.degradation.to_dict()
        return d


@dataclass
class TrainData:
    """``references``: clean endpoints (coupled) or noisy references (blind).

    ``source`` holds noise-endpoint samples for the path-based modes.
    """

    references: np.ndarray
    source: np.ndarray | None = None
    paired: bool = False  # row i of source is coupled to row i of references

    def __post_init__(self):
        self.references = np.asarray(self.references, dtype=np.float64)
        if self.references.ndim != 2 or len(self.references) == 0:
            raise ValueError("references must be a non-empty (N, D) array")
        if self.source is not None:
            self.source = np.asarray(self.source, dtype=np.float64)
            if self.source.ndim != 2 or len(self.source) == 0:
                raise ValueError("source must be a non-empty (N, D) array")
            if self.source.shape[1] != self.references.shape[1]:
                raise ValueError("source and references differ in width")
            if self.paired and len(self.source) != len(self.references):
                raise ValueError("paired data needs equal-length source and references")

    @property
    def dim(self) -> int:
        return self.references.shape[1]


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    dt_ranges: list[tuple[float, float]] = field(default_factory=list)
    final_dt_range: tuple[float, float] = (0.0, 0.0)
    wall_clock_s: float = 0.0
    seed: int = 0
    mode: str = ""
    supervision: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dt_ranges"] = [list(r) for r in self.dt_ranges]
        d["final_dt_range"] = list(self.final_dt_range)
        return d


@dataclass
class Batch:
    x: np.ndarray  # network input
    cond: np.ndarray  # per-row conditioning value (dt, or 1 - s for fm_linear)
    target: np.ndarray
    x_cleaner: np.ndarray | None = None


def effective_range(lo: float, hi: float) -> tuple[float, float]:
    """Clamp the curriculum range into ``[DT_FLOOR, DT_CEIL]``.

    A range that has crossed over (alpha > 1 for many epochs) collapses to
    its geometric mean, which the recurrence leaves unchanged.
    """
    if lo > hi:
        lo = hi = math.sqrt(lo * hi)
    return min(max(lo, DT_FLOOR), DT_CEIL), min(max(hi, DT_FLOOR), DT_CEIL)


def sample_dt(rng: Rng, n: int, dt_range) -> np.ndarray:
    lo, hi = effective_range(*dt_range)
    if lo == hi:
        return np.full(n, lo)
    return lo + (hi - lo) * rng.uniform(n)


def coupled_pair(x0, x_inf, t, dt):
    """Exact ``(x_noisier, x_cleaner, target)`` at cleaner level ``t``.

    The noisier level ``t - dt`` may be negative; the path is extended
    exactly by ``x_inf - exp(dt) * (x_inf - x_t)``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    x_inf = np.asarray(x_inf, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    dt = np.asarray(dt, dtype=np.float64)
    col = (lambda a: a.reshape(a.shape + (1,) * (x0.ndim - a.ndim))) if t.ndim else (lambda a: a)
    gap = x_inf - x0
    x_clean = x_inf - np.exp(-col(t)) * gap
    x_noisy = x_inf - np.exp(-(col(t) - col(dt))) * gap
    return x_noisy, x_clean, target_velocity(x_noisy, x_clean, dt)


def make_batch(data: TrainData, cfg: TrainConfig, dt_range, rng: Rng, n: int | None = None) -> Batch:
    n = n or cfg.batch_size
    refs = data.references
    pick = lambda pool, r: pool[(r.next_u64(n) % np.uint64(len(pool))).astype(np.int64)]
    r_idx, r_src, r_dt, r_t, r_noise = (rng.spawn(k) for k in range(5))
    mode = cfg.mode
    needs_source = mode in (Mode.FM_LINEAR, Mode.FM_COT) or (
        mode is Mode.RELATIVEFLOW and cfg.supervision is Supervision.COUPLED)
    if needs_source and data.source is None:
        raise ValueError(f"mode {mode.value}/{cfg.supervision.value} needs source samples")

    idx = (r_idx.next_u64(n) % np.uint64(len(refs))).astype(np.int64)
    x_ref = refs[idx]
    if needs_source:
        x0 = data.source[idx] if data.paired else pick(data.source, r_src)
    if mode is Mode.FM_LINEAR:
        s = r_t.uniform(n)
        x_s = (1.0 - s)[:, None] * x0 + s[:, None] * x_ref
        return Batch(x_s, 1.0 - s, x_ref - x0)

    dt = sample_dt(r_dt, n, dt_range)
    if needs_source:
        # cleaner level shifted so the noisier level t - dt stays >= 0
        t = np.maximum(log_uniform(r_t, n, cfg.t_min, cfg.t_max), dt)
        x_noisy, x_clean, target = coupled_pair(x0, x_ref, t, dt)
        return Batch(x_noisy, dt, target, x_clean)

    x_noisy = degrade(x_ref, dt, cfg.degradation, r_noise)
    if mode is Mode.FM_SVF:
        target = (x_ref - x_noisy) / dt[:, None]
    else:
        target = target_velocity(x_noisy, x_ref, dt)
    return Batch(x_noisy, dt, target, x_ref)


def train(cfg: TrainConfig, data: TrainData, arch: ModelArch | None = None,
          model: VelocityModel | None = None, log=None):
    """Run the curriculum; returns ``(model, report)``."""
    arch = arch or (model.arch if model else ModelArch(data.dim))
    if arch.input_dim != data.dim:
        raise ValueError(f"model input_dim {arch.input_dim} != data width {data.dim}")
    model = model.copy() if model else VelocityModel.init(arch, cfg.seed)
    opt = AdamState.zeros_like(model.params)
    lo, hi = cfg.dt_min0, cfg.dt_max0
    report = TrainReport(seed=cfg.seed, mode=cfg.mode.value, supervision=cfg.supervision.value)
    start = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        total = 0.0
        for step in range(cfg.steps_per_epoch):
            rng = Rng(cfg.seed, mix(epoch, step))
            b = make_batch(data, cfg, (lo, hi), rng)
            loss, _, grads = loss_and_grads(model, b.x, b.cond, b.target)
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}, step {step}")
            model.params, opt = adam_step(model.params, grads, opt, lr=cfg.lr)
            total += loss
        report.epoch_losses.append(total / cfg.steps_per_epoch)
        lo, hi = lo * cfg.alpha_decay, hi / cfg.alpha_decay
        report.dt_ranges.append((lo, hi))
        if log:
            log(f"epoch {epoch}/{cfg.epochs} loss {report.epoch_losses[-1]:.6g} dt [{lo:.4g}, {hi:.4g}]")
    report.final_dt_range = (lo, hi)
    report.wall_clock_s = time.perf_counter() - start
    return model, report


def toy_data(cfg: TrainConfig, n: int = 20000, ring=None, source_std: float = 1.0,
             coupling: str = "radial") -> TrainData:
    """Gaussian source plus clean ring (coupled) or heterogeneous references (blind)."""
    ring = ring or RingSpec()
    rng = Rng(cfg.seed, 0xDA7A)
    if cfg.supervision is Supervision.COUPLED:
        source, refs = coupled_endpoints(n, ring, source_std, coupling, rng.spawn(1))
    else:
        refs, _ = heterogeneous_references(n, ring, source_std, coupling=coupling, rng=rng.spawn(2))
        source = sample_gaussian(n, ring.center, source_std, rng.spawn(3))
    return TrainData(refs, source, paired=cfg.supervision is Supervision.COUPLED)
