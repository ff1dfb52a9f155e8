"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py`` for the lines alone.
"""

import json
import math
import time

import numpy as np
import pytest

from relflow import cli
from relflow.cot_path import component_residual, composition_residual, conditional_point
from relflow.datagen import sample_gaussian, sample_ring
from relflow.degradation import DegradationSpec, Kind, degrade_ct, degrade_mr
from relflow.metrics import energy_distance, psnr, rmse, ssim
from relflow.rng import Rng
from relflow.sampler import SampleSchedule, residual_factor, sample, sample_linear_fm
from relflow.svf import target_velocity
from relflow.trainer import TrainConfig, toy_data, train
from relflow.velocity_model import ModelArch, VelocityModel, loss_and_grads

RESULTS: list[str] = []


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_c01_component_property():
    g = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        x0, xi = g.uniform(-10, 10, (2, 3))
        ti, t, tj = np.sort(g.uniform(0.01, 10, 3))
        worst = max(worst, component_residual(x0, xi, (ti, t, tj)))
    el = time.perf_counter() - t0
    record(1, worst <= 1e-11 and el < 5, f"max residual {worst:.2e} (<= 1e-11), {el:.2f}s (< 5s)")


def test_c02_composition_property():
    g = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        t1, t2, t3 = np.sort(g.uniform(0.01, 10, 3))
        worst = max(worst, composition_residual(t1, t2, t3, g.uniform(t1, t3)))
    el = time.perf_counter() - t0
    record(2, worst <= 1e-11 and el < 5, f"max residual {worst:.2e} (<= 1e-11), {el:.2f}s (< 5s)")


def test_c03_velocity_identity():
    g = np.random.default_rng(3)
    e1 = e2 = 0.0
    for _ in range(10_000):
        x0, xi = g.uniform(-10, 10, (2, 3))
        dt = g.uniform(0.01, 2.0)
        t = dt + g.uniform(0.0, 6.0)
        clean = conditional_point(x0, xi, t)
        v = target_velocity(conditional_point(x0, xi, t - dt), clean, dt)
        e1 = max(e1, float(np.max(np.abs(v - math.exp(-t) * (xi - x0)))))
        e2 = max(e2, float(np.max(np.abs(v - (xi - clean)))))
    record(3, e1 <= 1e-11 and e2 <= 1e-11, f"endpoint form {e1:.2e}, shift form {e2:.2e} (<= 1e-11)")


def test_c04_oracle_sampler():
    sched = SampleSchedule()
    err_factor = abs(residual_factor(sched) - 0.684)
    out, _ = sample(lambda x, dt: 0.0 - x, np.array([2.0]), sched)
    err_point = abs(out[0] - 1.368)
    g = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        x0, xi = g.normal(size=(2, 4, 2))
        t0 = g.uniform(0, 3)
        steps = tuple(g.uniform(0.01, 0.6, g.integers(1, 5)))
        x = conditional_point(x0, xi, t0)
        _, traj = sample(lambda x, dt: math.exp(-dt) * (xi - x), x, SampleSchedule(steps, "exact"))
        for k, state in enumerate(traj):
            ref = conditional_point(x0, xi, t0 + sum(steps[:k]))
            worst = max(worst, float(np.max(np.abs(state - ref))))
    ok = err_factor <= 1e-12 and err_point <= 1e-12 and worst <= 1e-11
    record(4, ok, f"factor err {err_factor:.1e}, [2]->1.368 err {err_point:.1e} (<= 1e-12), "
                  f"exact-mode path err {worst:.2e} (<= 1e-11)")


def _fd_max_rel_error(model, x, dt, target, h=1e-4):
    m64 = model.copy(np.float64)
    _, _, grads = loss_and_grads(m64, x, dt, target)
    worst = 0.0
    for p, g in zip(m64.params, grads):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for k in range(flat.size):
            old = flat[k]
            flat[k] = old + h
            lp = loss_and_grads(m64, x, dt, target)[0]
            flat[k] = old - h
            lm = loss_and_grads(m64, x, dt, target)[0]
            flat[k] = old
            fd = (lp - lm) / (2 * h)
            # absolute floor for gradients that are zero up to rounding
            worst = max(worst, abs(gflat[k] - fd) / max(abs(fd), 1e-4))
    return worst


def test_c05_gradients():
    g = np.random.default_rng(5)
    worst = 0.0
    n_cfg = 20
    for i in range(n_cfg):
        d = int(g.integers(1, 4))
        hidden = tuple(int(h) for h in g.integers(2, 7, g.integers(1, 3)))
        arch = ModelArch(d, hidden, int(g.integers(1, 3)), ["silu", "tanh"][i % 2])
        model = VelocityModel.init(arch, 500 + i)
        for j in range(1, len(model.params), 2):
            model.params[j] = g.normal(0, 0.3, model.params[j].shape).astype(np.float32)
        n = int(g.integers(1, 6))
        worst = max(worst, _fd_max_rel_error(model, g.normal(size=(n, d)), g.uniform(0.05, 2.0, n),
                                             g.normal(size=(n, d))))
    record(5, worst <= 1e-4, f"{n_cfg} configurations, max relative error {worst:.2e} (<= 1e-4)")


def test_c06_degradation_moments():
    t0 = time.perf_counter()
    n = 100_000
    spec = DegradationSpec(Kind.CT)
    x, dt = 0.5, 0.2
    s = math.exp(-spec.lambda_ct * dt) * spec.i0
    var = x / s + spec.beta_ct * dt / s**2
    ct = degrade_ct(np.full(n, x), dt, spec, Rng(60))
    z = abs(ct.mean() - x) / math.sqrt(var / n)
    vrel = abs(ct.var() / var - 1)
    mr = DegradationSpec(Kind.MR)
    sigma = math.sqrt(mr.gamma_mr * 1.0)
    ray = degrade_mr(np.zeros(n), 1.0, mr, Rng(61)).mean()
    ray_rel = abs(ray / (sigma * math.sqrt(math.pi / 2)) - 1)
    m2 = np.mean(degrade_mr(np.full(n, 0.7), 1.0, mr, Rng(62)) ** 2)
    m2_rel = abs(m2 / (0.49 + 2 * sigma**2) - 1)
    el = time.perf_counter() - t0
    ok = z <= 5 and vrel <= 0.10 and ray_rel <= 0.02 and m2_rel <= 0.01 and el < 30
    record(6, ok, f"CT mean {z:.2f} SE (<= 5), CT var err {vrel:.2%} (<= 10%), Rayleigh mean err "
                  f"{ray_rel:.2%} (<= 2%), Rician m2 err {m2_rel:.2%} (<= 1%), {el:.1f}s (< 30s)")


def test_c07_curriculum_recurrence():
    data = None
    ok = True
    notes = []
    for alpha in (0.9, 1.1):
        cfg = TrainConfig(epochs=6, steps_per_epoch=2, batch_size=16, alpha_decay=alpha)
        data = data or toy_data(cfg, n=200)
        _, rep = train(cfg, data, ModelArch(2, (8,), 1))
        exact = all(math.isclose(lo, 0.05 * alpha**e, rel_tol=1e-14) and
                    math.isclose(hi, 0.2 / alpha**e, rel_tol=1e-14)
                    for e, (lo, hi) in enumerate(rep.dt_ranges, 1))
        widths = [0.15] + [hi - lo for lo, hi in rep.dt_ranges]
        steps = [b - a for a, b in zip(widths, widths[1:])]
        direction = all(s > 0 for s in steps) if alpha < 1 else all(s < 0 for s in steps)
        ok &= exact and direction and rep.final_dt_range == rep.dt_ranges[-1]
        notes.append(f"alpha {alpha}: {'expands' if alpha < 1 else 'contracts'} "
                     f"{'ok' if direction else 'NO'}, recurrence {'exact' if exact else 'OFF'}")
    record(7, ok, "; ".join(notes))


# criterion 8 ----------------------------------------------------------------

COUPLED_SCHEDULE = SampleSchedule((1.0, 1.0, 1.0, 0.5, 0.5, 0.2, 0.1, 0.05), "exact")
BLIND_SEEDS = (42, 43, 44)
FM_STEPS = 20


def _eval_sets(seed):
    return sample_gaussian(5000, rng=Rng(seed, 101)), sample_ring(5000, rng=Rng(seed, 102))


def test_c08_toy_trajectory():
    t0 = time.perf_counter()
    cfg = TrainConfig(seed=42)
    model, _ = train(cfg, toy_data(cfg))
    coupled_s = time.perf_counter() - t0
    x, ring = _eval_sets(42)
    ed_in = energy_distance(x, ring)
    ed_out = energy_distance(sample(model, x, COUPLED_SCHEDULE)[0], ring)
    ratio = ed_out / ed_in
    wins = []
    for seed in BLIND_SEEDS:
        x, ring = _eval_sets(seed)
        eds = {}
        for mode in ("relativeflow", "fm_linear"):
            c = TrainConfig(mode=mode, supervision="blind_degrade", epochs=30, steps_per_epoch=100, seed=seed)
            m, _ = train(c, toy_data(c))
            out = sample(m, x)[0] if mode == "relativeflow" else sample_linear_fm(m, x, FM_STEPS)[0]
            eds[mode] = energy_distance(out, ring)
        wins.append(eds["relativeflow"] <= eds["fm_linear"])
        print(f"  blind seed {seed}: relativeflow ED {eds['relativeflow']:.4f}, "
              f"fm_linear ED {eds['fm_linear']:.4f}")
    ok = ratio <= 0.2 and coupled_s <= 300 and sum(wins) >= 2
    record(8, ok, f"coupled ED ratio {ratio:.3f} (<= 0.2, trained in {coupled_s:.0f}s <= 300s); "
                  f"blind relativeflow <= fm_linear on {sum(wins)}/3 seeds (majority needed)")


# criterion 9 ----------------------------------------------------------------


def test_c09_metrics():
    a = np.full((32, 32), 0.3)
    p = psnr(a, a + 0.1)
    g = np.random.default_rng(9)
    x = g.random((32, 32))
    s = ssim(x, x)
    worst = 0.0
    for _ in range(200):
        u, v = g.random((2, 24, 24))
        worst = max(worst, abs(psnr(u, v) + 20 * math.log10(rmse(u, v))))
    ok = abs(p - 20.0) <= 1e-9 and abs(s - 1.0) <= 1e-12 and worst <= 1e-9
    record(9, ok, f"PSNR offset 0.1 = {p:.12f} dB, SSIM(x, x) = {s:.12f}, "
                  f"PSNR/RMSE identity err {worst:.1e} (<= 1e-9)")


# criterion 10 ---------------------------------------------------------------

IMAGE_CONFIG = {
    "model": {"hidden_dims": [256, 256], "fourier_bands": 4},
    "data": {"patch": 8, "stride": 2, "size": 64},
    "train": {"epochs": 20, "steps_per_epoch": 40, "batch_size": 64, "lr": 1e-3,
              "alpha_decay": 1.0, "dt_min0": 0.1, "dt_max0": 0.3,
              "degradation": {"kind": "ct", "i0": 1000.0}},
}


def test_c10_pipeline_smoke(tmp_path, capsys):
    t0 = time.perf_counter()
    cfg = tmp_path / "image.json"
    cfg.write_text(json.dumps(IMAGE_CONFIG))
    f = lambda name: str(tmp_path / name)
    codes = [
        cli.main(["phantom", "--size", "64", "--out", f("clean.rfimg")]),
        cli.main(["degrade", "--kind", "ct", "--dt", "0.2", "--seed", "10", "--spec", '{"i0": 1000.0}',
                  "--in", f("clean.rfimg"), "--out", f("noisy.rfimg")]),
        cli.main(["train-image", "--config", str(cfg), "--out", f("model.ckpt"), "--report", f("r.json")]),
        cli.main(["sample", "--ckpt", f("model.ckpt"), "--in", f("noisy.rfimg"), "--out", f("den.rfimg")]),
    ]
    capsys.readouterr()
    codes.append(cli.main(["metrics", "--a", f("den.rfimg"), "--b", f("clean.rfimg")]))
    den = json.loads(capsys.readouterr().out)
    codes.append(cli.main(["metrics", "--a", f("noisy.rfimg"), "--b", f("clean.rfimg")]))
    noisy = json.loads(capsys.readouterr().out)
    el = time.perf_counter() - t0
    ok = all(c == 0 for c in codes) and den["psnr"] > noisy["psnr"] and el < 600
    record(10, ok, f"exit codes {codes}, PSNR denoised {den['psnr']:.2f} dB > degraded "
                   f"{noisy['psnr']:.2f} dB, {el:.0f}s (< 600s)")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
