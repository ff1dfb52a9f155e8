# Low-dose CT on a synthetic head phantom, end to end through the CLI.
#
# The dose is turned down (i0 = 1000 photons) so the noise is visible at
# this image size; the model sees 8x8 patches and never the clean image
# paired with its own noisy version.

import json
import subprocess
import sys

cfg = {
    "model": {"hidden_dims": [256, 256], "fourier_bands": 4},
    "data": {"patch": 8, "stride": 2, "size": 64},
    "train": {"epochs": 10, "steps_per_epoch": 40, "batch_size": 64, "alpha_decay": 1.0,
              "dt_min0": 0.1, "dt_max0": 0.3, "degradation": {"kind": "ct", "i0": 1000.0}},
}
with open("phantom_cfg.json", "w") as f:
    json.dump(cfg, f)


def relflow(*args):
    res = subprocess.run([sys.executable, "-m", "relflow", *args], capture_output=True, text=True)
    if res.returncode:
        sys.exit(res.stderr)
    return json.loads(res.stdout) if res.stdout.strip() else None


relflow("phantom", "--out", "clean.pgm")
relflow("degrade", "--kind", "ct", "--dt", "0.2", "--seed", "3", "--spec", '{"i0": 1000}',
        "--in", "clean.pgm", "--out", "noisy.rfimg")
relflow("train-image", "--config", "phantom_cfg.json", "--out", "ct.ckpt", "--report", "ct_report.json")
relflow("sample", "--ckpt", "ct.ckpt", "--in", "noisy.rfimg", "--out", "denoised.rfimg")

print("noisy   ", relflow("metrics", "--a", "noisy.rfimg", "--b", "clean.pgm"))
print("denoised", relflow("metrics", "--a", "denoised.rfimg", "--b", "clean.pgm"))
