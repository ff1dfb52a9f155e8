# Gaussian blob -> thin ring, trained two ways.
#
# 1. coupled: exact pairs on each sample's path (source and ring endpoint known)
# 2. blind: only noisy references of mixed quality are available, and the
#    training pairs come from degrading them further
#
# Budgets here are small so the script finishes in about a minute; the
# acceptance suite uses the full defaults.

import time

from relflow.datagen import sample_gaussian, sample_ring
from relflow.metrics import energy_distance
from relflow.rng import Rng
from relflow.sampler import SampleSchedule, sample, sample_linear_fm
from relflow.storage import write_points, write_trajectory_csv
from relflow.trainer import TrainConfig, toy_data, train

x = sample_gaussian(2000, rng=Rng(42, 101))
ring = sample_ring(2000, rng=Rng(42, 102))
print("input  ED to ring: %.4f" % energy_distance(x, ring))

t0 = time.time()
cfg = TrainConfig(epochs=15, steps_per_epoch=60)
model, rep = train(cfg, toy_data(cfg))
print("coupled: loss %.4f -> %.4f in %.0fs" % (rep.epoch_losses[0], rep.epoch_losses[-1], time.time() - t0))
print("dt range now [%.4f, %.4f]" % rep.final_dt_range)

# big steps first in exact mode: the model only ever sees dt, not t
sched = SampleSchedule((1.0, 1.0, 1.0, 0.5, 0.5, 0.2, 0.1, 0.05), "exact")
out, traj = sample(model, x, sched)
print("coupled output ED: %.4f" % energy_distance(out, ring))
write_points("ring_out.csv", out)
write_trajectory_csv("ring_traj.csv", traj)

# blind references, compared against straight-line flow matching
for mode in ("relativeflow", "fm_linear"):
    c = TrainConfig(mode=mode, supervision="blind_degrade", epochs=15, steps_per_epoch=60)
    m, _ = train(c, toy_data(c))
    y = sample(m, x)[0] if mode == "relativeflow" else sample_linear_fm(m, x, 20)[0]
    print("blind %-12s ED: %.4f" % (mode, energy_distance(y, ring)))
