"""
Learning which frequencies the detector leans on
================================================

Runs the two-step adversarial training of the add-on compression module on
zero-insert fakes, then compares the learned map with the replica bins and
writes the averaged maps as PGM files to ./out_acm.
"""

from pathlib import Path

import numpy as np

from bihpf import io as bio
from bihpf.acm import (
    AcmConfig,
    CompressionMapParams,
    average_maps,
    compute_wc,
    fake_as_real_rate,
    to_network_input,
    train_acm,
)
from bihpf.synthlab import ExperimentConfig, build_experiment, replica_mask

size = 64
out = Path("out_acm")
out.mkdir(exist_ok=True)

cfg = ExperimentConfig(size=size, n_train=200, n_test=100,
                       train_generators=("zero_insert",), test_generators=("zero_insert",))
train, test = build_experiment(cfg)
x = to_network_input(train.images)

model, params, hist = train_acm(x, train.labels, AcmConfig.desk(seed=0))
print("final epoch losses (L_c, L_adv):", hist.loss_c[-1], hist.loss_adv[-1])

fakes = to_network_input(test.images)[test.labels == 1]
init = CompressionMapParams.init(size, size, params.w_o, params.t_f)
print(f"held-out fakes called real: {fake_as_real_rate(model, fakes, init):.3f} with the initial map,"
      f" {fake_as_real_rate(model, fakes, params):.3f} with the learned one")

wc = compute_wc(params)
mask = np.fft.ifftshift(replica_mask(size))
print(f"mean W_c on replica bins {wc[mask].mean():.3f}, elsewhere {wc[~mask].mean():.3f}")

wc_disp, art = average_maps(x, params)
bio.write_pnm(out / "wc_map.pgm", wc_disp)
bio.write_pnm(out / "artifact_map.pgm", art / art.max())
