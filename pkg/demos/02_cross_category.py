"""
Training on one category, testing on the others
================================================

Trains the small conv net on 'disks' only and reports accuracy on every
category, first on raw pixels and then on BiHPF features. Takes about a
minute on one core.
"""

from dataclasses import replace

from bihpf.evalkit import HarnessConfig, format_csv, run_cross_domain
from bihpf.filters import scaled_config
from bihpf.synthlab import ExperimentConfig, build_experiment

size = 64
train, test = build_experiment(ExperimentConfig(size=size, n_train=200, n_test=200, seed=0))
print(len(train), "training images,", len(test), "test images")

base = HarnessConfig(bihpf=scaled_config(size), seed=0)

for label, cfg in [("raw pixels", replace(base, features="pixels")), ("bihpf", base)]:
    res = run_cross_domain(cfg, train, test)
    print(f"\n--- {label}: cross-category accuracy {res.cross_accuracy():.3f}")
    print(format_csv(res))
