"""
Where the upsampling traces live, and what the two filters keep
===============================================================

Renders one real/fake pair from the synthetic lab, looks at the averaged
power spectra, then pushes a fake through the pixel-level and frequency-level
high-pass filters. Writes a few PGM pictures to ./out_filters.
"""

from pathlib import Path

import numpy as np

from bihpf import io as bio
from bihpf.filters import bihpf_pipeline, scaled_config
from bihpf.numerics import to_grayscale
from bihpf.synthlab import CATEGORIES, render_pair, replica_mask

size = 64
out = Path("out_filters")
out.mkdir(exist_ok=True)

# a real image and its zero-insert fake share the same content
real, fake = render_pair("disks", "zero_insert", size, seed=0, index=0)
bio.write_pnm(out / "real.ppm", real)
bio.write_pnm(out / "fake.ppm", fake)

# average spectra over a handful of images per category
reals, fakes = [], []
for cat in CATEGORIES:
    for i in range(10):
        r, f = render_pair(cat, "zero_insert", size, 0, i)
        reals.append(np.abs(np.fft.fft2(to_grayscale(r))) ** 2)
        fakes.append(np.abs(np.fft.fft2(to_grayscale(f))) ** 2)
real_p, fake_p = np.mean(reals, 0), np.mean(fakes, 0)

mask = np.fft.ifftshift(replica_mask(size))
excess = np.maximum(fake_p - real_p, 0)
print(f"share of the fake-minus-real excess inside the replica bins: {excess[mask].sum() / excess.sum():.3f}")

# log-power difference, centred, as a picture
diff = np.fft.fftshift(np.log1p(fake_p) - np.log1p(real_p))
bio.write_pnm(out / "spectrum_diff.pgm", (diff - diff.min()) / np.ptp(diff))

# BiHPF features: the low band is zeroed, the rest is standardised log magnitude
cfg = scaled_config(size)
print(f"desk filters at {size}px: sigma={cfg.log.sigma:g}, cutoff={cfg.hpf.cutoff:g}")
feat = bihpf_pipeline(fake, cfg)[0]
print("feature map", feat.shape, "zeros in the stop band:", int(np.sum(feat == 0)))
bio.write_pnm(out / "features.pgm", np.clip((feat + 3) / 6, 0, 1))
