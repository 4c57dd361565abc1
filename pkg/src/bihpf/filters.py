"""Bilateral high-pass filtering of centered magnitude spectra.

Two filters are applied in order to the shifted magnitude spectrum:

* the pixel-level HPF, a Laplacian-of-Gaussian filter on the spectrum that is
  carried out as an elementwise window in the inverse (pixel) domain, and
* the frequency-level HPF, an ideal radial mask around the spectrum center.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    MagnitudeMap,
    centered_coords,
    fft2d,
    fftshift,
    ifftshift,
    magnitude,
    to_grayscale,
)


@dataclass(frozen=True)
class LogFilterSpec:
    sigma: float = 0.01

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")


@dataclass(frozen=True)
class FreqHpfSpec:
    """Ideal radial filter. ``mode='low'`` keeps the disk instead (ablation only)."""

    cutoff: float = 40.0
    mode: str = "high"

    def __post_init__(self):
        if self.mode not in ("high", "low"):
            raise ValueError(f"mode must be 'high' or 'low', got {self.mode!r}")
        if not (np.isfinite(self.cutoff) and self.cutoff >= 0):
            raise ValueError(f"cutoff must be >= 0, got {self.cutoff}")


@dataclass(frozen=True)
class BihpfConfig:
    log: LogFilterSpec = field(default_factory=LogFilterSpec)
    hpf: FreqHpfSpec = field(default_factory=FreqHpfSpec)
    enable_pixel_hpf: bool = True
    enable_freq_hpf: bool = True
    grayscale: bool = True


REFERENCE_SIZE = 256


def scaled_config(size, sigma=0.01, cutoff=40.0, **kw):
    """BihpfConfig with sigma and cutoff given at 256x256, rescaled to ``size``.

    The cutoff is a bin radius, so it scales with the grid. The LoG window
    peaks at pixel radius sqrt(2)/sigma, so sigma scales inversely; both keep
    the same fraction of the spectrum.
    """
    ratio = size / REFERENCE_SIZE
    return BihpfConfig(
        log=LogFilterSpec(sigma / ratio), hpf=FreqHpfSpec(cutoff * ratio), **kw
    )


def log_freq_response(sigma, omega):
    """LoG transfer function -sigma * w^2 * exp(-(sigma*w)^2 / 2).

    ``omega`` may be an array of radial frequencies; in 2D pass
    ``sqrt(w1**2 + w2**2)``.
    """
    omega = np.asarray(omega, dtype=np.float64)
    return -sigma * omega**2 * np.exp(-((sigma * omega) ** 2) / 2)


def log_pixel_window(sigma, h, w):
    """Pixel-domain LoG window in centered layout (r = 0 at (h//2, w//2))."""
    rows, cols = centered_coords(h, w)
    r2 = (rows**2 + cols**2).astype(np.float64)
    return -(sigma * r2 / (2 * np.pi)) * np.exp(-(sigma**2) * r2 / 2)


def log_freq_kernel(sigma, h, w):
    """Discrete LoG kernel K with pixel_hpf(m) == |m (*) K| (circular convolution).

    The kernel lives in DFT-native layout (origin at index 0), and includes the
    1/(hw) factor of the discrete convolution theorem.
    """
    window = ifftshift(log_pixel_window(sigma, h, w))
    return np.fft.fft2(window) / (h * w)


def _require_centered(mag, what):
    if not mag.centered:
        raise ValueError(f"{what} expects a centered magnitude map (apply fftshift first)")


def pixel_hpf(mag, spec):
    """Pixel-level HPF: F{ F^-1{mag} * window }, modulus taken at the end.

    The window is applied with its origin at pixel (0, 0), which makes the
    operation exactly a circular convolution of ``mag`` with
    :func:`log_freq_kernel`.
    """
    _require_centered(mag, "pixel_hpf")
    h, w = mag.data.shape
    window = ifftshift(log_pixel_window(spec.sigma, h, w))
    out = np.fft.fft2(np.fft.ifft2(mag.data) * window)
    return MagnitudeMap(np.abs(out), centered=True)


def max_radius(h, w):
    rows, cols = centered_coords(h, w)
    return float(np.sqrt((rows**2 + cols**2).max()))


def stopband_mask(h, w, spec):
    """Boolean mask of bins the filter zeroes (centered layout)."""
    rows, cols = centered_coords(h, w)
    inside = rows**2 + cols**2 <= spec.cutoff**2
    return inside if spec.mode == "high" else ~inside


def freq_hpf(mag, spec):
    """Ideal frequency-level filter; bins with w1^2 + w2^2 <= cutoff^2 are zeroed."""
    _require_centered(mag, "freq_hpf")
    h, w = mag.data.shape
    out = np.where(stopband_mask(h, w, spec), 0.0, mag.data)
    return MagnitudeMap(out, centered=True)


def normalize_features(values, keep=None):
    """log1p compression followed by standardization.

    Statistics come from the ``keep`` bins only and everything outside ``keep``
    is set to exactly zero, so filtered-out bins stay empty. A constant
    pass-band standardizes to zeros.
    """
    v = np.log1p(values)
    if keep is None:
        keep = np.ones(v.shape, dtype=bool)
    out = np.zeros_like(v)
    if not keep.any():
        return out
    sel = v[keep]
    std = sel.std()
    if std > 0:
        out[keep] = (sel - sel.mean()) / std
    return out


def filtered_spectrum(gray, cfg):
    """Centered magnitude spectrum after the enabled filters (not normalized)."""
    mag = fftshift(magnitude(fft2d(gray)))
    if cfg.enable_pixel_hpf:
        mag = pixel_hpf(mag, cfg.log)
    if cfg.enable_freq_hpf:
        mag = freq_hpf(mag, cfg.hpf)
    return mag


def bihpf_pipeline(img, cfg=None):
    """Image to classifier features, shape (channels, h, w).

    Grayscale conversion comes first unless ``cfg.grayscale`` is off, in which
    case each RGB channel is filtered on its own.
    """
    cfg = cfg or BihpfConfig()
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3 and cfg.grayscale:
        channels = [to_grayscale(img)]
    elif img.ndim == 3:
        channels = [img[..., c] for c in range(img.shape[2])]
    else:
        channels = [img]
    h, w = channels[0].shape
    keep = None
    if cfg.enable_freq_hpf:
        keep = ~stopband_mask(h, w, cfg.hpf)
    return np.stack(
        [normalize_features(filtered_spectrum(ch, cfg).data, keep) for ch in channels]
    )
