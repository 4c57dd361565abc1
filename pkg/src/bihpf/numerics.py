"""Raster and Fourier helpers shared by the rest of the package.

Images are plain float64 ndarrays: ``(h, w)`` for grayscale and ``(h, w, 3)``
for RGB, values in [0, 1]. Frequency-domain maps carry an explicit
``centered`` flag so shifted and unshifted layouts are never confused.
"""

from dataclasses import dataclass, replace

import numpy as np

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class Spectrum:
    """Complex 2D DFT coefficients. ``centered`` means DC sits at (h//2, w//2)."""

    data: np.ndarray
    centered: bool = False

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class MagnitudeMap:
    """Nonnegative real frequency map."""

    data: np.ndarray
    centered: bool = False

    @property
    def shape(self):
        return self.data.shape


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")


def as_gray(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2D grayscale image, got shape {img.shape}")
    return img


def fft2d(img):
    """Unnormalized forward 2D DFT of a grayscale image."""
    img = as_gray(img)
    if img.size == 0:
        raise ValueError("image must be at least 1x1")
    _check_finite(img, "image")
    return Spectrum(np.fft.fft2(img), centered=False)


def ifft2d(spec, return_residual=False):
    """Inverse 2D DFT with 1/(hw) normalization; returns the real part.

    With ``return_residual=True`` also returns the Frobenius norm of the
    discarded imaginary part.
    """
    if spec.centered:
        raise ValueError("ifft2d needs a non-centered spectrum; apply ifftshift first")
    out = np.fft.ifft2(spec.data)
    if return_residual:
        return out.real, float(np.linalg.norm(out.imag))
    return out.real


def fftshift(m):
    """Move the DC bin to (h//2, w//2). Works on maps or raw arrays."""
    if isinstance(m, (Spectrum, MagnitudeMap)):
        return replace(m, data=np.fft.fftshift(m.data, axes=(0, 1)), centered=not m.centered)
    return np.fft.fftshift(np.asarray(m), axes=(0, 1))


def ifftshift(m):
    """Undo :func:`fftshift` for any size, odd included."""
    if isinstance(m, (Spectrum, MagnitudeMap)):
        return replace(m, data=np.fft.ifftshift(m.data, axes=(0, 1)), centered=not m.centered)
    return np.fft.ifftshift(np.asarray(m), axes=(0, 1))


def magnitude(spec):
    return MagnitudeMap(np.abs(spec.data), centered=spec.centered)


def to_grayscale(img):
    """BT.601 luma. Grayscale input is returned as-is."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB image, got shape {img.shape}")
    return img @ LUMA_WEIGHTS


def _bilinear_axis(n_in, n_out):
    # half-pixel centers: src = (dst + 0.5) * n_in / n_out - 0.5, clamped to the edge
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = pos - lo
    return lo, hi, frac


def resize_bilinear(img, out_h, out_w):
    """Bilinear resize with half-pixel-centered sampling (gray or RGB)."""
    img = np.asarray(img, dtype=np.float64)
    if out_h < 1 or out_w < 1:
        raise ValueError("output size must be at least 1x1")
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.copy()
    r0, r1, fr = _bilinear_axis(h, out_h)
    c0, c1, fc = _bilinear_axis(w, out_w)
    if img.ndim == 3:
        fr = fr[:, None, None]
        fc = fc[None, :, None]
    else:
        fr = fr[:, None]
        fc = fc[None, :]
    top = img[r0][:, c0] * (1 - fc) + img[r0][:, c1] * fc
    bottom = img[r1][:, c0] * (1 - fc) + img[r1][:, c1] * fc
    return top * (1 - fr) + bottom * fr


def centered_coords(h, w):
    """Integer frequency/pixel offsets from the centered origin (h//2, w//2).

    Returns ``(rows, cols)`` broadcastable to ``(h, w)``.
    """
    rows = (np.arange(h) - h // 2)[:, None]
    cols = (np.arange(w) - w // 2)[None, :]
    return rows, cols
