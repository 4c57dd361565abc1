"""Artifact compression map (ACM) and its adversarial training.

The add-on module scales every DFT bin of the input by a learned factor
W_c in (0, 1) and transforms back. Each mini-batch takes two Adam steps:

1. the classifier learns to label both originals and compressed images;
2. only the two-channel map W_a behind W_c is updated, pushing compressed
   fakes towards the "real" label.

W_c is stored in DFT-native (non-centered) layout; use ``fftshift`` for display.
"""

from dataclasses import dataclass, field

import numpy as np

from .evalkit import accuracy
from .netlite import Adam, ConvNet, bce_with_logits, sigmoid
from .numerics import fftshift, to_grayscale


@dataclass
class CompressionMapParams:
    w_a1: np.ndarray
    w_a2: np.ndarray
    t_f: float = 1.0
    w_o: float = 5.0

    def __post_init__(self):
        if not self.t_f > 0:
            raise ValueError("temperature t_f must be positive")
        if self.w_a1.shape != self.w_a2.shape:
            raise ValueError("W_a channels must have the same shape")

    @classmethod
    def init(cls, h, w, w_o=5.0, t_f=1.0):
        """Channels start at +w_o and -w_o so that W_c starts close to 1."""
        return cls(np.full((h, w), float(w_o)), np.full((h, w), -float(w_o)), t_f, w_o)

    @property
    def shape(self):
        return self.w_a1.shape

    def as_dict(self):
        return {"w_a1": self.w_a1, "w_a2": self.w_a2}


def compute_wc(params):
    """Two-channel temperature softmax; channel 1 is the 'keep' probability."""
    # softmax over two channels == sigmoid of the scaled difference
    return sigmoid(params.t_f * (params.w_a1 - params.w_a2))


def _wc_of(params_or_wc):
    if isinstance(params_or_wc, CompressionMapParams):
        return compute_wc(params_or_wc)
    return np.asarray(params_or_wc, dtype=np.float64)


def compress(x, wc, return_residual=False):
    """Apply the add-on module over the last two axes of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-2:] != wc.shape:
        raise ValueError(f"image size {x.shape[-2:]} does not match map size {wc.shape}")
    out = np.fft.ifft2(np.fft.fft2(x, axes=(-2, -1)) * wc, axes=(-2, -1))
    if return_residual:
        return out.real, float(np.linalg.norm(out.imag))
    return out.real


def addon_forward(x, params_or_wc):
    """Compressed image X_hat = Re F^-1{W_c * F{X}}.

    Accepts a grayscale (h, w) or RGB (h, w, 3) image; for RGB the same map is
    applied to every channel.
    """
    wc = _wc_of(params_or_wc)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        return np.moveaxis(compress(np.moveaxis(x, -1, 0), wc), 0, -1)
    return compress(x, wc)


def artifact_image(x, params_or_wc):
    """X - X_hat: what the compression map removes."""
    return np.asarray(x, dtype=np.float64) - addon_forward(x, params_or_wc)


def wc_grad(x, grad_xhat):
    """dL/dW_c from dL/dX_hat for a batch ``(..., h, w)``.

    For real upstream gradients G the pairing is Re(F{X} * F^-1{G}), summed
    over all leading axes.
    """
    z = np.fft.fft2(x, axes=(-2, -1))
    g = np.fft.ifft2(grad_xhat, axes=(-2, -1))
    prod = (z * g).real
    return prod.reshape(-1, *prod.shape[-2:]).sum(axis=0)


def wa_grads(params, dwc):
    """Chain dL/dW_c through the softmax into both W_a channels."""
    wc = compute_wc(params)
    d = dwc * params.t_f * wc * (1 - wc)
    return {"w_a1": d, "w_a2": -d}


def loss_c(model, x, y, params):
    """Classification loss on originals plus compressed copies (summed CE).

    Returns ``(loss, grads)`` with gradients for the classifier parameters
    only; ``x`` is an NCHW batch.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if len(x) == 0:
        raise ValueError("empty batch")
    xhat = compress(x, compute_wc(params))
    both = np.concatenate([x, xhat])
    z = model.logits(both)
    loss, dz = bce_with_logits(z, np.concatenate([y, y]))
    grads, _ = model.backward_logits(dz)
    return float(loss.sum()), grads


def loss_adv(model, x_fake, params):
    """Inverted-label loss on compressed fakes; gradients for W_a only."""
    x_fake = np.asarray(x_fake, dtype=np.float64)
    if len(x_fake) == 0:
        raise ValueError("loss_adv needs at least one fake image")
    wc = compute_wc(params)
    xhat = compress(x_fake, wc)
    z = model.logits(xhat)
    loss, dz = bce_with_logits(z, np.zeros(len(z)))
    _, dx = model.backward_logits(dz)
    return float(loss.sum()), wa_grads(params, wc_grad(x_fake, dx))


@dataclass(frozen=True)
class AcmConfig:
    epochs: int = 20
    batch_size: int = 16
    lr: float = 1e-4
    lr_map: float = 1e-4
    w_o: float = 5.0
    t_f: float = 1.0
    grayscale: bool = True
    seed: int = 0

    @classmethod
    def desk(cls, **kw):
        """Settings that train within 20 epochs on the 64x64 lab.

        At 200+200 images the shared 1e-4 step barely moves either network,
        so the classifier uses 1e-3 and the map, whose gradients are tiny
        per bin, uses 0.02.
        """
        kw.setdefault("lr", 1e-3)
        kw.setdefault("lr_map", 0.02)
        return cls(**kw)


@dataclass
class AcmHistory:
    loss_c: list = field(default_factory=list)
    loss_adv: list = field(default_factory=list)
    mean_wc: list = field(default_factory=list)
    imag_residual: list = field(default_factory=list)


# pixels are centered before the classifier, like the raw-pixel baseline
PIXEL_OFFSET = 0.5


def to_network_input(images, grayscale=True):
    """RGB batch (N, h, w, 3) or gray batch (N, h, w) -> centered NCHW batch."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 3:
        x = images[:, None]
    elif grayscale:
        x = np.stack([to_grayscale(im) for im in images])[:, None]
    else:
        x = np.moveaxis(images, -1, 1)
    return x - PIXEL_OFFSET


def train_acm(x, y, cfg=None, model=None, params=None):
    """Two-step adversarial training. ``x`` is an NCHW pixel batch.

    Returns ``(model, params, history)``. Deterministic for a fixed seed.
    """
    cfg = cfg or AcmConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if not (np.any(y == 0) and np.any(y == 1)):
        raise ValueError("training data must contain both classes")
    _, c, h, w = x.shape
    model = model or ConvNet(c, h, w, seed=cfg.seed)
    params = params or CompressionMapParams.init(h, w, cfg.w_o, cfg.t_f)
    opt_c = Adam(lr=cfg.lr)
    opt_map = Adam(lr=cfg.lr_map)
    rng = np.random.default_rng(cfg.seed)
    hist = AcmHistory()
    for _ in range(cfg.epochs):
        order = rng.permutation(len(x))
        tot_c = tot_adv = 0.0
        for start in range(0, len(x), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            lc, grads = loss_c(model, x[idx], y[idx], params)
            opt_c.step(model.params, grads)
            tot_c += lc
            fakes = idx[y[idx] == 1]
            if len(fakes):
                la, gmap = loss_adv(model, x[fakes], params)
                opt_map.step(params.as_dict(), gmap)
                tot_adv += la
            if not (np.isfinite(tot_c) and np.isfinite(tot_adv)):
                raise FloatingPointError("ACM training diverged")
        hist.loss_c.append(tot_c / len(x))
        hist.loss_adv.append(tot_adv / max(1, int(np.sum(y == 1))))
        wc = compute_wc(params)
        hist.mean_wc.append(float(wc.mean()))
        hist.imag_residual.append(compress(x[:1], wc, return_residual=True)[1])
    return model, params, hist


def fake_as_real_rate(model, x_fake, params_or_wc=None):
    """Fraction of fakes labeled real, optionally after compression."""
    if params_or_wc is not None:
        x_fake = compress(x_fake, _wc_of(params_or_wc))
    return float(np.mean(model.predict(x_fake) <= 0.5))


def average_maps(x, params):
    """(centered W_c for display, mean |X - X_hat| over images and channels)."""
    wc = compute_wc(params)
    art = np.abs(x - compress(x, wc))
    return fftshift(wc), art.reshape(-1, *art.shape[-2:]).mean(axis=0)


def compare_original_vs_compressed(model, params, datasets):
    """Accuracy per domain when predicting from X versus from X_hat.

    ``datasets`` maps a domain name to ``(x, y)`` NCHW batches. Returns
    ``{domain: (acc_original, acc_compressed)}``.
    """
    wc = _wc_of(params)
    table = {}
    for name, (xd, yd) in datasets.items():
        table[name] = (
            accuracy(model.predict(xd), yd),
            accuracy(model.predict(compress(xd, wc)), yd),
        )
    return table
