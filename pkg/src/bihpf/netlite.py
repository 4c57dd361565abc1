"""A small real/fake classifier written directly in numpy.

Architecture: conv3x3/s2 (8) -> ReLU -> conv3x3/s2 (16) -> ReLU ->
global average pool -> linear -> sigmoid. Inputs are NCHW float64 batches.
Every layer has a hand-written backward pass, and the gradient with respect to
the input is returned as well so callers can chain through preprocessing.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

CE_EPS = 1e-12
PARAM_ORDER = ("conv1.w", "conv1.b", "conv2.w", "conv2.b", "fc.w", "fc.b")


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def cross_entropy(p, y):
    """Binary cross-entropy with p clamped to [eps, 1 - eps]."""
    p = np.clip(np.asarray(p, dtype=np.float64), CE_EPS, 1 - CE_EPS)
    y = np.asarray(y, dtype=np.float64)
    return -(y * np.log(p) + (1 - y) * np.log(1 - p))


def bce_with_logits(z, y):
    """Per-item cross-entropy from logits and its derivative w.r.t. the logits."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    loss = np.logaddexp(0.0, z) - y * z
    return loss, sigmoid(z) - y


def conv_out_size(n, stride=2, k=3, pad=1):
    return (n + 2 * pad - k) // stride + 1


def _im2col(x, stride):
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))[:, :, ::stride, ::stride]
    n, c, ho, wo = win.shape[:4]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * 9)
    return cols, (n, c, ho, wo), xp.shape


def conv_forward(x, w, b, stride=2):
    cols, (n, _, ho, wo), xp_shape = _im2col(x, stride)
    out = cols @ w.reshape(w.shape[0], -1).T + b
    out = out.reshape(n, ho, wo, -1).transpose(0, 3, 1, 2)
    return out, (cols, xp_shape)


def conv_backward(dout, w, cache, stride=2):
    cols, xp_shape = cache
    f = w.shape[0]
    n, _, ho, wo = dout.shape
    dflat = dout.transpose(0, 2, 3, 1).reshape(-1, f)
    dw = (dflat.T @ cols).reshape(w.shape)
    db = dflat.sum(axis=0)
    dcols = (dflat @ w.reshape(f, -1)).reshape(n, ho, wo, w.shape[1], 3, 3)
    dxp = np.zeros(xp_shape)
    for i in range(3):
        for j in range(3):
            dxp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += dcols[
                ..., i, j
            ].transpose(0, 3, 1, 2)
    return dxp[:, :, 1:-1, 1:-1], dw, db


class ConvNet:
    """Two strided convolutions, global average pooling and a sigmoid head."""

    def __init__(self, in_channels, height, width, seed=0, widths=(8, 16)):
        self.input_shape = (in_channels, height, width)
        self.widths = tuple(widths)
        rng = np.random.default_rng(seed)
        c1, c2 = self.widths

        def kaiming_uniform(shape, fan_in):
            bound = np.sqrt(6.0 / fan_in)
            return rng.uniform(-bound, bound, size=shape)

        self.params = {
            "conv1.w": kaiming_uniform((c1, in_channels, 3, 3), in_channels * 9),
            "conv1.b": np.zeros(c1),
            "conv2.w": kaiming_uniform((c2, c1, 3, 3), c1 * 9),
            "conv2.b": np.zeros(c2),
            "fc.w": kaiming_uniform((c2,), c2) * 0.5,
            "fc.b": np.zeros(1),
        }
        self._cache = None

    @property
    def descriptor(self):
        c, h, w = self.input_shape
        return f"convnet in={c}x{h}x{w} widths={self.widths[0]},{self.widths[1]}"

    def n_params(self):
        return sum(p.size for p in self.params.values())

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 3 and self.input_shape[0] == 1:
            x = x[:, None]
        if x.ndim != 4 or x.shape[1:] != self.input_shape:
            raise ValueError(f"expected input (N, {self.input_shape}), got {x.shape}")
        return x

    def logits(self, x, keep_cache=True):
        x = self._check_input(x)
        p = self.params
        z1, c1 = conv_forward(x, p["conv1.w"], p["conv1.b"])
        a1 = np.maximum(z1, 0)
        z2, c2 = conv_forward(a1, p["conv2.w"], p["conv2.b"])
        a2 = np.maximum(z2, 0)
        pooled = a2.mean(axis=(2, 3))
        out = pooled @ p["fc.w"] + p["fc.b"][0]
        if keep_cache:
            self._cache = (c1, z1, c2, z2, pooled)
        return out

    def forward(self, x, keep_cache=True):
        """Probability of the 'fake' class for each item of the batch."""
        return sigmoid(self.logits(x, keep_cache))

    def backward_logits(self, grad_logits):
        """Gradients w.r.t. parameters and input, given dL/dlogit per item."""
        if self._cache is None:
            raise RuntimeError("backward called without a preceding forward")
        c1, z1, c2, z2, pooled = self._cache
        p = self.params
        g = np.asarray(grad_logits, dtype=np.float64)
        grads = {"fc.w": pooled.T @ g, "fc.b": np.array([g.sum()])}
        hw = z2.shape[2] * z2.shape[3]
        da2 = np.broadcast_to((g[:, None] * p["fc.w"][None, :] / hw)[:, :, None, None], z2.shape)
        dz2 = da2 * (z2 > 0)
        da1, grads["conv2.w"], grads["conv2.b"] = conv_backward(dz2, p["conv2.w"], c2)
        dz1 = da1 * (z1 > 0)
        dx, grads["conv1.w"], grads["conv1.b"] = conv_backward(dz1, p["conv1.w"], c1)
        return grads, dx

    def backward(self, grad_out):
        """Same as :meth:`backward_logits` but takes dL/dprob."""
        if self._cache is None:
            raise RuntimeError("backward called without a preceding forward")
        pooled = self._cache[4]
        prob = sigmoid(pooled @ self.params["fc.w"] + self.params["fc.b"][0])
        return self.backward_logits(np.asarray(grad_out) * prob * (1 - prob))

    def predict(self, x, batch_size=256):
        x = self._check_input(x)
        return np.concatenate(
            [self.forward(x[i : i + batch_size], keep_cache=False) for i in range(0, len(x), batch_size)]
        )

    def copy(self):
        other = object.__new__(ConvNet)
        other.input_shape = self.input_shape
        other.widths = self.widths
        other.params = {k: v.copy() for k, v in self.params.items()}
        other._cache = None
        return other


class Adam:
    """Bias-corrected Adam. Updates parameter arrays in place."""

    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads):
        for k, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for {k!r}")
            if g.shape != params[k].shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {params[k].shape} for {k!r}")
        self.t += 1
        bc1 = 1 - self.beta1**self.t
        bc2 = 1 - self.beta2**self.t
        for k, g in grads.items():
            m = self.m.get(k)
            if m is None:
                m = self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            v = self.v[k]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            params[k] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def batch_loss_and_grads(model, x, y):
    """Mean BCE over the batch, with parameter gradients."""
    z = model.logits(x)
    loss, dz = bce_with_logits(z, y)
    grads, _ = model.backward_logits(dz / len(z))
    return float(loss.mean()), grads


def train_classifier(model, x, y, epochs=20, batch_size=16, lr=1e-4, seed=0, optimizer=None):
    """Mini-batch Adam training on shuffled data. Returns per-epoch mean loss."""
    y = np.asarray(y)
    if not (np.any(y == 0) and np.any(y == 1)):
        raise ValueError("training data must contain both classes")
    x = model._check_input(x)
    rng = np.random.default_rng(seed)
    opt = optimizer or Adam(lr=lr)
    curve = []
    for _ in range(epochs):
        order = rng.permutation(len(x))
        total = 0.0
        for start in range(0, len(x), batch_size):
            idx = order[start : start + batch_size]
            loss, grads = batch_loss_and_grads(model, x[idx], y[idx])
            if not np.isfinite(loss):
                raise FloatingPointError("training diverged (non-finite loss)")
            opt.step(model.params, grads)
            total += loss * len(idx)
        curve.append(total / len(x))
    return curve
