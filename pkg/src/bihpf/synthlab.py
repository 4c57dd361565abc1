"""Synthetic real/fake image lab.

"Real" images are rendered directly at full resolution: a 1/f colored-noise
background with one to four anti-aliased shapes near the center. "Fake"
images render the same content (same seed) at half resolution and upsample it
by 2, which leaves spectral replicas of the baseband in the upper frequency
bands. Since the replicas sit at known bins, every fake comes with a
ground-truth artifact mask.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import resize_bilinear

CATEGORIES = ("disks", "rectangles", "rings", "blobs")
GENERATORS = ("nn", "bilinear", "zero_insert")
COLOR_KINDS = ("hue", "brightness", "saturation", "gamma", "contrast")

# mean hue per category; the hue spread keeps the categories color-separable
CATEGORY_HUES = {"disks": 0.0, "rectangles": 0.33, "rings": 0.62, "blobs": 0.14}

# transposed-conv-like taps (per axis) used after zero insertion; the even/odd
# phase gains differ (1.1 vs 0.9), which produces the checkerboard pattern
TCONV_TAPS = np.array([0.45, 1.1, 0.45])

VALUE_RANGE = (0.05, 0.85)

# shape edge ramp width in full-resolution pixels (1.0 = plain box anti-aliasing)
EDGE_WIDTH = 1.0

# background texture per category: (1/f exponent, noise amplitude range).
# Categories differ in content statistics, never in the artifact mechanism.
CATEGORY_TEXTURE = {
    "disks": (1.5, (0.06, 0.10)),
    "rectangles": (1.2, (0.03, 0.06)),
    "rings": (1.8, (0.10, 0.16)),
    "blobs": (1.3, (0.08, 0.12)),
}


@dataclass(frozen=True)
class GenSpec:
    category: str = "disks"
    generator: str = "nn"
    size: int = 64
    seed: int = 0
    count: int = 1

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.size % 2:
            raise ValueError("size must be divisible by the upsampling factor 2")
        if self.count < 1:
            raise ValueError("count must be >= 1")


@dataclass(frozen=True)
class ColorOp:
    kind: str
    amount: float

    def __post_init__(self):
        if self.kind not in COLOR_KINDS:
            raise ValueError(f"unknown color op {self.kind!r}")

    @property
    def name(self):
        return f"{self.kind}{self.amount:g}"


# default manipulations: hue shift 0.2, everything else scaled by 1.3
DEFAULT_COLOR_OPS = (
    ColorOp("hue", 0.2),
    ColorOp("brightness", 1.3),
    ColorOp("saturation", 1.3),
    ColorOp("gamma", 1.3),
    ColorOp("contrast", 1.3),
)


@dataclass
class LabeledDataset:
    images: np.ndarray  # (N, h, w, 3)
    labels: np.ndarray  # (N,) 0 = real, 1 = fake
    categories: list
    generators: list
    artifact_masks: dict = field(default_factory=dict)  # generator -> centered bool mask

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise ValueError("labels must be 0 or 1")
        n = len(self.images)
        if not (len(self.labels) == len(self.categories) == len(self.generators) == n):
            raise ValueError("dataset fields have inconsistent lengths")
        for mask in self.artifact_masks.values():
            if mask.shape != self.images.shape[1:3]:
                raise ValueError("artifact mask shape does not match image shape")

    def __len__(self):
        return len(self.labels)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(
            self.images[idx],
            self.labels[idx],
            [self.categories[i] for i in idx],
            [self.generators[i] for i in idx],
            dict(self.artifact_masks),
        )

    def where(self, label=None, category=None, generator=None):
        keep = [
            i
            for i in range(len(self))
            if (label is None or self.labels[i] == label)
            and (category is None or self.categories[i] == category)
            and (generator is None or self.generators[i] == generator)
        ]
        return self.subset(keep)

    def domain_tags(self, key):
        return list(self.categories if key == "category" else self.generators)

    @staticmethod
    def concat(parts):
        parts = [p for p in parts if len(p)]
        if not parts:
            raise ValueError("nothing to concatenate")
        masks = {}
        for p in parts:
            masks.update(p.artifact_masks)
        return LabeledDataset(
            np.concatenate([p.images for p in parts]),
            np.concatenate([p.labels for p in parts]),
            [c for p in parts for c in p.categories],
            [g for p in parts for g in p.generators],
            masks,
        )


# ---------------------------------------------------------------- upsamplers


def zero_insert_upsample(x):
    """Place x on the even grid of a 2x larger zero image (no gain)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros((2 * x.shape[0], 2 * x.shape[1]) + x.shape[2:])
    out[::2, ::2] = x
    return out


def nn_upsample(x):
    return np.repeat(np.repeat(x, 2, axis=0), 2, axis=1)


def tconv_upsample(x, taps=None):
    """Zero insertion followed by a circular transposed-conv kernel per axis.

    Tap m is applied at offset m - 1, so a 3-tap kernel is centered.
    """
    taps = TCONV_TAPS if taps is None else np.asarray(taps)
    z = zero_insert_upsample(x)
    for axis in (0, 1):
        z = sum(t * np.roll(z, m - 1, axis=axis) for m, t in enumerate(taps))
    return z


def bilinear_upsample(x):
    return resize_bilinear(x, 2 * x.shape[0], 2 * x.shape[1])


UPSAMPLERS = {"nn": nn_upsample, "bilinear": bilinear_upsample, "zero_insert": tconv_upsample}


def baseband_mask(size):
    """Centered-layout bins representable at half resolution, [-size/4, size/4)^2."""
    off = np.arange(size) - size // 2
    inside = (off >= -size // 4) & (off < size // 4)
    return inside[:, None] & inside[None, :]


def replica_mask(size, radius=None):
    """Centered-layout ground-truth artifact bins for 2x upsampling.

    2x upsampling copies the baseband around the three Nyquist points
    (size/2, 0), (0, size/2), (size/2, size/2). Content energy is concentrated
    at low frequencies, so the replicas that matter sit within ``radius``
    (default size/8, circular distance) of those points.
    """
    radius = size / 8 if radius is None else radius
    k = np.arange(size)
    mask = np.zeros((size, size), dtype=bool)
    for cy, cx in ((size // 2, 0), (0, size // 2), (size // 2, size // 2)):
        dy = np.minimum(np.abs(k - cy), size - np.abs(k - cy))
        dx = np.minimum(np.abs(k - cx), size - np.abs(k - cx))
        mask |= dy[:, None] ** 2 + dx[None, :] ** 2 <= radius**2
    return np.fft.fftshift(mask)


# ----------------------------------------------------------------- rendering


def _image_rng(seed, category, index):
    return np.random.default_rng([seed, CATEGORIES.index(category), index])


def _noise_coefficients(rng, size, exponent):
    """Complex 1/f^exponent spectrum on the full-resolution DFT grid."""
    f = np.fft.fftfreq(size) * size
    radius = np.sqrt(f[:, None] ** 2 + f[None, :] ** 2)
    radius[0, 0] = 1.0
    amp = radius ** (-exponent)
    amp[0, 0] = 0.0
    coeff = (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) * amp
    return coeff


def _noise_field(coeff, out_size):
    """Sample the noise on an out_size grid, keeping only representable bins."""
    size = coeff.shape[0]
    if out_size == size:
        field_ = np.fft.ifft2(coeff).real
    else:
        half = out_size // 2
        idx = np.r_[0:half, size - half : size]
        # half-res pixel i is centered on full-res index (2i + 0.5)
        k = np.fft.fftfreq(size)[idx] * size
        phase = np.exp(2j * np.pi * k * 0.5 / size)
        sub = coeff[np.ix_(idx, idx)] * phase[:, None] * phase[None, :]
        # the shared Nyquist row/column has no exact counterpart: drop it
        sub[half, :] = 0
        sub[:, half] = 0
        field_ = np.fft.ifft2(sub).real * (out_size / size) ** 2
    # scale is fixed by the full-resolution field so both versions agree
    return field_ / (np.fft.ifft2(coeff).real.std() + 1e-12)


def _hsv_to_rgb_scalar(h, s, v):
    return hsv_to_rgb(np.array([[[h % 1.0, s, v]]]))[0, 0]


def _draw_content(rng, category, size):
    """Random content parameters for one image (independent of resolution)."""
    hue = CATEGORY_HUES[category]
    n_shapes = int(rng.integers(1, 5))
    shapes = []
    for _ in range(n_shapes):
        cx, cy = rng.uniform(0.32, 0.68, size=2) * size
        radius = rng.uniform(0.12, 0.22) * size
        color = _hsv_to_rgb_scalar(
            hue + rng.uniform(-0.05, 0.05), rng.uniform(0.5, 0.9), rng.uniform(0.35, 0.6)
        )
        extra = {
            "angle": rng.uniform(0, np.pi),
            "aspect": rng.uniform(0.55, 1.0),
            "inner": rng.uniform(0.45, 0.7),
            "harmonics": rng.uniform(-0.18, 0.18, size=3),
            "phases": rng.uniform(0, 2 * np.pi, size=3),
        }
        shapes.append((cx, cy, radius, color, extra))
    bg_color = _hsv_to_rgb_scalar(
        hue + 0.5 + rng.uniform(-0.08, 0.08), rng.uniform(0.2, 0.5), rng.uniform(0.35, 0.55)
    )
    exponent, amp_range = CATEGORY_TEXTURE[category]
    noise_amp = rng.uniform(*amp_range)
    coeff = _noise_coefficients(rng, size, exponent)
    return shapes, bg_color, noise_amp, coeff


def _signed_distance(category, cx, cy, radius, extra, px, py):
    dx, dy = px - cx, py - cy
    if category == "disks":
        return np.hypot(dx, dy) - radius
    if category == "rings":
        rho = np.hypot(dx, dy)
        inner = radius * extra["inner"]
        return np.abs(rho - (radius + inner) / 2) - (radius - inner) / 2
    if category == "rectangles":
        c, s = np.cos(extra["angle"]), np.sin(extra["angle"])
        u = np.abs(c * dx + s * dy) - radius
        v = np.abs(-s * dx + c * dy) - radius * extra["aspect"]
        outside = np.hypot(np.maximum(u, 0), np.maximum(v, 0))
        return outside + np.minimum(np.maximum(u, v), 0)
    theta = np.arctan2(dy, dx)
    k = np.arange(2, 5)[:, None, None]
    wobble = (extra["harmonics"][:, None, None] * np.cos(k * theta + extra["phases"][:, None, None])).sum(0)
    return np.hypot(dx, dy) - radius * (1 + wobble)


def _render(category, content, size, out_size):
    shapes, bg_color, noise_amp, coeff = content
    scale = size / out_size
    centers = (np.arange(out_size) + 0.5) * scale
    py, px = np.meshgrid(centers, centers, indexing="ij")
    noise = _noise_field(coeff, out_size)
    img = np.clip(bg_color[None, None, :] + noise_amp * noise[..., None], *VALUE_RANGE)
    for cx, cy, radius, color, extra in shapes:
        sd = _signed_distance(category, cx, cy, radius, extra, px, py)
        alpha = np.clip(0.5 - sd / (EDGE_WIDTH * scale), 0.0, 1.0)[..., None]
        img = img * (1 - alpha) + color[None, None, :] * alpha
    return np.clip(img, *VALUE_RANGE)


def render_pair(category, generator, size, seed, index):
    """(real, fake) images sharing one content draw."""
    content = _draw_content(_image_rng(seed, category, index), category, size)
    real = _render(category, content, size, size)
    half = _render(category, content, size, size // 2)
    fake = np.clip(UPSAMPLERS[generator](half), 0.0, 1.0)
    return real, fake


def gen_real(spec):
    imgs = [render_pair(spec.category, spec.generator, spec.size, spec.seed, i)[0] for i in range(spec.count)]
    n = spec.count
    return LabeledDataset(np.stack(imgs), np.zeros(n), [spec.category] * n, [spec.generator] * n)


def gen_fake(spec):
    imgs = [render_pair(spec.category, spec.generator, spec.size, spec.seed, i)[1] for i in range(spec.count)]
    n = spec.count
    return LabeledDataset(
        np.stack(imgs),
        np.ones(n),
        [spec.category] * n,
        [spec.generator] * n,
        {spec.generator: replica_mask(spec.size)},
    )


def gen_balanced(spec):
    """Real and fake sets for one (category, generator), interleaved pairs."""
    pairs = [render_pair(spec.category, spec.generator, spec.size, spec.seed, i) for i in range(spec.count)]
    images = np.stack([img for pair in pairs for img in pair])
    n = 2 * spec.count
    return LabeledDataset(
        images,
        np.tile([0, 1], spec.count),
        [spec.category] * n,
        [spec.generator] * n,
        {spec.generator: replica_mask(spec.size)},
    )


# ------------------------------------------------------------------- color


def rgb_to_hsv(rgb):
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)
    s = np.where(v > 0, c / np.where(v > 0, v, 1), 0.0)
    safe = np.where(c > 0, c, 1)
    h = np.where(
        v == r,
        ((g - b) / safe) % 6,
        np.where(v == g, (b - r) / safe + 2, (r - g) / safe + 4),
    )
    h = np.where(c > 0, h / 6.0, 0.0)
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv):
    hsv = np.asarray(hsv, dtype=np.float64)
    h, s, v = hsv[..., 0] % 1.0, hsv[..., 1], hsv[..., 2]
    i = np.floor(h * 6).astype(int) % 6
    f = h * 6 - np.floor(h * 6)
    p = v * (1 - s)
    q = v * (1 - s * f)
    t = v * (1 - s * (1 - f))
    choices = [
        np.stack(c, axis=-1)
        for c in ((v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q))
    ]
    out = np.zeros(hsv.shape)
    for k, c in enumerate(choices):
        out = np.where((i == k)[..., None], c, out)
    return out


def apply_color(img, op):
    """Color manipulation on an RGB image; result is clamped to [0, 1].

    hue rotates the HSV hue by ``amount`` turns, brightness/saturation scale
    V/S, gamma raises each channel to ``amount``, contrast stretches around 0.5.
    """
    img = np.asarray(img, dtype=np.float64)
    if op.kind == "gamma":
        return np.clip(np.clip(img, 0, 1) ** op.amount, 0, 1)
    if op.kind == "contrast":
        return np.clip(0.5 + (img - 0.5) * op.amount, 0, 1)
    hsv = rgb_to_hsv(img)
    if op.kind == "hue":
        hsv[..., 0] = (hsv[..., 0] + op.amount) % 1.0
    elif op.kind == "brightness":
        hsv[..., 2] = np.clip(hsv[..., 2] * op.amount, 0, 1)
    else:
        hsv[..., 1] = np.clip(hsv[..., 1] * op.amount, 0, 1)
    return np.clip(hsv_to_rgb(hsv), 0, 1)


# -------------------------------------------------------------- experiments


@dataclass(frozen=True)
class ExperimentConfig:
    """Train/test split for one cross-domain protocol.

    kind is 'cross-category', 'cross-color' or 'cross-model'. For cross-color
    the test categories carry the manipulation as a suffix, e.g. 'disks+hue0.2'.
    """

    kind: str = "cross-category"
    train_categories: tuple = ("disks",)
    test_categories: tuple = CATEGORIES
    train_generators: tuple = ("nn",)
    test_generators: tuple = ("nn",)
    color_ops: tuple = DEFAULT_COLOR_OPS
    size: int = 64
    n_train: int = 200
    n_test: int = 200
    seed: int = 0

    @property
    def domain_key(self):
        return "generator" if self.kind == "cross-model" else "category"

    def validate(self):
        if self.kind not in ("cross-category", "cross-color", "cross-model"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        for c in self.train_categories + self.test_categories:
            if c not in CATEGORIES:
                raise ValueError(f"unknown category {c!r}")
        for g in self.train_generators + self.test_generators:
            if g not in GENERATORS:
                raise ValueError(f"unknown generator {g!r}")
        if not self.train_categories or not self.train_generators:
            raise ValueError("training split needs at least one category and generator")
        if self.n_train < 1 or self.n_test < 0:
            raise ValueError("n_train must be >= 1 and n_test >= 0")
        if self.kind == "cross-model" and len(self.train_categories) != 1:
            raise ValueError("cross-model experiments use a single category")


def _split_counts(total, parts):
    base, extra = divmod(total, parts)
    return [base + (i < extra) for i in range(parts)]


def _balanced_block(category, generator, size, seed, start, count):
    pairs = [render_pair(category, generator, size, seed, start + i) for i in range(count)]
    if not pairs:
        return None
    images = np.stack([img for pair in pairs for img in pair])
    n = 2 * count
    return LabeledDataset(
        images, np.tile([0, 1], count), [category] * n, [generator] * n, {generator: replica_mask(size)}
    )


def build_experiment(cfg):
    """Build (train, test) datasets; real and fake counts are always equal.

    Train and test never share content indices: test images start after the
    training index range.
    """
    cfg.validate()
    train_parts = []
    combos = [(c, g) for c in cfg.train_categories for g in cfg.train_generators]
    for (c, g), n in zip(combos, _split_counts(cfg.n_train, len(combos))):
        train_parts.append(_balanced_block(c, g, cfg.size, cfg.seed, 0, n))
    train = LabeledDataset.concat([p for p in train_parts if p is not None])

    test_parts = []
    offset = cfg.n_train
    if cfg.kind == "cross-category":
        g = cfg.train_generators[0]
        for c in cfg.test_categories:
            test_parts.append(_balanced_block(c, g, cfg.size, cfg.seed, offset, cfg.n_test))
    elif cfg.kind == "cross-model":
        c = cfg.train_categories[0]
        for g in cfg.test_generators:
            test_parts.append(_balanced_block(c, g, cfg.size, cfg.seed, offset, cfg.n_test))
    else:
        g = cfg.train_generators[0]
        for c in cfg.test_categories:
            base = _balanced_block(c, g, cfg.size, cfg.seed, offset, cfg.n_test)
            if base is None:
                continue
            test_parts.append(_retag(base, f"{c}+original"))
            for op in cfg.color_ops:
                shifted = np.stack([apply_color(img, op) for img in base.images])
                test_parts.append(_retag(base, f"{c}+{op.name}", shifted))
        train = _retag(train, None)
    test_parts = [p for p in test_parts if p is not None]
    test = LabeledDataset.concat(test_parts) if test_parts else None
    return train, test


def _retag(ds, category, images=None):
    cats = [f"{c}+original" for c in ds.categories] if category is None else [category] * len(ds)
    return LabeledDataset(
        ds.images if images is None else images, ds.labels, cats, list(ds.generators), dict(ds.artifact_masks)
    )
