import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bihpf.numerics import to_grayscale
from bihpf.synthlab import (
    CATEGORIES,
    ColorOp,
    ExperimentConfig,
    GenSpec,
    LabeledDataset,
    apply_color,
    baseband_mask,
    build_experiment,
    gen_balanced,
    gen_fake,
    gen_real,
    hsv_to_rgb,
    nn_upsample,
    render_pair,
    replica_mask,
    rgb_to_hsv,
    tconv_upsample,
    zero_insert_upsample,
)


# -------------------------------------------------------------- upsamplers


@given(arrays(np.float64, (8, 8), elements=st.floats(-1, 1)))
def test_zero_insert_replicates_baseband(x):
    big = np.fft.fft2(zero_insert_upsample(x))
    assert np.allclose(big, np.tile(np.fft.fft2(x), (2, 2)), atol=1e-12)


@given(arrays(np.float64, (8, 8), elements=st.floats(-1, 1)))
def test_nn_is_zero_insert_times_box_response(x):
    k = np.arange(16)
    box = 1 + np.exp(-2j * np.pi * k / 16)
    expected = np.tile(np.fft.fft2(x), (2, 2)) * box[:, None] * box[None, :]
    assert np.allclose(np.fft.fft2(nn_upsample(x)), expected, atol=1e-10)


def test_nn_replicas_attenuated_but_nonzero():
    x = np.random.default_rng(0).random((8, 8))
    big = np.abs(np.fft.fft2(nn_upsample(x)))
    base = np.abs(np.fft.fft2(x))
    # replica of bin (1, 0) sits at (9, 0); the box response there is |1 + e^{-i 9 pi / 8}|
    gain = abs(1 + np.exp(-2j * np.pi * 9 / 16)) * 2
    assert big[9, 0] == pytest.approx(base[1, 0] * gain)
    assert 0 < gain < 4


def test_tconv_kernel_centered_circular():
    x = np.zeros((4, 4))
    x[1, 1] = 1.0
    up = tconv_upsample(x)
    nz = {tuple(p) for p in np.argwhere(np.abs(up) > 0)}
    assert nz == {(r, c) for r in (1, 2, 3) for c in (1, 2, 3)}
    assert up[2, 2] == pytest.approx(1.1 * 1.1)
    assert up[1, 2] == pytest.approx(0.45 * 1.1)


def test_masks():
    b = baseband_mask(16)
    assert b.sum() == 64 and b[8, 8] and not b[0, 0]
    m = replica_mask(64)
    assert m.shape == (64, 64) and not m[32, 32]
    # the replica of DC at (size/2, size/2) lands on the corner of the centered layout
    assert m[0, 0] and m[0, 32] and m[32, 0]


# ------------------------------------------------------------------ images


def test_gen_real_reproducible():
    a = gen_real(GenSpec("rings", "nn", 32, seed=5))
    b = gen_real(GenSpec("rings", "nn", 32, seed=5))
    assert a.images.tobytes() == b.images.tobytes()
    assert np.all(a.labels == 0) and a.images.shape == (1, 32, 32, 3)
    assert a.images.min() >= 0 and a.images.max() <= 1


def test_gen_fake_labels_and_mask():
    f = gen_fake(GenSpec("blobs", "zero_insert", 32, seed=1, count=3))
    assert np.all(f.labels == 1) and f.artifact_masks["zero_insert"].shape == (32, 32)
    bal = gen_balanced(GenSpec("disks", "nn", 32, count=2))
    assert bal.labels.tolist() == [0, 1, 0, 1]


def test_genspec_validation():
    for bad in (dict(category="faces"), dict(generator="gan"), dict(size=33), dict(count=0)):
        with pytest.raises(ValueError):
            GenSpec(**bad)


def spectra(generator, n=25, size=64):
    reals, fakes = [], []
    for cat in CATEGORIES:
        for i in range(n):
            r, f = render_pair(cat, generator, size, 0, i)
            reals.append(np.abs(np.fft.fft2(to_grayscale(r))) ** 2)
            fakes.append(np.abs(np.fft.fft2(to_grayscale(f))) ** 2)
    return np.mean(reals, 0), np.mean(fakes, 0)


@pytest.fixture(scope="module")
def zi_spectra():
    return spectra("zero_insert")


def test_real_radial_power_decays(zi_spectra):
    power = np.fft.fftshift(zi_spectra[0])
    off = np.arange(64) - 32
    rad = np.hypot(off[:, None], off[None, :])
    profile = [power[(rad >= r) & (rad < r + 1)].mean() for r in range(8, 32)]
    assert np.all(np.diff(profile) < 0)


@pytest.mark.parametrize("generator", ["nn", "zero_insert"])
def test_fakes_have_more_high_band_energy(generator):
    real, fake = spectra(generator, n=10)
    k = np.fft.fftfreq(64) * 64
    high = np.hypot(k[:, None], k[None, :]) > 16
    assert fake[high].mean() > real[high].mean()


def test_bilinear_fakes_are_smoother():
    # bilinear interpolation low-passes the replicas, so its fakes lose high-band energy
    real, fake = spectra("bilinear", n=10)
    k = np.fft.fftfreq(64) * 64
    high = np.hypot(k[:, None], k[None, :]) > 16
    assert fake[high].mean() < real[high].mean()


def test_mask_holds_excess_energy(zi_spectra):
    real, fake = zi_spectra
    excess = np.maximum(fake - real, 0)
    mask = np.fft.ifftshift(replica_mask(64))
    assert excess[mask].sum() / excess.sum() >= 0.99


# ------------------------------------------------------------------- color


@given(arrays(np.float64, (3, 3, 3), elements=st.floats(0, 1)))
def test_hsv_roundtrip(img):
    assert np.allclose(hsv_to_rgb(rgb_to_hsv(img)), img, atol=1e-12)


@given(arrays(np.float64, (3, 3, 3), elements=st.floats(0, 1)))
def test_color_identities(img):
    for kind in ("brightness", "saturation", "gamma", "contrast"):
        assert np.allclose(apply_color(img, ColorOp(kind, 1.0)), img, atol=1e-12)
    assert np.allclose(apply_color(img, ColorOp("hue", 0.0)), img, atol=1e-12)
    twice = apply_color(apply_color(img, ColorOp("hue", 0.5)), ColorOp("hue", 0.5))
    assert np.allclose(twice, img, atol=1e-9)
    for kind in ("brightness", "saturation", "gamma", "contrast"):
        out = apply_color(img, ColorOp(kind, 1.3))
        assert out.min() >= 0 and out.max() <= 1


def test_gamma_fixed_points_and_names():
    img = np.array([[[0.0, 1.0, 0.0]]])
    assert np.array_equal(apply_color(img, ColorOp("gamma", 1.3)), img)
    assert ColorOp("hue", 0.2).name == "hue0.2"
    with pytest.raises(ValueError):
        ColorOp("sharpness", 1.0)


def test_hue_shift_rotates_primary():
    red = np.array([[[1.0, 0.0, 0.0]]])
    # a third of a turn takes red to green
    assert np.allclose(apply_color(red, ColorOp("hue", 1 / 3)), [[[0.0, 1.0, 0.0]]])


# ------------------------------------------------------------- experiments


def small(**kw):
    kw.setdefault("size", 16)
    kw.setdefault("n_train", 6)
    kw.setdefault("n_test", 3)
    return ExperimentConfig(**kw)


def balanced(ds):
    return np.sum(ds.labels == 0) == np.sum(ds.labels == 1)


def test_cross_category_partition():
    train, test = build_experiment(small(train_categories=("disks",), test_categories=("rings",)))
    assert set(train.categories) == {"disks"} and set(test.categories) == {"rings"}
    assert balanced(train) and balanced(test) and len(train) == 12 and len(test) == 6


def test_cross_color_and_model():
    train, test = build_experiment(small(kind="cross-color", test_categories=("disks",)))
    tags = sorted(set(test.categories))
    assert "disks+original" in tags and "disks+hue0.2" in tags and len(tags) == 6
    assert set(train.categories) == {"disks+original"}
    for t in tags:
        assert balanced(test.where(category=t))
    train, test = build_experiment(small(kind="cross-model", test_generators=("nn", "bilinear", "zero_insert")))
    assert set(train.generators) == {"nn"} and set(test.generators) == {"nn", "bilinear", "zero_insert"}
    assert set(test.artifact_masks) == {"nn", "bilinear", "zero_insert"}


def test_train_and_test_content_disjoint():
    train, test = build_experiment(small(test_categories=("disks",)))
    for a in train.images:
        assert not any(np.array_equal(a, b) for b in test.images)


def test_experiment_deterministic_and_validated():
    a = build_experiment(small(seed=3))
    b = build_experiment(small(seed=3))
    assert a[0].images.tobytes() == b[0].images.tobytes()
    assert a[1].images.tobytes() == b[1].images.tobytes()
    assert build_experiment(small(n_test=0))[1] is None
    for bad in (dict(kind="cross-weather"), dict(train_categories=("faces",)), dict(n_train=0)):
        with pytest.raises(ValueError):
            build_experiment(small(**bad))


def test_dataset_helpers():
    ds = gen_balanced(GenSpec("disks", "nn", 16, count=3))
    assert len(ds.where(label=1)) == 3
    both = LabeledDataset.concat([ds, ds.subset([0, 1])])
    assert len(both) == 8
    with pytest.raises(ValueError):
        LabeledDataset(ds.images, np.full(6, 2), ds.categories, ds.generators)
    with pytest.raises(ValueError):
        LabeledDataset(ds.images[:2], ds.labels, ds.categories, ds.generators)
