import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bihpf.numerics import (
    MagnitudeMap,
    Spectrum,
    centered_coords,
    fft2d,
    fftshift,
    ifft2d,
    ifftshift,
    magnitude,
    resize_bilinear,
    to_grayscale,
)
from oracles import dft2_bruteforce

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_fft_matches_bruteforce_small():
    rng = np.random.default_rng(1)
    for h, w in [(1, 1), (1, 5), (3, 4), (5, 5), (7, 2)]:
        x = rng.standard_normal((h, w))
        assert np.max(np.abs(fft2d(x).data - dft2_bruteforce(x))) < 1e-9


def test_delta_and_constant():
    x = np.zeros((4, 6))
    x[0, 0] = 1.0
    assert np.allclose(fft2d(x).data, 1.0)
    c = fft2d(np.full((4, 6), 2.0)).data
    assert c[0, 0] == pytest.approx(48.0)
    assert np.max(np.abs(c.ravel()[1:])) < 1e-12


def test_ifft_requires_native_layout():
    s = fftshift(fft2d(np.ones((4, 4))))
    with pytest.raises(ValueError):
        ifft2d(s)


def test_ifft_residual_small_for_real_input():
    x = np.random.default_rng(0).random((8, 8))
    back, resid = ifft2d(fft2d(x), return_residual=True)
    assert np.max(np.abs(back - x)) < 1e-12
    assert resid < 1e-12


@pytest.mark.parametrize("bad", [np.ones((2, 2, 2)), np.ones(4), np.array([[1.0, np.nan]])])
def test_fft_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        fft2d(bad)


def test_shift_flags():
    m = MagnitudeMap(np.arange(12.0).reshape(3, 4))
    c = fftshift(m)
    assert c.centered and not ifftshift(c).centered
    # DC moves to (h//2, w//2)
    assert c.data[1, 2] == 0.0


@given(st.integers(1, 9), st.integers(1, 9))
def test_shift_roundtrip_any_size(h, w):
    a = np.arange(h * w, dtype=float).reshape(h, w)
    assert np.array_equal(ifftshift(fftshift(a)), a)
    s = Spectrum(a.astype(complex))
    assert np.array_equal(ifftshift(fftshift(s)).data, s.data)


@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=finite))
def test_roundtrip_and_parseval(x):
    z = fft2d(x).data
    assert np.max(np.abs(ifft2d(fft2d(x)) - x)) < 1e-9
    lhs = np.sum(x**2)
    rhs = np.sum(np.abs(z) ** 2) / x.size
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, lhs)


@given(arrays(np.float64, (4, 5), elements=finite), arrays(np.float64, (4, 5), elements=finite), finite)
def test_fft_linear(a, b, c):
    lhs = fft2d(a + c * b).data
    rhs = fft2d(a).data + c * fft2d(b).data
    assert np.allclose(lhs, rhs, atol=1e-8)


def test_magnitude_keeps_layout():
    s = fftshift(fft2d(np.random.default_rng(2).random((4, 4))))
    m = magnitude(s)
    assert m.centered and np.all(m.data >= 0)


def test_grayscale_weights():
    img = np.zeros((1, 3, 3))
    img[0, 0, 0] = img[0, 1, 1] = img[0, 2, 2] = 1.0
    assert np.allclose(to_grayscale(img)[0], [0.299, 0.587, 0.114])
    assert np.allclose(to_grayscale(np.ones((2, 2, 3))), 1.0)
    g = np.random.default_rng(0).random((3, 3))
    assert np.array_equal(to_grayscale(g), g)
    with pytest.raises(ValueError):
        to_grayscale(np.ones((2, 2, 4)))


def test_bilinear_hand_values():
    img = np.array([[0.0, 1.0], [2.0, 3.0]])
    # half-pixel source positions for 2 -> 4: -0.25, 0.25, 0.75, 1.25, clamped to [0, 1]
    expected = np.array(
        [
            [0.0, 0.25, 0.75, 1.0],
            [0.5, 0.75, 1.25, 1.5],
            [1.5, 1.75, 2.25, 2.5],
            [2.0, 2.25, 2.75, 3.0],
        ]
    )
    assert np.allclose(resize_bilinear(img, 4, 4), expected)


def test_bilinear_downsample_by_two_averages_pairs():
    img = np.arange(16.0).reshape(4, 4)
    out = resize_bilinear(img, 2, 2)
    # source positions 0.5 and 2.5: means of 2x2 blocks
    assert np.allclose(out, img.reshape(2, 2, 2, 2).mean(axis=(1, 3)))


def test_bilinear_rgb_and_identity():
    img = np.random.default_rng(3).random((5, 6, 3))
    assert resize_bilinear(img, 10, 12).shape == (10, 12, 3)
    same = resize_bilinear(img, 5, 6)
    assert np.array_equal(same, img) and same is not img
    with pytest.raises(ValueError):
        resize_bilinear(img, 0, 3)


@given(st.floats(0, 1), st.integers(1, 6), st.integers(1, 6))
def test_bilinear_preserves_constants(v, h, w):
    assert np.allclose(resize_bilinear(np.full((3, 4), v), h, w), v)


def test_centered_coords():
    rows, cols = centered_coords(4, 5)
    assert rows.ravel().tolist() == [-2, -1, 0, 1]
    assert cols.ravel().tolist() == [-2, -1, 0, 1, 2]
