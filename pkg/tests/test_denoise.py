import numpy as np
import pytest

from vidprnu.denoise import (DenoiserParams, available_denoisers, denoise_frame, get_denoiser,
                             register_denoiser, residual)
from vidprnu.errors import DataError, SizeError
from vidprnu.frameio import LumaFrame

# float32 wavelet round trip error on the 0-255 scale
TOL = 1e-3


@pytest.mark.parametrize("value", [0, 128, 255])
@pytest.mark.parametrize("shape", [(64, 64), (50, 37), (480, 640)])
def test_constant_frame_is_a_fixed_point(value, shape):
    frame = np.full(shape, value, np.uint8)
    out = denoise_frame(frame)
    assert out.dtype == np.float32 and out.shape == shape
    assert np.max(np.abs(out - value)) <= TOL
    assert np.max(np.abs(residual(LumaFrame(frame)).values)) <= TOL


def test_residual_is_image_minus_denoised(rng):
    frame = rng.integers(0, 256, (40, 56), dtype=np.uint8)
    np.testing.assert_allclose(residual(frame).values,
                               frame.astype(np.float32) - denoise_frame(frame), atol=1e-4)


def test_white_noise_is_mostly_removed(rng):
    # scene + N(0, 3^2); the residual should recover most of the noise energy
    scene = np.tile(np.linspace(40, 200, 128), (128, 1))
    noise = rng.normal(0, 3, scene.shape)
    frame = np.clip(np.round(scene + noise), 0, 255).astype(np.uint8)
    res = residual(frame).values
    corr = np.corrcoef(res.ravel(), (frame - scene).ravel())[0, 1]
    assert corr > 0.6
    assert np.std(denoise_frame(frame) - scene) < np.std(frame - scene)


def test_larger_noise_floor_removes_more(rng):
    frame = rng.integers(0, 256, (64, 64), dtype=np.uint8)
    weak = residual(frame, DenoiserParams(noise_floor_variance=1.0)).values
    strong = residual(frame, DenoiserParams(noise_floor_variance=100.0)).values
    assert np.std(strong) > np.std(weak)


def test_frame_smaller_than_window():
    with pytest.raises(SizeError):
        denoise_frame(np.zeros((8, 64), np.uint8))
    # a 3-pixel window only needs 3 pixels
    denoise_frame(np.zeros((8, 64), np.uint8), DenoiserParams(window_sizes=(3,), levels=1))


@pytest.mark.parametrize("kwargs", [dict(noise_floor_variance=0), dict(levels=0),
                                    dict(window_sizes=()), dict(window_sizes=(4,)),
                                    dict(window_sizes=(1,))])
def test_bad_params(kwargs):
    with pytest.raises(DataError):
        DenoiserParams(**kwargs)


def test_registry():
    assert "wavelet-wiener" in available_denoisers()
    with pytest.raises(DataError, match="unknown denoiser"):
        get_denoiser("nope")

    @register_denoiser("identity-test")
    def identity(image, params):
        return image

    frame = np.arange(100, dtype=np.uint8).reshape(10, 10)
    assert np.all(residual(frame, denoiser="identity-test").values == 0)


def test_impulse_is_attenuated():
    frame = np.full((64, 64), 100, np.uint8)
    frame[30, 30] = 200
    out = denoise_frame(frame)
    assert np.max(np.abs(out - 100)) < 100


def test_no_wraparound_at_borders():
    # a periodic transform wraps the ramp's top onto its bottom and leaves a residual
    # near 4.8 there; mirror extension only sees a slope kink
    frame = np.tile(np.linspace(20, 230, 64)[:, None], (1, 64))
    res = residual(frame).values
    assert np.max(np.abs(res)) < 2.5


def test_residual_plus_denoised_is_the_frame(rng):
    frame = rng.integers(0, 256, (48, 80), dtype=np.uint8)
    total = residual(frame).values + denoise_frame(frame)
    np.testing.assert_allclose(total, frame, atol=1e-4)
    np.testing.assert_array_equal(residual(frame).values, residual(frame).values)


@pytest.mark.filterwarnings("ignore:Level value")
def test_huge_noise_floor_leaves_only_the_approximation(rng):
    import pywt

    frame = rng.integers(0, 256, (64, 64), dtype=np.uint8).astype(np.float32)
    out = denoise_frame(frame, DenoiserParams(noise_floor_variance=1e12))
    coeffs = pywt.wavedec2(frame, "db8", mode="symmetric", level=4)
    lowpass = pywt.waverec2([coeffs[0]] + [tuple(np.zeros_like(b) for b in d) for d in coeffs[1:]],
                            "db8", mode="symmetric")[:64, :64]
    np.testing.assert_allclose(out, lowpass, atol=1e-2)


def test_planted_noise_of_variance_4_is_recovered(rng):
    scene = 100 + 60 * np.sin(np.linspace(0, 3, 96))[None, :] * np.cos(np.linspace(0, 2, 96))[:, None]
    noise = rng.normal(0, 2, scene.shape)
    res = residual(scene + noise).values
    assert np.corrcoef(res.ravel(), noise.ravel())[0, 1] > 0.5


def test_residuals_from_same_sensor_correlate_more():
    from vidprnu import synth

    cfg = synth.SynthConfig(devices=2, videos_per_device=1, frames=2, width=128, height=128,
                            strength=0.15, dead_frac=0.0, seed=4)
    a = synth.generate_video(cfg, 0, 0).frames
    b = synth.generate_video(cfg, 1, 0).frames
    ra0, ra1, rb0 = (residual(f).values.ravel() for f in (a[0], a[1], b[0]))
    assert np.corrcoef(ra0, ra1)[0, 1] > np.corrcoef(ra0, rb0)[0, 1]
