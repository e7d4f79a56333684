"""Noise residual extraction: W = I - denoise(I).

The built-in denoiser is a wavelet-domain locally adaptive Wiener filter: each
detail subband of a Daubechies-8 decomposition is shrunk by
``var / (var + sigma0**2)``, where ``var`` is the smallest local variance
estimate over several square windows. The approximation band is left alone.
Other denoisers can be plugged in with :func:`register_denoiser`.
"""
import warnings
from dataclasses import dataclass
from typing import Callable, Dict, Tuple, Union

import numpy as np
import pywt

from . import kernels
from .errors import DataError, SizeError
from .frameio import LumaFrame

WAVELET = "db8"


@dataclass(frozen=True)
class DenoiserParams:
    noise_floor_variance: float = 9.0
    levels: int = 4
    window_sizes: Tuple[int, ...] = (3, 5, 7, 9)

    def __post_init__(self):
        object.__setattr__(self, "window_sizes", tuple(int(w) for w in self.window_sizes))
        if not (self.noise_floor_variance > 0 and np.isfinite(self.noise_floor_variance)):
            raise DataError("noise_floor_variance must be a positive finite number")
        if int(self.levels) != self.levels or self.levels < 1:
            raise DataError("levels must be an integer >= 1")
        if not self.window_sizes:
            raise DataError("window_sizes must be nonempty")
        for w in self.window_sizes:
            if w < 3 or w % 2 == 0:
                raise DataError(f"window size {w} must be odd and >= 3")


@dataclass(frozen=True, eq=False)
class NoiseResidual:
    values: np.ndarray  # (height, width) float32

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


Denoiser = Callable[[np.ndarray, DenoiserParams], np.ndarray]
_REGISTRY: Dict[str, Denoiser] = {}


def register_denoiser(name: str):
    def decorator(func: Denoiser) -> Denoiser:
        _REGISTRY[name] = func
        return func

    return decorator


def available_denoisers():
    return sorted(_REGISTRY)


def get_denoiser(name: str) -> Denoiser:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise DataError(f"unknown denoiser {name!r}; available: {', '.join(available_denoisers())}") from None


@register_denoiser("wavelet-wiener")
def wavelet_wiener(image: np.ndarray, params: DenoiserParams) -> np.ndarray:
    h, w = image.shape
    if min(h, w) < max(params.window_sizes):
        raise SizeError(f"{w}x{h} frame is smaller than the {max(params.window_sizes)}-pixel window")
    step = 2 ** params.levels
    pad_h = -h % step
    pad_w = -w % step
    padded = np.pad(image, ((0, pad_h), (0, pad_w)), mode="symmetric") if (pad_h or pad_w) else image

    with warnings.catch_warnings():
        # deep levels on small frames trip pywt's boundary-effect warning; mirror extension
        # at every level keeps the edges clean, so it is only noise here
        warnings.simplefilter("ignore", UserWarning)
        coeffs = pywt.wavedec2(padded, WAVELET, mode="symmetric", level=params.levels)
    windows = np.asarray(params.window_sizes, dtype=np.int64)
    nv = float(params.noise_floor_variance)
    shrunk = [coeffs[0]]
    for bands in coeffs[1:]:
        shrunk.append(tuple(
            kernels.wiener_shrink(np.ascontiguousarray(b, dtype=np.float32), nv, windows)
            for b in bands))
    out = pywt.waverec2(shrunk, WAVELET, mode="symmetric")
    return np.ascontiguousarray(out[:h, :w], dtype=np.float32)


def _samples(frame: Union[LumaFrame, np.ndarray]) -> np.ndarray:
    arr = frame.samples if isinstance(frame, LumaFrame) else np.asarray(frame)
    if arr.ndim != 2:
        raise SizeError("expected a 2-D luma plane")
    return arr.astype(np.float32)


def denoise_frame(frame: Union[LumaFrame, np.ndarray], params: DenoiserParams = DenoiserParams(),
                  denoiser: str = "wavelet-wiener") -> np.ndarray:
    """Denoised float32 version of ``frame`` (same shape)."""
    return get_denoiser(denoiser)(_samples(frame), params)


def residual(frame: Union[LumaFrame, np.ndarray], params: DenoiserParams = DenoiserParams(),
             denoiser: str = "wavelet-wiener") -> NoiseResidual:
    image = _samples(frame)
    values = image - get_denoiser(denoiser)(image, params)
    return NoiseResidual(values.astype(np.float32))
