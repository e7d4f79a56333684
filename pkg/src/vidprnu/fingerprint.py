"""Compression-aware fingerprint estimation and enhancement.

Per frame, a macroblock contributes only if at least one of its AC transform
coefficients survived quantization. The per-video fingerprint is the masked
estimate::

    K = sum_j W_j * I_j * M_j / (sum_j (I_j * M_j)**2 + 1)

and the enhanced fingerprint applies an odd, saturating exponential map that
flattens large (scene-dominated) values.
"""
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from . import kernels
from .coeffxml import MB_SIZE, FrameCoeffs, grid_size
from .denoise import DenoiserParams, NoiseResidual, residual
from .errors import BoundsError, DataError, EmptyVideoError, FormatError, ShapeError, StateError
from .frameio import LumaFrame, VideoFrameSet

DEFAULT_ALPHA = 20.0
ALPHA_SWEEP = (2.0, 5.0, 7.0, 20.0, 50.0)

MAGIC = b"VFP1"
_HEADER = struct.Struct("<4sIIBfI")


@dataclass(frozen=True, eq=False)
class FrameMask:
    bits: np.ndarray  # (height, width) uint8 of 0/1

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True, eq=False)
class VideoMask:
    masks: tuple

    def __len__(self):
        return len(self.masks)

    def stack(self) -> np.ndarray:
        """The (n, height, width) 3-D mask."""
        return np.stack([m.bits for m in self.masks])


@dataclass(frozen=True, eq=False)
class Fingerprint:
    values: np.ndarray  # (height, width) float32
    enhanced: bool = False
    video_id: str = ""
    frame_count: int = 0
    enhancer: Optional[str] = None
    alpha: Optional[float] = None

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class EnhancerParams:
    model: str = "gamma3"
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DataError(f"alpha must be positive, got {self.alpha}")


# ---------------------------------------------------------------------------
# masks
# ---------------------------------------------------------------------------

def macroblock_alive_grid(coeffs: FrameCoeffs, width: int, height: int) -> np.ndarray:
    rows, cols = grid_size(width, height)
    grid = np.zeros((rows, cols), np.uint8)
    for mb in coeffs.macroblocks:
        if mb.x % MB_SIZE or mb.y % MB_SIZE or not (0 <= mb.x < width and 0 <= mb.y < height):
            raise BoundsError(f"Picture {coeffs.picture_id}: macroblock at ({mb.x},{mb.y}) "
                              f"outside {width}x{height}")
        if mb.has_ac():
            grid[mb.y // MB_SIZE, mb.x // MB_SIZE] = 1
    return grid


def build_mask(coeffs: FrameCoeffs, width: int, height: int) -> FrameMask:
    """1 over every 16x16 footprint whose macroblock kept a nonzero AC coefficient."""
    grid = macroblock_alive_grid(coeffs, width, height)
    bits = np.repeat(np.repeat(grid, MB_SIZE, axis=0), MB_SIZE, axis=1)[:height, :width]
    return FrameMask(np.ascontiguousarray(bits))


def build_video_mask(coeffs: Sequence[FrameCoeffs], width: int, height: int) -> VideoMask:
    return VideoMask(tuple(build_mask(c, width, height) for c in coeffs))


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

class _Accumulator:
    def __init__(self, shape):
        self.shape = shape
        self.num = np.zeros(shape)
        self.den = np.zeros(shape)
        self.count = 0

    def add(self, frame: np.ndarray, res: np.ndarray, mask: np.ndarray):
        if frame.shape != self.shape or res.shape != self.shape or mask.shape != self.shape:
            raise ShapeError(f"frame {self.count}: shapes {frame.shape}, {res.shape}, "
                             f"{mask.shape} do not match {self.shape}")
        kernels.accumulate_masked(self.num, self.den,
                                  np.ascontiguousarray(res, dtype=np.float32),
                                  np.ascontiguousarray(frame), np.ascontiguousarray(mask))
        self.count += 1

    def result(self, video_id="") -> Fingerprint:
        if self.count == 0:
            raise EmptyVideoError("cannot aggregate a video with no frames")
        k = (self.num / (self.den + 1.0)).astype(np.float32)
        return Fingerprint(k, False, video_id, self.count)


def _plane(x):
    if isinstance(x, LumaFrame):
        return x.samples
    if isinstance(x, NoiseResidual):
        return x.values
    if isinstance(x, FrameMask):
        return x.bits
    return np.asarray(x)


def aggregate(frames: Sequence[LumaFrame], residuals: Sequence[NoiseResidual],
              masks: Union[VideoMask, Sequence[FrameMask]], video_id: str = "") -> Fingerprint:
    """Masked fingerprint estimate over ``n`` frames (intensities on the 0-255 scale)."""
    if isinstance(masks, VideoMask):
        masks = masks.masks
    if not (len(frames) == len(residuals) == len(masks)):
        raise ShapeError(f"length mismatch: {len(frames)} frames, {len(residuals)} residuals, "
                         f"{len(masks)} masks")
    if not frames:
        raise EmptyVideoError("cannot aggregate a video with no frames")
    acc = _Accumulator(_plane(frames[0]).shape)
    for f, w, m in zip(frames, residuals, masks):
        acc.add(_plane(f), _plane(w), _plane(m))
    return acc.result(video_id)


# ---------------------------------------------------------------------------
# enhancement
# ---------------------------------------------------------------------------

Enhancer = Callable[[np.ndarray, float], np.ndarray]
_ENHANCERS: Dict[str, Enhancer] = {"gamma3": kernels.gamma3_map}


def register_enhancer(name: str, func: Enhancer) -> None:
    _ENHANCERS[name] = func


def available_enhancers():
    return sorted(_ENHANCERS)


def gamma3(k, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Non-linear exponential enhancement, elementwise; ``|out| <= 1 - exp(-alpha)``."""
    k = np.ascontiguousarray(np.atleast_1d(np.asarray(k, dtype=np.float64)))
    return kernels.gamma3_map(k, float(alpha))


def enhance(fp: Fingerprint, params: EnhancerParams = EnhancerParams()) -> Fingerprint:
    if fp.enhanced:
        raise StateError(f"fingerprint {fp.video_id or '<unnamed>'} is already enhanced")
    try:
        func = _ENHANCERS[params.model]
    except KeyError:
        raise DataError(f"unknown enhancer {params.model!r}; available: "
                        f"{', '.join(available_enhancers())}") from None
    values = func(np.ascontiguousarray(fp.values), float(params.alpha))
    return replace(fp, values=np.asarray(values, dtype=np.float32), enhanced=True,
                   enhancer=params.model, alpha=float(params.alpha))


# ---------------------------------------------------------------------------
# end to end
# ---------------------------------------------------------------------------

def _frame_contribution(args):
    frame, coeffs, width, height, dparams, denoiser = args
    res = residual(frame, dparams, denoiser).values
    mask = build_mask(coeffs, width, height).bits
    return frame.samples, res, mask


def extract_video_fingerprint(video: VideoFrameSet, dparams: DenoiserParams = DenoiserParams(),
                              eparams: Optional[EnhancerParams] = None, video_id: str = "",
                              denoiser: str = "wavelet-wiener", threads: int = 1) -> Fingerprint:
    """Residuals, masks and aggregation for one video; optionally enhanced.

    Frames are streamed through the accumulator so memory stays at a few planes
    regardless of video length.
    """
    if len(video.frames) == 0:
        raise EmptyVideoError("video has no frames")
    jobs = ((f, c, video.width, video.height, dparams, denoiser)
            for f, c in zip(video.frames, video.coeffs))
    acc = _Accumulator((video.height, video.width))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            for contribution in pool.map(_frame_contribution, jobs):
                acc.add(*contribution)
    else:
        for job in jobs:
            acc.add(*_frame_contribution(job))
    fp = acc.result(video_id)
    return enhance(fp, eparams) if eparams is not None else fp


# ---------------------------------------------------------------------------
# VFP1 file format
# ---------------------------------------------------------------------------

def write_fingerprint(path, fp: Fingerprint) -> None:
    """Write ``fp``: magic, u32 width, u32 height, u8 enhanced, f32 alpha, u32 frames, f32 data (LE)."""
    alpha = fp.alpha if (fp.enhanced and fp.alpha is not None) else 0.0
    header = _HEADER.pack(MAGIC, fp.width, fp.height, 1 if fp.enhanced else 0, alpha, fp.frame_count)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(fp.values, dtype="<f4").tobytes())


def read_fingerprint(path, video_id: Optional[str] = None) -> Fingerprint:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated fingerprint header")
    magic, width, height, enhanced, alpha, frames = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * width * height
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(height, width)
    values = values.astype(np.float32)
    return Fingerprint(values, bool(enhanced), video_id if video_id is not None else path.stem,
                       frames, "gamma3" if enhanced else None, float(alpha) if enhanced else None)


def iter_alpha_values(spec: Union[str, Iterable[float]]) -> List[float]:
    if isinstance(spec, str):
        return [float(v) for v in spec.split(",") if v.strip()]
    return [float(v) for v in spec]
