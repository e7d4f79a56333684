"""Loading decoded frames as 8-bit luma planes and pairing them with coefficient dumps."""
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
from PIL import Image

from .coeffxml import MB_SIZE, FrameCoeffs, grid_size
from .errors import AlignmentError, BoundsError, FormatError, GapError, ResolutionError

# BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_PLACEHOLDER = re.compile(r"\{index(?::[^}]*)?\}")


@dataclass(frozen=True, eq=False)
class LumaFrame:
    samples: np.ndarray  # (height, width) uint8, read-only

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 2 or s.dtype != np.uint8:
            raise FormatError(f"luma plane must be a 2-D uint8 array, got {s.dtype} {s.shape}")
        if s.shape[0] == 0 or s.shape[1] == 0:
            raise FormatError("luma plane is empty")
        s = np.ascontiguousarray(s)
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    def __eq__(self, other):
        return isinstance(other, LumaFrame) and np.array_equal(self.samples, other.samples)

    __hash__ = None


@dataclass(frozen=True)
class VideoFrameSet:
    frames: Tuple[LumaFrame, ...]
    coeffs: Tuple[FrameCoeffs, ...]
    width: int
    height: int

    def __len__(self):
        return len(self.frames)


def rgb_to_luma(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma, rounded half-up to the nearest integer."""
    rgb = np.asarray(rgb, dtype=np.float64)
    y = rgb[..., 0] * LUMA_WEIGHTS[0] + rgb[..., 1] * LUMA_WEIGHTS[1] + rgb[..., 2] * LUMA_WEIGHTS[2]
    return np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8)


def _next_token(data: bytes, pos: int) -> Tuple[bytes, int]:
    n = len(data)
    while pos < n:
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM file."""
    data = Path(path).read_bytes()
    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {magic!r})")
    fields = []
    for _ in range(3):
        tok, pos = _next_token(data, pos)
        if not tok.isdigit():
            raise FormatError(f"{path}: bad PGM header")
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval > 255 or maxval < 1:
        raise FormatError(f"{path}: only 8-bit PGM is supported (maxval {maxval})")
    pos += 1  # single whitespace byte after maxval
    payload = data[pos:pos + width * height]
    if len(payload) != width * height:
        raise FormatError(f"{path}: truncated PGM payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(path, samples: np.ndarray) -> None:
    samples = np.asarray(samples)
    if samples.dtype != np.uint8 or samples.ndim != 2:
        raise FormatError("write_pgm expects a 2-D uint8 array")
    h, w = samples.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(samples).tobytes())


def load_frame(path) -> LumaFrame:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return LumaFrame(read_pgm(path))
    if suffix == ".png":
        with Image.open(path) as im:
            if im.mode == "L":
                return LumaFrame(np.asarray(im, dtype=np.uint8))
            if im.mode == "RGB":
                return LumaFrame(rgb_to_luma(np.asarray(im)))
            raise FormatError(f"{path}: unsupported PNG mode {im.mode} (need 8-bit L or RGB)")
    raise FormatError(f"{path}: unsupported frame format {suffix!r}")


def _template_regex(pattern: str) -> re.Pattern:
    pieces = _PLACEHOLDER.split(pattern)
    if len(pieces) != 2:
        raise FormatError(f"pattern {pattern!r} must contain exactly one {{index}} placeholder")
    return re.compile(re.escape(pieces[0]) + r"(\d+)" + re.escape(pieces[1]) + r"\Z")


def list_frame_files(directory, pattern: str) -> List[Path]:
    """Files matching ``pattern`` in numeric order; raises GapError on a missing index."""
    regex = _template_regex(pattern)
    found = {}
    for name in os.listdir(directory):
        m = regex.match(name)
        if m:
            found[int(m.group(1))] = Path(directory) / name
    if not found:
        raise FormatError(f"no files matching {pattern!r} in {directory}")
    indices = sorted(found)
    first = indices[0]
    if first not in (0, 1):
        raise GapError(0)
    for expect, got in enumerate(indices, start=first):
        if got != expect:
            raise GapError(expect)
    return [found[i] for i in indices]


def load_frame_sequence(directory, pattern: str = "frame_{index}.pgm",
                        threads: int = 1) -> List[LumaFrame]:
    """Load ``directory/pattern`` frames in index order, starting at 0 or 1."""
    paths = list_frame_files(directory, pattern)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            frames = list(pool.map(load_frame, paths))
    else:
        frames = [load_frame(p) for p in paths]
    shape = frames[0].samples.shape
    for p, f in zip(paths, frames):
        if f.samples.shape != shape:
            raise ResolutionError(
                f"{p.name} is {f.width}x{f.height}, expected {shape[1]}x{shape[0]}")
    return frames


def check_grid(coeffs: FrameCoeffs, width: int, height: int) -> None:
    rows, cols = grid_size(width, height)
    for mb in coeffs.macroblocks:
        if mb.x % MB_SIZE or mb.y % MB_SIZE or not (0 <= mb.x < width and 0 <= mb.y < height):
            raise BoundsError(f"Picture {coeffs.picture_id}: macroblock at ({mb.x},{mb.y}) "
                              f"does not fit a {width}x{height} frame")
    if len(coeffs.macroblocks) != rows * cols:
        raise BoundsError(f"Picture {coeffs.picture_id}: {len(coeffs.macroblocks)} macroblocks, "
                          f"expected {rows * cols} for {width}x{height}")


def align(frames: Sequence[LumaFrame], coeffs: Sequence[FrameCoeffs],
          strict: bool = True) -> VideoFrameSet:
    """Pair the k-th frame with the k-th coefficient record."""
    if len(frames) != len(coeffs):
        raise AlignmentError(f"frame/coeff count mismatch: {len(frames)} vs {len(coeffs)}")
    if not frames:
        raise AlignmentError("empty video: 0 frames")
    h, w = frames[0].samples.shape
    for f in frames:
        if f.samples.shape != (h, w):
            raise ResolutionError("frames of one video must share a resolution")
    if strict:
        for c in coeffs:
            check_grid(c, w, h)
    return VideoFrameSet(tuple(frames), tuple(coeffs), w, h)
