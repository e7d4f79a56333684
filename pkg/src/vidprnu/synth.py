"""Synthetic devices, videos and coefficient dumps with known ground truth.

Each device owns a zero-mean, unit-variance multiplicative pattern ``K``. A
frame is ``clip(round(scene * (1 + strength * K) + noise))`` over macroblocks
that survive compression; dead macroblocks carry only the rounded scene (the
sensor pattern and shot noise were quantized away), and their dumped AC
coefficients are all zero.

Random streams are keyed by (seed, device) and (seed, device, video), so any
subset of videos can be generated independently and in any order.
"""
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Tuple, Union

import numpy as np
from scipy import ndimage

from .coeffxml import MB_SIZE, FrameCoeffs, MacroblockRecord, grid_size, to_xml
from .errors import DataError, IdError
from .fingerprint import Fingerprint, write_fingerprint
from .frameio import LumaFrame, write_pgm
from .metrics import write_labels_csv
from .similarity import correlation

log = logging.getLogger(__name__)

SCENES = ("flat", "gradient", "textured")
MANIFEST_FORMAT = "vidprnu-synth/1"
FRAME_PATTERN = "frame_{index}.pgm"
_GOP = 12

# videos per device in the 13-device social-platform sample
VISION_COUNTS = (27, 11, 7, 4, 3, 3, 3, 3, 3, 3, 3, 3, 3)


@dataclass(frozen=True)
class SynthConfig:
    devices: int = 8
    videos_per_device: Union[int, Tuple[int, ...]] = 10
    frames: int = 24
    width: int = 640
    height: int = 480
    strength: float = 0.08
    scene: str = "textured"
    dead_frac: float = 0.3
    shot_noise_var: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.videos_per_device, (list, tuple)):
            object.__setattr__(self, "videos_per_device", tuple(int(v) for v in self.videos_per_device))
            if len(self.videos_per_device) != self.devices:
                raise DataError("videos_per_device list must have one entry per device")
            if min(self.videos_per_device) < 1:
                raise DataError("every device needs at least one video")
        elif self.videos_per_device < 1:
            raise DataError("videos_per_device must be >= 1")
        if min(self.devices, self.frames, self.width, self.height) < 1:
            raise DataError("counts and dimensions must be >= 1")
        if not 0.0 <= self.dead_frac <= 1.0:
            raise DataError("dead_frac must lie in [0, 1]")
        if self.scene not in SCENES:
            raise DataError(f"scene must be one of {SCENES}")
        if self.strength < 0 or self.shot_noise_var < 0:
            raise DataError("strength and shot_noise_var must be non-negative")

    def video_count(self, device: int) -> int:
        v = self.videos_per_device
        return v[device] if isinstance(v, tuple) else v


def acid_config(**overrides) -> SynthConfig:
    """Eight devices with ten 1080p videos each."""
    return SynthConfig(**{"devices": 8, "videos_per_device": 10, "width": 1920,
                          "height": 1080, **overrides})


def vision_config(**overrides) -> SynthConfig:
    """Thirteen devices with the unbalanced 27/11/7/4/3... video counts."""
    return SynthConfig(**{"devices": len(VISION_COUNTS), "videos_per_device": VISION_COUNTS,
                          **overrides})


def device_id(d: int) -> str:
    return f"D{d:02d}"


def video_id(d: int, v: int) -> str:
    return f"D{d:02d}_V{v:02d}"


def _rng(config: SynthConfig, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=key))


def device_fingerprint(config: SynthConfig, d: int) -> np.ndarray:
    k = _rng(config, 0, d).standard_normal((config.height, config.width))
    k = (k - k.mean()) / k.std()
    return k.astype(np.float32)


def _octave(rng, shape, period) -> np.ndarray:
    h, w = shape
    grid = rng.uniform(-1.0, 1.0, (h // period + 2, w // period + 2))
    return ndimage.zoom(grid, period, order=1)[:h, :w]


def _scene_canvas(config: SynthConfig, rng, margin: int) -> np.ndarray:
    shape = (config.height + 2 * margin, config.width + 2 * margin)
    if config.scene == "flat":
        return np.full(shape, 128.0)
    if config.scene == "gradient":
        theta = rng.uniform(0, 2 * np.pi)
        yy, xx = np.mgrid[0:shape[0], 0:shape[1]].astype(np.float64)
        t = xx * np.cos(theta) + yy * np.sin(theta)
        t = (t - t.min()) / max(t.max() - t.min(), 1e-12)
        return 32.0 + 192.0 * t
    canvas = 128.0 + 50.0 * _octave(rng, shape, 64) + 25.0 * _octave(rng, shape, 16)
    canvas += 12.0 * _octave(rng, shape, 4)
    return ndimage.gaussian_filter(canvas, 0.7)


def _slice_type(t: int) -> str:
    if t % _GOP == 0:
        return "I"
    return "P" if t % 3 == 1 else "B"


def _frame_coeffs(rng, t: int, alive: np.ndarray) -> FrameCoeffs:
    rows, cols = alive.shape
    stype = _slice_type(t)
    pred = f"BLOCK_TYPE_{stype}"
    values = rng.integers(-7, 8, size=(rows, cols, 4, 4))
    dc = values[:, :, 0, 0].copy()
    values[~alive] = 0
    values[~alive, 0, 0] = dc[~alive]
    # alive blocks need at least one nonzero AC term
    ac_nonzero = (values.reshape(rows, cols, 16)[:, :, 1:] != 0).any(axis=2)
    fix = alive & ~ac_nonzero
    if fix.any():
        pos = rng.integers(1, 16, size=(rows, cols))
        sign = rng.choice(np.array([-1, 1]), size=(rows, cols))
        mag = rng.integers(1, 8, size=(rows, cols))
        for r, c in zip(*np.nonzero(fix)):
            values[r, c, pos[r, c] // 4, pos[r, c] % 4] = sign[r, c] * mag[r, c]
    mbs = []
    for r in range(rows):
        for c in range(cols):
            m = values[r, c].tolist()
            mbs.append(MacroblockRecord(r * cols + c, c * MB_SIZE, r * MB_SIZE, pred,
                                        (tuple(tuple(row) for row in m),)))
    return FrameCoeffs(t, 2 * t, stype, tuple(mbs))


@dataclass
class SynthVideo:
    video_id: str
    device_id: str
    frames: List[LumaFrame]
    coeffs: List[FrameCoeffs]


def generate_video(config: SynthConfig, d: int, v: int,
                   pattern: Optional[np.ndarray] = None) -> SynthVideo:
    if pattern is None:
        pattern = device_fingerprint(config, d)
    rng = _rng(config, 1, d, v)
    h, w = config.height, config.width
    rows, cols = grid_size(w, h)
    margin = 2 * config.frames + 1
    canvas = _scene_canvas(config, rng, margin)
    vy, vx = rng.integers(-2, 3, size=2)
    gain = 1.0 + config.strength * pattern.astype(np.float64)
    sigma = float(np.sqrt(config.shot_noise_var))

    frames, coeffs = [], []
    for t in range(config.frames):
        oy = margin + int(vy) * t
        ox = margin + int(vx) * t
        scene = canvas[oy:oy + h, ox:ox + w]
        alive = rng.random((rows, cols)) >= config.dead_frac
        alive_px = np.repeat(np.repeat(alive, MB_SIZE, 0), MB_SIZE, 1)[:h, :w]
        noisy = scene * gain + sigma * rng.standard_normal((h, w))
        pixels = np.where(alive_px, noisy, scene)
        frames.append(LumaFrame(np.clip(np.rint(pixels), 0, 255).astype(np.uint8)))
        coeffs.append(_frame_coeffs(rng, t, alive))
    return SynthVideo(video_id(d, v), device_id(d), frames, coeffs)


def iter_videos(config: SynthConfig) -> Iterator[SynthVideo]:
    for d in range(config.devices):
        pattern = device_fingerprint(config, d)
        for v in range(config.video_count(d)):
            yield generate_video(config, d, v, pattern)


def ground_truth(config: SynthConfig) -> Dict[str, str]:
    return {video_id(d, v): device_id(d)
            for d in range(config.devices) for v in range(config.video_count(d))}


def generate_dataset(config: SynthConfig, out) -> dict:
    """Write frames, dumps, labels.csv, true device patterns and manifest.json under ``out``."""
    out = Path(out)
    try:
        (out / "videos").mkdir(parents=True, exist_ok=True)
        (out / "devices").mkdir(exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from None

    devices, videos = [], []
    for d in range(config.devices):
        pattern = device_fingerprint(config, d)
        rel = f"devices/{device_id(d)}.vfp"
        write_fingerprint(out / rel, Fingerprint(pattern, False, device_id(d), 0))
        devices.append({"id": device_id(d), "index": d, "fingerprint": rel})
        for v in range(config.video_count(d)):
            video = generate_video(config, d, v, pattern)
            vdir = Path("videos") / video.video_id
            (out / vdir).mkdir(exist_ok=True)
            for t, frame in enumerate(video.frames):
                write_pgm(out / vdir / FRAME_PATTERN.format(index=t), frame.samples)
            (out / vdir / "coeffs.xml").write_bytes(to_xml(video.coeffs))
            videos.append({"id": video.video_id, "device": video.device_id,
                           "frames_dir": vdir.as_posix(), "pattern": FRAME_PATTERN,
                           "coeffs": (vdir / "coeffs.xml").as_posix(),
                           "frames": config.frames})
            log.info("wrote %s", video.video_id)
    write_labels_csv(out / "labels.csv", {v["id"]: v["device"] for v in videos})
    manifest = {"format": MANIFEST_FORMAT, "seed": config.seed, "config": asdict(config),
                "labels": "labels.csv", "devices": devices, "videos": videos}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_manifest(path) -> dict:
    with open(path) as fh:
        manifest = json.load(fh)
    if "videos" not in manifest:
        raise DataError(f"{path}: manifest has no 'videos' list")
    return manifest


def config_from_manifest(manifest: Mapping) -> SynthConfig:
    cfg = dict(manifest["config"])
    if isinstance(cfg.get("videos_per_device"), list):
        cfg["videos_per_device"] = tuple(cfg["videos_per_device"])
    return SynthConfig(**cfg)


def _mean(xs):
    return float(np.mean(xs)) if xs else None


def plant_check(manifest: Mapping, fingerprints: Mapping[str, Fingerprint],
                labels: Optional[Mapping[str, str]] = None,
                true_patterns: Optional[Mapping[str, np.ndarray]] = None) -> dict:
    """Compare estimated fingerprints with the planted device patterns.

    :param labels: device grouping for the same/cross margin; defaults to the manifest's
    :param true_patterns: device id -> planted pattern; regenerated from the
        manifest's config and seed when omitted
    :return: per-video correlation with the planted pattern, and mean same-device
        versus cross-device correlation between estimates
    """
    truth = {v["id"]: v["device"] for v in manifest["videos"]}
    missing = sorted(set(truth) ^ set(fingerprints))
    if missing:
        raise IdError(f"manifest and fingerprints disagree on ids: {', '.join(missing[:5])}")
    if true_patterns is None:
        config = config_from_manifest(manifest)
        true_patterns = {d["id"]: device_fingerprint(config, d["index"]) for d in manifest["devices"]}
    groups = labels if labels is not None else truth

    per_video = {vid: correlation(fingerprints[vid].values, true_patterns[truth[vid]])
                 for vid in sorted(truth)}
    ids = sorted(truth)
    same, cross = [], []
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            r = correlation(fingerprints[a].values, fingerprints[b].values)
            (same if groups[a] == groups[b] else cross).append(r)
    same_mean, cross_mean = _mean(same), _mean(cross)
    return {
        "per_video": per_video,
        "same_device_mean": same_mean,
        "cross_device_mean": cross_mean,
        "margin": (same_mean - cross_mean) if (same and cross) else None,
        "cross_device_empty": not cross,
        "same_device_empty": not same,
    }
