"""extract -> enhance -> correlate -> cluster -> evaluate over a list of videos."""
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import clustering, metrics, similarity
from .coeffxml import parse_coeff_dump
from .denoise import DenoiserParams
from .errors import DataError
from .fingerprint import (DEFAULT_ALPHA, EnhancerParams, Fingerprint, enhance,
                          extract_video_fingerprint, write_fingerprint)
from .frameio import align, load_frame_sequence

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VideoSpec:
    video_id: str
    frames_dir: Path
    coeffs: Path
    pattern: str = "frame_{index}.pgm"


@dataclass
class PipelineConfig:
    denoiser: str = "wavelet-wiener"
    dparams: DenoiserParams = field(default_factory=DenoiserParams)
    enhancer: Optional[str] = "gamma3"
    alphas: Sequence[float] = (DEFAULT_ALPHA,)
    k: Optional[int] = None
    majority_tpr: bool = False
    fixed_total: Optional[int] = None
    strict: bool = True
    threads: int = 1


class StageError(DataError):
    """A data error tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {type(exc).__name__}: {exc}")
        self.stage = stage
        self.cause = exc


def videos_from_manifest(manifest: dict, root: Path) -> List[VideoSpec]:
    specs = []
    for v in manifest["videos"]:
        specs.append(VideoSpec(v["id"], root / v["frames_dir"], root / v["coeffs"],
                               v.get("pattern", "frame_{index}.pgm")))
    return specs


def extract_one(spec: VideoSpec, config: PipelineConfig) -> Fingerprint:
    frames = load_frame_sequence(spec.frames_dir, spec.pattern, threads=config.threads)
    h, w = frames[0].samples.shape
    coeffs = parse_coeff_dump(spec.coeffs, w, h, strict=config.strict)
    video = align(frames, coeffs, strict=config.strict)
    return extract_video_fingerprint(video, config.dparams, None, spec.video_id,
                                     config.denoiser, config.threads)


class _Outputs:
    """Atomic writes via ``.partial`` files; everything written is removed on failure."""

    def __init__(self, root: Path):
        self.root = root
        self.written: List[Path] = []

    def path(self, rel: str) -> Path:
        p = self.root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def write(self, rel: str, writer, *args) -> Path:
        final = self.path(rel)
        tmp = final.with_name(final.name + ".partial")
        writer(tmp, *args)
        os.replace(tmp, final)
        self.written.append(final)
        return final

    def rollback(self):
        for p in self.written:
            try:
                p.unlink()
            except OSError:
                pass
        for p in self.root.rglob("*.partial"):
            p.unlink()


def _alpha_tag(alpha: float) -> str:
    return "alpha" + format(alpha, "g")


def run_pipeline(videos: Sequence[VideoSpec], config: PipelineConfig, out_dir,
                 labels: Optional[Dict[str, str]] = None) -> Dict[str, Path]:
    """Run every stage and return the written artifact paths keyed by name.

    With several alphas each evaluated output carries an ``_alpha<value>`` suffix.
    """
    out = _Outputs(Path(out_dir))
    produced: Dict[str, Path] = {}
    stage = "extract"
    try:
        raw = []
        for spec in videos:
            log.info("extracting %s", spec.video_id)
            fp = extract_one(spec, config)
            raw.append(fp)
            produced[f"raw:{spec.video_id}"] = out.write(f"fingerprints/raw/{spec.video_id}.vfp",
                                                         write_fingerprint, fp)
        stage = "cluster"
        clustering.check_item_count(len(raw))

        variants = [None] if config.enhancer is None else list(config.alphas)
        sweep = len(variants) > 1
        for alpha in variants:
            suffix = f"_{_alpha_tag(alpha)}" if sweep else ""
            stage = "enhance"
            if alpha is None:
                fps = raw
            else:
                params = EnhancerParams(config.enhancer, alpha)
                fps = [enhance(fp, params) for fp in raw]
                for fp in fps:
                    out.write(f"fingerprints/{_alpha_tag(alpha)}/{fp.video_id}.vfp",
                              write_fingerprint, fp)
            stage = "correlate"
            sim = similarity.build_matrix(fps, [v.video_id for v in videos])
            produced["matrix" + suffix] = out.write(f"matrix{suffix}.csv",
                                                    similarity.write_matrix_csv, sim)
            stage = "cluster"
            result = clustering.select_clustering(sim, config.k)
            produced["clusters" + suffix] = out.write(f"clusters{suffix}.json",
                                                      clustering.write_clusters_json, result)
            if labels is None:
                log.warning("no labels given; skipping evaluation")
                continue
            stage = "evaluate"
            report = metrics.evaluate(result.clusters(), labels, sim, config.majority_tpr,
                                      config.fixed_total)
            produced["report" + suffix] = out.write(f"report{suffix}.json",
                                                    metrics.write_report_json, report)
            produced["roc" + suffix] = out.write(f"roc{suffix}.csv", metrics.write_roc_csv,
                                                 report.roc)
    except DataError as exc:
        out.rollback()
        raise StageError(stage, exc) from exc
    except BaseException:
        out.rollback()
        raise
    return produced
