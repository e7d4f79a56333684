"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""
import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__, clustering, metrics, similarity, synth
from ._accel import backend_name
from .coeffxml import parse_coeff_dump
from .denoise import DenoiserParams, available_denoisers
from .errors import DataError
from .fingerprint import (ALPHA_SWEEP, DEFAULT_ALPHA, EnhancerParams, enhance,
                          extract_video_fingerprint, iter_alpha_values, read_fingerprint,
                          write_fingerprint)
from .frameio import align, load_frame_sequence
from .pipeline import PipelineConfig, run_pipeline, videos_from_manifest

log = logging.getLogger("vidprnu")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_ints(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _csv_floats(text):
    try:
        return iter_alpha_values(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_denoiser_flags(p):
    g = p.add_argument_group("denoiser")
    g.add_argument("--sigma0", type=float, default=3.0,
                   help="noise floor standard deviation on the 0-255 scale (default 3)")
    g.add_argument("--levels", type=int, default=4, help="wavelet decomposition levels")
    g.add_argument("--windows", type=_csv_ints, default=(3, 5, 7, 9),
                   help="local variance window sizes, e.g. 3,5,7,9")
    g.add_argument("--denoiser", default="wavelet-wiener", choices=available_denoisers())
    g.add_argument("--lenient", action="store_true",
                   help="pad short macroblock grids as dead instead of failing")


def _denoiser_params(args) -> DenoiserParams:
    return DenoiserParams(args.sigma0 ** 2, args.levels, args.windows)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vidprnu", description="Source camera attribution of videos by "
                     "compression-aware sensor fingerprints and open-set clustering.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--verbose", "-v", action="count", default=0)
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("extract", help="estimate the (raw) fingerprint of one video")
    p.add_argument("--frames", required=True, type=Path, help="directory of decoded frames")
    p.add_argument("--pattern", default="frame_{index}.pgm", help="filename template")
    p.add_argument("--coeffs", required=True, type=Path, help="coefficient dump XML")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--id", dest="video_id", default=None)
    _add_denoiser_flags(p)

    p = sub.add_parser("enhance", help="apply the enhancement map to a fingerprint")
    p.add_argument("--in", dest="inp", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--model", default="gamma3")

    p = sub.add_parser("correlate", help="pairwise correlation matrix")
    p.add_argument("--fps", nargs="+", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("cluster", help="average-linkage clustering with silhouette selection")
    p.add_argument("--matrix", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--k", type=int, default=None, help="fix the number of clusters")

    p = sub.add_parser("evaluate", help="TPR per group, average TPR, ROC and AUC")
    p.add_argument("--clusters", required=True, type=Path)
    p.add_argument("--labels", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--roc", type=Path, default=None)
    p.add_argument("--matrix", type=Path, default=None,
                   help="similarity matrix; required for ROC/AUC")
    p.add_argument("--majority-tpr", action="store_true",
                   help="score mixed groups by their predominant device")
    p.add_argument("--fixed-total", type=int, default=None,
                   help="divide group hits by this count instead of the device total")

    p = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    p.add_argument("--devices", type=int, default=8)
    p.add_argument("--videos", type=_csv_ints, default=(10,),
                   help="videos per device, one value or one per device")
    p.add_argument("--frames", type=int, default=24)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--strength", type=float, default=0.08)
    p.add_argument("--dead-frac", type=float, default=0.3)
    p.add_argument("--scene", choices=synth.SCENES, default="textured")
    p.add_argument("--shot-noise-var", type=float, default=4.0)
    p.add_argument("--seed", dest="synth_seed", type=int, default=None)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("pipeline", help="run extract..evaluate over a manifest of videos")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--labels", type=Path, default=None,
                   help="labels.csv (defaults to the manifest's labels entry)")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--alpha", type=_csv_floats, default=[DEFAULT_ALPHA],
                   help=f"one value or a sweep, e.g. {','.join(format(a, 'g') for a in ALPHA_SWEEP)}")
    p.add_argument("--enhancer", default="gamma3", help="enhancer model, or 'none'")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--majority-tpr", action="store_true")
    p.add_argument("--fixed-total", type=int, default=None)
    _add_denoiser_flags(p)
    return parser


def _validate(args):
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if getattr(args, "alpha", None) is not None:
        alphas = args.alpha if isinstance(args.alpha, list) else [args.alpha]
        if not alphas or any(a <= 0 for a in alphas):
            raise UsageError("--alpha values must be positive")
    if args.command == "evaluate" and args.roc and not args.matrix:
        raise UsageError("--roc needs --matrix")
    if getattr(args, "k", None) is not None and args.k < 2:
        raise UsageError("--k must be >= 2")
    if hasattr(args, "sigma0"):
        if args.sigma0 <= 0 or args.levels < 1 or not args.windows:
            raise UsageError("--sigma0 must be > 0, --levels >= 1, --windows nonempty")
        if any(w < 3 or w % 2 == 0 for w in args.windows):
            raise UsageError("--windows must be odd integers >= 3")


def cmd_extract(args):
    frames = load_frame_sequence(args.frames, args.pattern, threads=args.threads)
    h, w = frames[0].samples.shape
    coeffs = parse_coeff_dump(args.coeffs, w, h, strict=not args.lenient)
    video = align(frames, coeffs, strict=not args.lenient)
    vid = args.video_id or args.out.stem
    fp = extract_video_fingerprint(video, _denoiser_params(args), None, vid, args.denoiser,
                                   args.threads)
    write_fingerprint(args.out, fp)
    log.info("%s: %d frames -> %s", vid, fp.frame_count, args.out)


def cmd_enhance(args):
    fp = read_fingerprint(args.inp)
    write_fingerprint(args.out, enhance(fp, EnhancerParams(args.model, args.alpha)))


def cmd_correlate(args):
    fps = [read_fingerprint(p) for p in args.fps]
    sim = similarity.build_matrix(fps, [fp.video_id for fp in fps])
    similarity.write_matrix_csv(args.out, sim)


def cmd_cluster(args):
    sim = similarity.read_matrix_csv(args.matrix)
    result = clustering.select_clustering(sim, args.k)
    clustering.write_clusters_json(args.out, result)
    log.info("k=%d silhouette=%.4f", result.k, result.silhouette)


def cmd_evaluate(args):
    clusters = clustering.read_clusters_json(args.clusters)
    truth = metrics.read_labels_csv(args.labels)
    sim = similarity.read_matrix_csv(args.matrix) if args.matrix else None
    report = metrics.evaluate(clusters, truth, sim, args.majority_tpr, args.fixed_total)
    metrics.write_report_json(args.out, report)
    if args.roc:
        metrics.write_roc_csv(args.roc, report.roc)
    print(f"average TPR {report.average_tpr:.1f}%" +
          (f", AUC {report.auc:.6f}" if report.auc is not None else ""))


def cmd_synth(args):
    videos = args.videos[0] if len(args.videos) == 1 else tuple(args.videos)
    seed = args.synth_seed if args.synth_seed is not None else args.seed
    config = synth.SynthConfig(args.devices, videos, args.frames, args.width, args.height,
                               args.strength, args.scene, args.dead_frac, args.shot_noise_var,
                               seed)
    manifest = synth.generate_dataset(config, args.out)
    log.info("wrote %d videos to %s", len(manifest["videos"]), args.out)


def cmd_pipeline(args):
    manifest = synth.load_manifest(args.manifest)
    root = args.manifest.parent
    labels_path = args.labels or (root / manifest["labels"] if manifest.get("labels") else None)
    labels = metrics.read_labels_csv(labels_path) if labels_path else None
    config = PipelineConfig(
        denoiser=args.denoiser, dparams=_denoiser_params(args),
        enhancer=None if args.enhancer.lower() == "none" else args.enhancer,
        alphas=args.alpha, k=args.k, majority_tpr=args.majority_tpr,
        fixed_total=args.fixed_total, strict=not args.lenient, threads=args.threads)
    produced = run_pipeline(videos_from_manifest(manifest, root), config, args.out, labels)
    for name, path in produced.items():
        if not name.startswith("raw:"):
            print(f"{name}: {path}")


def _origin(exc) -> str:
    """Name of the innermost package module on the traceback."""
    origin = "io"
    tb = exc.__traceback__
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("vidprnu.") and name not in ("vidprnu.cli", "vidprnu.errors"):
            origin = name.split(".", 1)[1]
        tb = tb.tb_next
    return origin


COMMANDS = {
    "extract": cmd_extract,
    "enhance": cmd_enhance,
    "correlate": cmd_correlate,
    "cluster": cmd_cluster,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    log.debug("kernel backend: %s", backend_name())
    try:
        _validate(args)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"vidprnu {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        origin = _origin(exc)
        print(f"vidprnu {args.command}: {type(exc).__name__} ({origin}): {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"vidprnu {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
