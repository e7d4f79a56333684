"""Evaluation against ground truth: per-group TPR, average TPR, pairwise ROC and AUC.

Group TPR follows the pure-group rule: a group holding videos of a single
device scores ``100 * count / total videos of that device``; a group mixing
devices scores 0. ``majority=True`` scores mixed groups by their unique
predominant device instead (0 when no device prevails).
"""
import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateLabelsError, FormatError, LabelError
from .similarity import SimilarityMatrix

GroundTruth = Mapping[str, str]


@dataclass
class EvalReport:
    group_tpr: List[float]
    average_tpr: float
    roc: List[Tuple[float, float]] = field(default_factory=list)
    auc: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "group_tpr": [round(v, 1) for v in self.group_tpr],
            "average_tpr": round(self.average_tpr, 1),
            "auc": self.auc,
            "n_groups": len(self.group_tpr),
        }


def read_labels_csv(path) -> Dict[str, str]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["video_id", "device_id"]:
            raise FormatError(f"{path}: header must be 'video_id,device_id'")
        truth = {}
        for row in reader:
            if not row:
                continue
            if len(row) < 2:
                raise FormatError(f"{path}: short row {row}")
            truth[row[0].strip()] = row[1].strip()
    return truth


def write_labels_csv(path, truth: Mapping[str, str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["video_id", "device_id"])
        for vid, dev in truth.items():
            w.writerow([vid, dev])


def _devices(cluster: Iterable[str], truth: GroundTruth) -> Counter:
    try:
        return Counter(truth[v] for v in cluster)
    except KeyError as exc:
        raise LabelError(f"video {exc.args[0]!r} has no ground-truth label") from None


def group_tpr(cluster: Iterable[str], truth: GroundTruth, majority: bool = False,
              fixed_total: Optional[int] = None) -> Fraction:
    """TPR of one group, in percent, as an exact fraction.

    :param fixed_total: divide by this instead of the device's true video count
    """
    counts = _devices(cluster, truth)
    if not counts:
        raise LabelError("empty cluster")
    if len(counts) == 1:
        device, hits = next(iter(counts.items()))
    elif majority:
        (device, hits), (_, runner_up) = counts.most_common(2)
        if hits == runner_up:
            return Fraction(0)
    else:
        return Fraction(0)
    total = fixed_total if fixed_total is not None else sum(1 for d in truth.values() if d == device)
    return Fraction(100 * hits, total)


def average_tpr(clusters: Sequence[Iterable[str]], truth: GroundTruth, majority: bool = False,
                fixed_total: Optional[int] = None) -> Fraction:
    tprs = [group_tpr(c, truth, majority, fixed_total) for c in clusters]
    if not tprs:
        raise LabelError("no clusters")
    return sum(tprs, Fraction(0)) / len(tprs)


def pair_scores(sim: SimilarityMatrix, truth: GroundTruth) -> Tuple[np.ndarray, np.ndarray]:
    """Upper-triangle correlations and same-device flags."""
    devices = []
    for vid in sim.ids:
        if vid not in truth:
            raise LabelError(f"video {vid!r} has no ground-truth label")
        devices.append(truth[vid])
    devices = np.array(devices)
    iu = np.triu_indices(len(sim.ids), k=1)
    return sim.values[iu], devices[iu[0]] == devices[iu[1]]


def roc_curve(scores: np.ndarray, positive: np.ndarray) -> List[Tuple[float, float]]:
    """ROC points sweeping a threshold down through every distinct score.

    Tied scores form a single step, so the trapezoid over a tie is the
    half-credit diagonal.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError("ROC needs at least one same-device and one cross-device pair")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = positive[order]
    tp = np.cumsum(p)
    fp = np.cumsum(~p)
    last = np.r_[np.nonzero(s[1:] != s[:-1])[0], len(s) - 1]
    points = [(0.0, 0.0)]
    points += [(fp[i] / n_neg, tp[i] / n_pos) for i in last]
    return [(float(x), float(y)) for x, y in points]


def trapezoid_auc(points: Sequence[Tuple[float, float]]) -> float:
    pts = np.asarray(points, dtype=np.float64)
    return float(np.sum(np.diff(pts[:, 0]) * (pts[1:, 1] + pts[:-1, 1]) / 2.0))


def roc_auc(sim: SimilarityMatrix, truth: GroundTruth) -> Tuple[List[Tuple[float, float]], float]:
    scores, positive = pair_scores(sim, truth)
    points = roc_curve(scores, positive)
    return points, trapezoid_auc(points)


def evaluate(clusters: Sequence[Sequence[str]], truth: GroundTruth,
             sim: Optional[SimilarityMatrix] = None, majority: bool = False,
             fixed_total: Optional[int] = None) -> EvalReport:
    ids = [v for c in clusters for v in c]
    if len(ids) != len(set(ids)):
        raise LabelError("clusters overlap")
    if not clusters:
        raise LabelError("no clusters")
    tprs = [group_tpr(c, truth, majority, fixed_total) for c in clusters]
    avg = sum(tprs, Fraction(0)) / len(tprs)
    report = EvalReport([float(t) for t in tprs], float(avg))
    if sim is not None:
        report.roc, report.auc = roc_auc(sim, truth)
    return report


def write_report_json(path, report: EvalReport) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_roc_csv(path, points: Sequence[Tuple[float, float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr"])
        for x, y in points:
            w.writerow(["%.9g" % x, "%.9g" % y])
