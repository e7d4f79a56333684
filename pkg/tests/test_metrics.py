import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import ENHANCED_COUNTS, MASK_ONLY_COUNTS, confusion_to_clusters, mann_whitney_auc

from vidprnu.errors import DegenerateLabelsError, FormatError, LabelError
from vidprnu.metrics import (average_tpr, evaluate, group_tpr, read_labels_csv, roc_auc,
                             roc_curve, trapezoid_auc, write_labels_csv, write_report_json,
                             write_roc_csv)
from vidprnu.similarity import SimilarityMatrix


def test_pure_group_tpr():
    clusters, truth = confusion_to_clusters({"A": [5, 5], "B": [0, 4]}, 2)
    assert group_tpr(clusters[0], truth) == 50
    # mixed group scores 0 under the default rule
    assert group_tpr(clusters[1], truth) == 0


def test_majority_variant():
    clusters, truth = confusion_to_clusters({"A": [6, 4], "B": [3, 0], "C": [3, 0]}, 2)
    assert group_tpr(clusters[0], truth, majority=True) == 60
    assert group_tpr(clusters[0], truth) == 0
    # no unique predominant device
    clusters, truth = confusion_to_clusters({"A": [3], "B": [3]}, 1)
    assert group_tpr(clusters[0], truth, majority=True) == 0


def test_fixed_total_and_exactness():
    clusters, truth = confusion_to_clusters({"A": [5, 3]}, 2)
    assert group_tpr(clusters[0], truth) == Fraction(125, 2)
    assert group_tpr(clusters[0], truth, fixed_total=10) == 50
    assert average_tpr(clusters, truth) == 50


def test_unlabelled_and_empty():
    with pytest.raises(LabelError):
        group_tpr(["x"], {})
    with pytest.raises(LabelError):
        group_tpr([], {"x": "A"})
    with pytest.raises(LabelError):
        evaluate([], {"x": "A"})
    with pytest.raises(LabelError, match="overlap"):
        evaluate([["x"], ["x"]], {"x": "A"})


def test_table_shapes_are_consistent():
    for table in (ENHANCED_COUNTS, MASK_ONLY_COUNTS):
        widths = {len(r) for r in table.values()}
        assert len(widths) == 1
        _, truth = confusion_to_clusters(table, widths.pop())
        assert sum(1 for d in truth.values() if d == "M00") == 8


def test_roc_small_cases():
    assert trapezoid_auc(roc_curve([0.9, 0.8, 0.1], [True, True, False])) == 1.0
    assert trapezoid_auc(roc_curve([0.1, 0.2, 0.9], [True, True, False])) == 0.0
    assert trapezoid_auc(roc_curve([0.8, 0.4, 0.6, 0.2], [True, True, False, False])) == 0.75
    # all tied: the diagonal
    assert trapezoid_auc(roc_curve([0.5] * 4, [True, False, True, False])) == 0.5


def test_roc_points_are_monotone_and_end_at_one_one():
    pts = roc_curve([0.3, 0.3, 0.1, 0.7, 0.5], [True, False, True, False, True])
    assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
    xs, ys = zip(*pts)
    assert list(xs) == sorted(xs) and list(ys) == sorted(ys)
    # one point per distinct score
    assert len(pts) == 1 + 4


def test_roc_degenerate():
    with pytest.raises(DegenerateLabelsError):
        roc_curve([0.1, 0.2], [True, True])
    with pytest.raises(DegenerateLabelsError):
        roc_curve([0.1, 0.2], [False, False])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(-5, 5), st.booleans()), min_size=2, max_size=40))
def test_trapezoid_equals_mann_whitney(pairs):
    scores = [s / 4 for s, _ in pairs]
    positive = [p for _, p in pairs]
    if all(positive) or not any(positive):
        return
    assert trapezoid_auc(roc_curve(scores, positive)) == pytest.approx(
        mann_whitney_auc(scores, positive), abs=1e-12)


def _sim(ids, values):
    return SimilarityMatrix(tuple(ids), np.asarray(values, dtype=np.float64))


def test_roc_auc_over_pairs():
    sim = _sim("abcd", [[1, .9, .1, .2],
                        [.9, 1, .3, .0],
                        [.1, .3, 1, .8],
                        [.2, .0, .8, 1]])
    truth = {"a": "X", "b": "X", "c": "Y", "d": "Y"}
    _, auc = roc_auc(sim, truth)
    assert auc == 1.0
    with pytest.raises(LabelError):
        roc_auc(sim, {"a": "X"})


def test_evaluate_and_outputs(tmp_path):
    sim = _sim("abcd", [[1, .9, .1, .2],
                        [.9, 1, .3, .0],
                        [.1, .3, 1, .8],
                        [.2, .0, .8, 1]])
    truth = {"a": "X", "b": "X", "c": "Y", "d": "Y"}
    report = evaluate([["a", "b"], ["c"], ["d"]], truth, sim)
    assert report.group_tpr == [100.0, 50.0, 50.0]
    assert report.average_tpr == pytest.approx(200 / 3)
    assert report.auc == 1.0
    write_report_json(tmp_path / "r.json", report)
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc == {"auc": 1.0, "average_tpr": 66.7, "group_tpr": [100.0, 50.0, 50.0], "n_groups": 3}
    write_roc_csv(tmp_path / "roc.csv", report.roc)
    lines = (tmp_path / "roc.csv").read_text().splitlines()
    assert lines[0] == "fpr,tpr" and lines[1] == "0,0" and lines[-1] == "1,1"
    assert evaluate([["a", "b"], ["c", "d"]], truth).auc is None


def test_labels_csv(tmp_path):
    truth = {"v1": "D0", "v2": "D1"}
    write_labels_csv(tmp_path / "l.csv", truth)
    assert (tmp_path / "l.csv").read_text() == "video_id,device_id\nv1,D0\nv2,D1\n"
    assert read_labels_csv(tmp_path / "l.csv") == truth
    (tmp_path / "bad.csv").write_text("video,device\nv1,D0\n")
    with pytest.raises(FormatError):
        read_labels_csv(tmp_path / "bad.csv")
    (tmp_path / "bad.csv").write_text("video_id,device_id\nv1\n")
    with pytest.raises(FormatError):
        read_labels_csv(tmp_path / "bad.csv")


def test_mask_only_group_examples():
    clusters, truth = confusion_to_clusters(MASK_ONLY_COUNTS, 9)
    assert group_tpr(clusters[0], truth) == 50
    # G8 mixes M32, M17 and M00
    assert sorted({truth[v] for v in clusters[7]}) == ["M00", "M17", "M32"]
    assert group_tpr(clusters[7], truth) == 0


def test_complete_pure_groups_score_100():
    clusters, truth = confusion_to_clusters({"A": [4, 0], "B": [0, 6]}, 2)
    assert [group_tpr(c, truth) for c in clusters] == [100, 100]
    assert average_tpr(clusters, truth) == 100


def test_identically_distributed_scores_are_near_chance(rng):
    scores = rng.normal(size=4000)
    positive = rng.random(4000) < 0.3
    assert trapezoid_auc(roc_curve(scores, positive)) == pytest.approx(0.5, abs=0.03)
