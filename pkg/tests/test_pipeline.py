import json

import pytest

from vidprnu import synth
from vidprnu.errors import GapError, TooFewItemsError
from vidprnu.metrics import read_labels_csv
from vidprnu.pipeline import PipelineConfig, StageError, run_pipeline, videos_from_manifest


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    cfg = synth.SynthConfig(devices=3, videos_per_device=2, frames=5, width=96, height=80,
                            strength=0.15, seed=21)
    manifest = synth.generate_dataset(cfg, root)
    return root, manifest


def test_full_run_writes_every_artifact(dataset, tmp_path):
    root, manifest = dataset
    labels = read_labels_csv(root / "labels.csv")
    produced = run_pipeline(videos_from_manifest(manifest, root), PipelineConfig(), tmp_path, labels)
    for name in ("matrix", "clusters", "report", "roc"):
        assert produced[name].exists()
    report = json.loads((tmp_path / "report.json").read_text())
    assert {"average_tpr", "auc", "group_tpr"} <= set(report)
    assert report["average_tpr"] == 100.0 and report["auc"] == 1.0
    assert len(list((tmp_path / "fingerprints" / "raw").glob("*.vfp"))) == 6
    assert len(list((tmp_path / "fingerprints" / "alpha20").glob("*.vfp"))) == 6
    assert not list(tmp_path.rglob("*.partial"))


def test_alpha_sweep_names_outputs(dataset, tmp_path):
    root, manifest = dataset
    labels = read_labels_csv(root / "labels.csv")
    config = PipelineConfig(alphas=(2, 5, 7, 20, 50))
    run_pipeline(videos_from_manifest(manifest, root), config, tmp_path, labels)
    names = sorted(p.name for p in tmp_path.glob("report_*.json"))
    assert names == ["report_alpha2.json", "report_alpha20.json", "report_alpha5.json",
                     "report_alpha50.json", "report_alpha7.json"]


def test_raw_only_and_no_labels(dataset, tmp_path):
    root, manifest = dataset
    produced = run_pipeline(videos_from_manifest(manifest, root), PipelineConfig(enhancer=None),
                            tmp_path)
    assert "report" not in produced and produced["clusters"].exists()
    assert not (tmp_path / "fingerprints" / "alpha20").exists()


def test_single_video_stops_after_extract(dataset, tmp_path):
    root, manifest = dataset
    specs = videos_from_manifest(manifest, root)[:1]
    with pytest.raises(StageError) as err:
        run_pipeline(specs, PipelineConfig(), tmp_path)
    assert err.value.stage == "cluster"
    assert isinstance(err.value.cause, TooFewItemsError)
    assert not list(tmp_path.rglob("*.vfp"))


def test_failure_rolls_back(dataset, tmp_path):
    root, manifest = dataset
    specs = videos_from_manifest(manifest, root)
    broken = tmp_path / "broken"
    broken.mkdir()
    for i in (0, 2):
        (broken / f"frame_{i}.pgm").write_bytes((root / specs[0].frames_dir / f"frame_{i}.pgm").read_bytes())
    specs[3] = specs[3].__class__(specs[3].video_id, broken, specs[3].coeffs)
    out = tmp_path / "out"
    with pytest.raises(StageError) as err:
        run_pipeline(specs, PipelineConfig(), out)
    assert err.value.stage == "extract" and isinstance(err.value.cause, GapError)
    assert not [p for p in out.rglob("*") if p.is_file()]
