import json

import numpy as np
import pytest

import dtg.cli
from dtg.cli import main
from dtg.model import StudentEncoder, save_student
from dtg.trainer import NumericAbortError


def _config_doc(out_dir, **train_overrides):
    train = {"epochs": 2, "K": 4, "batch_size": 4, "d": 6, "h": 8,
             "milestones": []}
    train.update(train_overrides)
    return {"seed": 0,
            "corpus": {"num_classes": 2, "videos_per_class": 3,
                       "frames_per_video": 8, "frame_dim": 8, "signal_dim": 4,
                       "video_spread": 1.0, "frame_noise": 0.3},
            "train": train,
            "out_dir": str(out_dir)}


def _write_config(tmp_path, doc, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["pretrain", "--config", str(tmp_path / "no.json")]) == 2
    assert "error" in capsys.readouterr().err
    assert not (tmp_path / "no.json").exists()


def test_malformed_config_exits_2(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{broken")
    assert main(["pretrain", "--config", str(path)]) == 2


def test_unknown_config_key_exits_2(tmp_path):
    doc = _config_doc(tmp_path / "run")
    doc["mystery"] = 1
    assert main(["pretrain", "--config", _write_config(tmp_path, doc)]) == 2


def test_missing_corpus_file_exits_3(tmp_path):
    doc = _config_doc(tmp_path / "run")
    doc["corpus"] = str(tmp_path / "absent.dtgc")
    assert main(["pretrain", "--config", _write_config(tmp_path, doc),
                 "--quiet"]) == 3


def test_corrupted_corpus_exits_3(tmp_path):
    doc = _config_doc(tmp_path / "gen")
    cfg = _write_config(tmp_path, doc)
    assert main(["gen-data", "--config", cfg, "--quiet"]) == 0
    corpus_file = tmp_path / "gen" / "corpus.dtgc"
    blob = bytearray(corpus_file.read_bytes())
    blob[50] ^= 0xFF
    corpus_file.write_bytes(bytes(blob))
    doc2 = _config_doc(tmp_path / "run")
    doc2["corpus"] = str(corpus_file)
    assert main(["pretrain", "--config", _write_config(tmp_path, doc2, "c2.json"),
                 "--quiet"]) == 3


def test_numeric_abort_exits_4(tmp_path, monkeypatch):
    def boom(config, corpus, bank):
        raise NumericAbortError("non-finite loss at epoch 0, batch 1")
    monkeypatch.setattr(dtg.cli, "pretrain", boom)
    cfg = _write_config(tmp_path, _config_doc(tmp_path / "run"))
    assert main(["pretrain", "--config", cfg, "--quiet"]) == 4


def test_degenerate_features_exit_4(tmp_path):
    # a checkpoint that maps every video to one point: overlap is undefined
    zeros = lambda *s: np.zeros(s)
    enc = StudentEncoder(W1=zeros(8, 8), b1=zeros(8), W2=zeros(8, 8),
                         b2=zeros(8), W3=zeros(6, 8), b3=np.ones(6))
    ckpt = tmp_path / "flat.dtgm"
    save_student(ckpt, enc)
    cfg = _write_config(tmp_path, _config_doc(tmp_path / "run"))
    assert main(["probe", "--config", cfg, "--checkpoint", str(ckpt),
                 "--quiet"]) == 4


def test_gen_data_writes_corpus_and_config(tmp_path):
    out = tmp_path / "gen"
    cfg = _write_config(tmp_path, _config_doc(out))
    assert main(["gen-data", "--config", cfg, "--quiet"]) == 0
    assert (out / "corpus.dtgc").is_file()
    doc = json.loads((out / "config.json").read_text())
    assert doc["seed"] == 0
    assert doc["corpus"]["num_classes"] == 2


def test_pretrain_artifacts_and_seed_override(tmp_path):
    out = tmp_path / "run"
    cfg = _write_config(tmp_path, _config_doc(out))
    assert main(["pretrain", "--config", cfg, "--seed", "9", "--quiet"]) == 0
    for name in ("checkpoint.dtgm", "report.json", "epochs.csv", "config.json"):
        assert (out / name).is_file(), name
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 9  # the override, not the config value
    assert report["config"]["seed"] == 9
    assert json.loads((out / "config.json").read_text())["seed"] == 9


def test_pretrain_reruns_byte_identical(tmp_path):
    out = tmp_path / "run"
    cfg = _write_config(tmp_path, _config_doc(out))
    names = ("checkpoint.dtgm", "report.json", "epochs.csv", "config.json")
    assert main(["pretrain", "--config", cfg, "--seed", "1", "--quiet"]) == 0
    first = {name: (out / name).read_bytes() for name in names}
    assert main(["pretrain", "--config", cfg, "--seed", "1", "--quiet"]) == 0
    for name in names:
        assert (out / name).read_bytes() == first[name], name


def test_probe_artifacts_self_describing(tmp_path):
    run = tmp_path / "run"
    cfg = _write_config(tmp_path, _config_doc(run))
    assert main(["pretrain", "--config", cfg, "--quiet"]) == 0
    probe_out = tmp_path / "probe"
    assert main(["probe", "--config", cfg, "--checkpoint",
                 str(run / "checkpoint.dtgm"), "--out", str(probe_out),
                 "--quiet"]) == 0
    probe = json.loads((probe_out / "probe.json").read_text())
    assert 0.0 <= probe["top1"] <= 1.0
    assert probe["seed"] == 0
    assert probe["config"]["train"]["epochs"] == 2
    assert "knn_top1" in probe
    overlap = json.loads((probe_out / "overlap.json").read_text())
    assert overlap["config"]["seed"] == 0
    proj = (probe_out / "projection.csv").read_text().splitlines()
    assert proj[0].startswith("# seed=0")
    assert len(proj) == 2 + 6  # comment, header, one row per video


def test_train_joint_resumes_from_checkpoint(tmp_path):
    pre = tmp_path / "pre"
    cfg_pre = _write_config(tmp_path, _config_doc(pre), "pre.json")
    assert main(["pretrain", "--config", cfg_pre, "--quiet"]) == 0
    joint = tmp_path / "joint"
    cfg_joint = _write_config(tmp_path, _config_doc(joint), "joint.json")
    assert main(["train-joint", "--config", cfg_joint, "--init",
                 str(pre / "checkpoint.dtgm"), "--quiet"]) == 0
    report = json.loads((joint / "report.json").read_text())
    assert report["epochs"][-1]["ce_loss"] is not None


def test_report_aggregates_runs(tmp_path):
    for seed in ("1", "2"):
        run = tmp_path / f"run{seed}"
        cfg = _write_config(tmp_path, _config_doc(run), f"c{seed}.json")
        assert main(["pretrain", "--config", cfg, "--seed", seed, "--quiet"]) == 0
        assert main(["probe", "--config", cfg, "--seed", seed, "--checkpoint",
                     str(run / "checkpoint.dtgm"), "--out", str(run),
                     "--quiet"]) == 0
    out = tmp_path / "summary"
    assert main(["report", "--runs", str(tmp_path / "run1"),
                 str(tmp_path / "run2"), "--out", str(out), "--quiet"]) == 0
    lines = (out / "summary.csv").read_text().splitlines()
    assert lines[0].startswith("# runs=")
    assert lines[1] == "metric,mean,std,n"
    rows = {r.split(",")[0]: r.split(",")[1:] for r in lines[2:]}
    assert set(rows) >= {"top1", "knn_top1", "class_overlap",
                         "final_contrastive_loss"}
    tops = [json.loads((tmp_path / f"run{s}" / "probe.json").read_text())["top1"]
            for s in ("1", "2")]
    assert float(rows["top1"][0]) == pytest.approx(np.mean(tops), abs=1e-12)
    assert float(rows["top1"][1]) == pytest.approx(np.std(tops, ddof=1), abs=1e-12)
    assert rows["top1"][2] == "2"


def test_report_missing_run_dir_exits_3(tmp_path):
    assert main(["report", "--runs", str(tmp_path / "ghost"), "--quiet"]) == 3
