import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from clutterseg import io
from clutterseg.cli import main
from clutterseg.core import BACKGROUND, Label


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("sep")
    assert main(["synth", "--preset", "separable", "--recordings", "5", "--seed", "10", "--out", str(d / "raw")]) == 0
    for p in sorted((d / "raw").glob("*.jsonl")):
        assert main(["relabel", "--in", str(p), "--out", str(d / "lab" / p.name)]) == 0
    return d / "lab"


def test_synth_bridge_has_ghosts(tmp_path, capsys):
    code, summary = run(capsys, "synth", "--preset", "bridge-guardrail", "--out", tmp_path / "b.jsonl")
    assert code == 0 and summary["true_source"]["mirror_ghost"] > 0
    assert summary["detections"] == sum(summary["true_source"].values())


def test_synth_same_seed_same_bytes(tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "synth", "--preset", "default", "--seed", 4, "--out", tmp_path / f"{name}.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_synth_config_file(tmp_path, capsys):
    cfg = tmp_path / "s.toml"
    cfg.write_text('duration = 0.3\n[[mounts]]\nsensor_id = 1\nx = 0.0\ny = 0.0\nyaw = 0.0\n')
    code, summary = run(capsys, "synth", cfg, "--out", tmp_path / "s.jsonl")
    assert code == 0 and summary["true_source"]["real_stationary"] == summary["detections"]


@pytest.mark.parametrize("body", ["duration = 0\n", "scan_interval = 0.1\n", "duration = 1.0\n[clutter]\nnoise_per_scan = -1\n"])
def test_synth_bad_config_exit_2(tmp_path, capsys, body):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(body)
    assert main(["synth", str(cfg), "--out", str(tmp_path / "x.jsonl")]) == 2
    assert "error:" in capsys.readouterr().err


def test_relabel_report(tmp_path, capsys):
    run(capsys, "synth", "--preset", "default", "--out", tmp_path / "r.jsonl")
    code, out = run(capsys, "relabel", "--in", tmp_path / "r.jsonl", "--out", tmp_path / "l.jsonl",
                    "--report", tmp_path / "rep.json")
    assert code == 0
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert abs(sum(rep["distribution"].values()) - 1) <= 1e-12
    assert rep["params"] == {"range_tol": 0.3, "az_tol_min": 2.0, "az_tol_max": 4.0,
                             "az_tol_max_angle": 60.0, "v_threshold": 0.5}


def test_relabel_zero_threshold(tmp_path, capsys):
    run(capsys, "synth", "--preset", "default", "--out", tmp_path / "r.jsonl")
    run(capsys, "relabel", "--in", tmp_path / "r.jsonl", "--out", tmp_path / "l.jsonl", "--v-thresh", 0)
    for s in io.read(tmp_path / "l.jsonl").scans:
        for d in s.detections:
            if d.original_annotation == BACKGROUND and d.v_comp != 0:
                assert d.label != Label.STATIONARY


def test_relabel_rejects_unannotated(tmp_path, capsys):
    run(capsys, "synth", "--preset", "default", "--out", tmp_path / "r.jsonl")
    lines = (tmp_path / "r.jsonl").read_text().splitlines()
    scan = json.loads(lines[1])
    for d in scan["detections"]:
        d.pop("annotation")
    (tmp_path / "u.jsonl").write_text("\n".join([lines[0], json.dumps(scan)]) + "\n")
    assert main(["relabel", "--in", str(tmp_path / "u.jsonl"), "--out", str(tmp_path / "o.jsonl")]) == 1


def test_missing_input_exit_1(tmp_path):
    assert main(["relabel", "--in", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o.jsonl")]) == 1


def test_train_eval_bench_plot(data_dir, tmp_path, capsys):
    model = tmp_path / "m.json"
    code, rep = run(capsys, "train", "--data", data_dir, "--net", "b-small", "--epochs", 2,
                    "--batch-size", 4, "--seeds", "1..2", "--model", model)
    assert code == 0
    per_seed = [r["val"]["mean_f1"] for r in rep["per_seed"]]
    assert rep["mean_f1"] == pytest.approx(np.mean(per_seed))
    assert [r["seed"] for r in rep["per_seed"]] == [1, 2]
    for r in rep["per_seed"]:
        assert r["val"]["mean_f1"] == r["log"][-1]["val_mean_f1"]
        # eval reproduces the logged final-epoch validation metrics
        code, ev = run(capsys, "eval", "--model", r["model"])
        assert code == 0 and ev["mean_f1"] == r["log"][-1]["val_mean_f1"]
        assert ev["confusion"] == r["val"]["confusion"]
    ckpt = tmp_path / "m-seed1.json"
    code, ev = run(capsys, "eval", "--model", ckpt, "--split", "all", "--csv", tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().startswith("truth")
    assert ev["latest_scan_coverage"] is True

    code, b = run(capsys, "bench", "--data", data_dir, "--model", ckpt, "--warmup", 2)
    assert code == 0 and set(b["point_counts"]) == {330}

    rec = sorted(data_dir.glob("*.jsonl"))[0]
    sid = io.read(rec).scans[-1].scan_id
    assert main(["plot", "--in", str(rec), "--scan-id", str(sid), "--out", str(tmp_path / "c.svg"),
                 "--mode", "confusion", "--model", str(ckpt)]) == 0
    n_markers = sum(1 for e in ET.parse(tmp_path / "c.svg").iter() if e.tag.endswith("circle"))
    assert n_markers == len(io.read(rec).scans[-1].detections)


def test_train_config_mismatch_on_resume(data_dir, tmp_path, capsys):
    model = tmp_path / "m.json"
    assert main(["train", "--data", str(data_dir), "--net", "b-small", "--epochs", "1", "--model", str(model)]) == 0
    capsys.readouterr()
    code = main(["train", "--data", str(data_dir), "--net", "b", "--epochs", "2", "--model", str(model),
                 "--resume", str(model)])
    assert code == 1


def test_eval_strategy_old_only_coverage(tmp_path, capsys):
    d = tmp_path / "d"
    run(capsys, "synth", "--preset", "default", "--recordings", "2", "--out", d / "raw")
    for p in sorted((d / "raw").glob("*.jsonl")):
        run(capsys, "relabel", "--in", p, "--out", d / "lab" / p.name)
    model = tmp_path / "a.json"
    code, _ = run(capsys, "train", "--data", d / "lab", "--variant", "a", "--net", "b-small", "--points", 1280,
                  "--window-ms", 300, "--strategy", "old-only", "--epochs", 0, "--model", model)
    assert code == 0
    code, ev = run(capsys, "eval", "--model", model, "--split", "all")
    assert ev["strategy"] == "old_only_random" and ev["latest_scan_coverage"] is True


def test_plot_labels_and_unknown_scan(tmp_path, capsys):
    run(capsys, "synth", "--preset", "default", "--out", tmp_path / "r.jsonl")
    run(capsys, "relabel", "--in", tmp_path / "r.jsonl", "--out", tmp_path / "l.jsonl")
    assert main(["plot", "--in", str(tmp_path / "l.jsonl"), "--scan-id", "20", "--window-ms", "300",
                 "--out", str(tmp_path / "p.svg")]) == 0
    assert (tmp_path / "p.svg").read_text().startswith("<svg")
    assert main(["plot", "--in", str(tmp_path / "l.jsonl"), "--scan-id", "99999", "--out", str(tmp_path / "q.svg")]) == 1


def test_plot_empty_scan(tmp_path, capsys):
    run(capsys, "synth", "--preset", "default", "--out", tmp_path / "r.jsonl")
    lines = (tmp_path / "r.jsonl").read_text().splitlines()
    scan = json.loads(lines[1])
    scan["detections"] = []
    (tmp_path / "e.jsonl").write_text("\n".join([lines[0], json.dumps(scan)]) + "\n")
    assert main(["plot", "--in", str(tmp_path / "e.jsonl"), "--scan-id", str(scan["scan_id"]),
                 "--out", str(tmp_path / "e.svg")]) == 0
    root = ET.parse(tmp_path / "e.svg").getroot()
    assert not [e for e in root.iter() if e.tag.endswith("circle")]
