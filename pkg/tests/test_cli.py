import json

import numpy as np
import pytest

from anchortm.cli import main
from anchortm.fileio import read_matrix
from anchortm.pipeline import PipelineConfig, run_pipeline
from anchortm.errors import DomainError

SMALL = ["--n", "20", "--r", "3", "--p", "0.2", "--m", "3000", "--N", "60", "--merge-epsilon", "0.01"]


def test_stages_match_pipeline(tmp_path):
    d = str(tmp_path)
    assert main(["synth", *SMALL, "--seed", "3", "--out", f"{d}/s"]) == 0
    assert main(["gram", *SMALL, "--seed", "3", "--corpus", f"{d}/s/corpus.txt", "--out", f"{d}/g"]) == 0
    assert main(["anchors", *SMALL, "--seed", "3", "--gram", f"{d}/g/Q.txt", "--gram-meta", f"{d}/g/gram.json",
                 "--corpus", f"{d}/s/corpus.txt", "--out", f"{d}/anchors.json"]) == 0
    assert main(["recover", "--gram", f"{d}/g/Q.txt", "--gram-meta", f"{d}/g/gram.json",
                 "--anchors", f"{d}/anchors.json", "--out", f"{d}/rec"]) == 0
    assert main(["dirichlet", "--R", f"{d}/rec/R_hat.txt", "--out", f"{d}/alpha.json"]) == 0
    assert main(["eval", "--A-hat", f"{d}/rec/A_hat.txt", "--A-true", f"{d}/s/A_true.txt",
                 "--out", f"{d}/match.json"]) == 0
    assert main(["pipeline", *SMALL, "--seed", "3", "--out", f"{d}/p"]) == 0
    for name in ("A_hat.txt", "R_hat.txt"):
        np.testing.assert_array_equal(read_matrix(f"{d}/p/{name}"), read_matrix(f"{d}/rec/{name}"))
    metrics = json.load(open(f"{d}/p/metrics.json"))
    alpha = json.load(open(f"{d}/alpha.json"))
    assert metrics["alpha_hat"] == alpha["alpha_hat"]
    assert json.load(open(f"{d}/match.json"))["max_error"] == metrics["max_column_l1_error"]


def test_resume_from_saved_corpus(tmp_path):
    d = str(tmp_path)
    main(["synth", *SMALL, "--seed", "5", "--out", f"{d}/s"])
    main(["pipeline", *SMALL, "--seed", "5", "--out", f"{d}/p"])
    main(["pipeline", *SMALL, "--seed", "5", "--corpus", f"{d}/s/corpus.txt", "--out", f"{d}/q"])
    np.testing.assert_array_equal(read_matrix(f"{d}/p/A_hat.txt"), read_matrix(f"{d}/q/A_hat.txt"))


def test_metrics_deterministic(tmp_path):
    d = str(tmp_path)
    main(["pipeline", *SMALL, "--seed", "1", "--out", f"{d}/a"])
    main(["pipeline", *SMALL, "--seed", "1", "--out", f"{d}/b"])
    assert open(f"{d}/a/metrics.json", "rb").read() == open(f"{d}/b/metrics.json", "rb").read()
    manifest = json.load(open(f"{d}/a/manifest.json"))
    assert {"config", "seed", "versions", "timing_seconds"} <= set(manifest)


def test_exact_q_pipeline(capsys):
    assert main(["pipeline", "--exact-q", "--n", "25", "--r", "4", "--p", "0.1", "--seed", "2"]) == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["max_column_l1_error"] <= 1e-8
    assert metrics["R_error_l1"] <= 1e-8


def test_config_file_and_overrides(tmp_path, capsys):
    cfg = {"n": 15, "r": 2, "p": 0.3, "prior": {"kind": "dirichlet", "alpha": [1.0, 2.0]}, "exact_q": True}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert main(["pipeline", "--config", str(tmp_path / "c.json"), "--seed", "9"]) == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["seed"] == 9
    assert sorted(metrics["alpha_hat"]) == pytest.approx([1.0, 2.0])


def test_auto_m_echoed(capsys):
    assert main(["pipeline", "--exact-q", "--auto-m", "--n", "15", "--r", "2", "--p", "0.3"]) == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["required_documents_advisory"] >= 1


def test_exit_codes(tmp_path, capsys):
    d = str(tmp_path)
    main(["synth", *SMALL, "--seed", "3", "--out", f"{d}/s"])
    main(["gram", *SMALL, "--seed", "3", "--corpus", f"{d}/s/corpus.txt", "--out", f"{d}/g"])
    base = ["anchors", "--r", "3", "--p", "0.2", "--gram", f"{d}/g/Q.txt", "--gram-meta", f"{d}/g/gram.json"]
    assert main([*base, "--row-epsilon", "0.01", "--strict", "--out", f"{d}/x.json"]) == 2
    assert main([*base, "--row-epsilon", "0.0001", "--gamma", "0.1", "--strict", "--r", "6",
                 "--out", f"{d}/x.json"]) == 3
    assert "error:" in capsys.readouterr().err


def test_singular_recover_exit_code(tmp_path):
    d = str(tmp_path)
    np.savetxt(f"{d}/Q.txt", np.ones((3, 3)), header="3 3", comments="")
    (tmp_path / "a.json").write_text(json.dumps({"word_indices": [0, 1], "epsilon": 0.0, "gamma": 1.0}))
    assert main(["recover", "--gram", f"{d}/Q.txt", "--anchors", f"{d}/a.json", "--out", d]) == 4


def test_stage_name_attached():
    cfg = PipelineConfig(n=6, r=3, p=0.3, exact_q=True, gamma=0.001, row_epsilon=0.01, strict=True)
    with pytest.raises(DomainError) as err:
        run_pipeline(cfg)
    assert err.value.stage == "anchors"
    assert str(err.value).startswith("[anchors]")


def test_config_validation():
    with pytest.raises(DomainError):
        PipelineConfig(epsilon=1.5)
    with pytest.raises(DomainError):
        PipelineConfig(m=0)
    with pytest.raises(DomainError):
        PipelineConfig.from_record({"bogus": 1})


def test_sweep_records(tmp_path):
    out = tmp_path / "sweep.json"
    assert main(["sweep", "--n", "15", "--r", "2", "--p", "0.3", "--N", "40",
                 "--ms", "500", "4000", "--seeds", "2", "--out", str(out)]) == 0
    text = out.read_text()
    assert "NaN" not in text
    rec = json.loads(text)
    assert [s["m"] for s in rec["summary"]] == [500, 4000]
    assert len(rec["rows"]) == 4
    for row in rec["rows"]:
        assert (row["status"] == "ok") == (row["max_error"] is not None)
    assert all(r["status"] == "ok" for r in rec["rows"] if r["m"] == 4000)
