import json

import numpy as np

from qsrevents.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main
from qsrevents.config import CONFIG_ENV_VAR
from qsrevents.pipeline import KINDS, read_feature_csv, save_session
from qsrevents.sim import ScenarioSpec, generate


def session_file(tmp_path, verb="roll", prep="past", frames=60, name="s.json", **kw):
    duration = (frames - 1) / 24
    spec = ScenarioSpec(verb, prep, duration=duration, reach_time=min(20 / 24, duration / 3), noise=0.0,
                        dropout=0.0, **kw)
    syn = generate(spec, session_id=name.split(".")[0])
    assert len(syn.session.times) == frames
    path = tmp_path / name
    save_session(syn.session, path)
    return path


def test_generate_deterministic_bytes(tmp_path):
    assert main(["generate", "--n", "6", "--seed", "1", "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["generate", "--n", "6", "--seed", "1", "--out", str(tmp_path / "b")]) == EXIT_OK
    files = sorted(p.name for p in (tmp_path / "a").glob("s*.json"))
    assert len(files) == 6
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["command"] == "generate" and manifest["seed"] == 1
    assert len(manifest["outputs"]) == 6 and manifest["config_hash"]


def test_generate_guards(tmp_path, capsys):
    assert main(["generate", "--n", "4", "--out", str(tmp_path / "x")]) == EXIT_USAGE
    assert "at least 5" in capsys.readouterr().err
    out = tmp_path / "full"
    out.mkdir()
    (out / "keep.txt").write_text("x")
    assert main(["generate", "--n", "5", "--out", str(out)]) == EXIT_USAGE
    assert main(["generate", "--n", "5", "--out", str(out), "--force"]) == EXIT_OK


def test_extract_segments(tmp_path):
    path = session_file(tmp_path)
    out = tmp_path / "feat"
    assert main(["extract", "--kind", "2D-Qual", "--in", str(path), "--out", str(out)]) == EXIT_OK
    files = sorted(out.glob("s_seg*_2D-Qual.csv"))
    assert len(files) == 3
    for f in files:
        assert read_feature_csv(f.read_text()).values.shape[0] == 20
    labels = (out / "labels.csv").read_text().splitlines()
    assert len(labels) == 4 and labels[1].startswith("s,0,None")


def test_extract_all_kinds(tmp_path):
    path = session_file(tmp_path, frames=40)
    out = tmp_path / "feat"
    assert main(["extract", "--kind", "all", "--in", str(path), "--out", str(out)]) == EXIT_OK
    for seg in (0, 1):
        assert sorted(p.name for p in out.glob(f"s_seg{seg:03d}_*.csv")) == sorted(
            f"s_seg{seg:03d}_{k}.csv" for k in KINDS)


def test_extract_unknown_kind(tmp_path, capsys):
    path = session_file(tmp_path, frames=20)
    assert main(["extract", "--kind", "4D-Qual", "--in", str(path), "--out", str(tmp_path / "o")]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert all(k in err for k in KINDS)


def test_missing_input_is_data_error(tmp_path):
    assert main(["extract", "--kind", "3D-Raw", "--in", str(tmp_path / "nope"), "--out", str(tmp_path)]) == EXIT_DATA


def test_usage_errors(capsys):
    assert main([]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["gradcheck", "--model", "rnn"]) == EXIT_USAGE
    assert main(["--help"]) == EXIT_OK


def test_train_and_eval(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    assert main(["generate", "--n", "5", "--seed", "2", "--out", str(corpus)]) == EXIT_OK
    ckpt = tmp_path / "m.json"
    args = ["train", "--kind", "2D-Event-Qual", "--in", str(corpus), "--out", str(ckpt), "--epochs", "3",
            "--hidden", "8", "--report", str(tmp_path / "r.csv")]
    assert main(args) == EXIT_OK
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 4
    first = ckpt.read_bytes()
    assert main(args) == EXIT_OK
    assert ckpt.read_bytes() == first
    assert main(["eval", "--checkpoint", str(ckpt), "--in", str(corpus), "--out", str(tmp_path / "m.out")]) == EXIT_OK
    metrics = json.loads((tmp_path / "m.out").read_text())
    assert 0 <= metrics["all_slot_precision"] <= 1
    assert "all-slot precision" in capsys.readouterr().out
    assert main(["train", "--kind", "3D-Raw,2D-Qual", "--in", str(corpus), "--out", str(ckpt)]) == EXIT_USAGE


def test_xval_two_kinds(tmp_path, capsys):
    out = tmp_path / "xv"
    args = ["xval", "--n", "5", "--seed", "3", "--kinds", "3D-Raw,2D-Qual", "--grid", "lr=0.1;hidden=8",
            "--lstm-epochs", "1", "--out", str(out)]
    assert main(args) == EXIT_OK
    rows = (out / "xval.csv").read_text().splitlines()
    assert len(rows) == 3
    assert [r.split(",")[0] for r in rows[1:]] == ["3D-Raw", "2D-Qual"]
    text = capsys.readouterr().out
    assert "per-slot precision" in text and "±" in text
    assert main(args[:-2] + ["--grid", "lr=0.1;width=3"]) == EXIT_USAGE


def test_gradcheck_pass_and_negative_control(capsys):
    assert main(["gradcheck", "--model", "mlp", "--seed", "0"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS" in out and "/200 sampled coordinates" in out
    assert main(["gradcheck", "--model", "mlp", "--perturb", "0.01"]) == EXIT_VERIFY
    assert "FAIL" in capsys.readouterr().out


def test_plot_roll_and_static(tmp_path):
    roll = session_file(tmp_path, "roll", "past", name="roll.json")
    assert main(["plot", "--session", str(roll), "--factor-model", "O2", "--out", str(tmp_path / "r.svg")]) == EXIT_OK
    svg = (tmp_path / "r.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg
    assert all(f"O2.c{k}" in svg for k in range(4))
    first = (tmp_path / "r.svg").read_bytes()
    assert main(["plot", "--session", str(roll), "--factor-model", "O2", "--out", str(tmp_path / "r.svg")]) == EXIT_OK
    assert (tmp_path / "r.svg").read_bytes() == first
    still = session_file(tmp_path, "slide", "toward", name="still.json", speed=0.0)
    assert main(["plot", "--session", str(still), "--factor-model", "O1", "--out", str(tmp_path / "s.svg")]) == EXIT_OK


def test_plot_bad_path(tmp_path, capsys):
    code = main(["plot", "--session", str(tmp_path / "missing.json"), "--factor-model", "O1",
                 "--out", str(tmp_path / "x.svg")])
    assert code == EXIT_DATA
    assert "no such session file" in capsys.readouterr().err


def test_config_file_and_overrides(tmp_path, monkeypatch):
    path = session_file(tmp_path, frames=20)
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# coarser distance bins\nbin_width = 0.1\n")
    monkeypatch.setenv(CONFIG_ENV_VAR, str(cfg))
    out = tmp_path / "o"
    assert main(["--set", "max_bins=10", "extract", "--kind", "2D-Qual", "--in", str(path), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert "bin_width = 0.1" in manifest["config"] and "max_bins = 10" in manifest["config"]
    fm = read_feature_csv(next(out.glob("*_2D-Qual.csv")).read_text())
    assert max(int(s) for _, f, s in fm.legend if f.startswith("argd")) == 9
    cfg.write_text("no_such_key = 1\n")
    assert main(["extract", "--kind", "2D-Qual", "--in", str(path), "--out", str(out)]) == EXIT_DATA


def test_session_cli_matches_module(tmp_path):
    path = session_file(tmp_path, frames=20)
    out = tmp_path / "o"
    assert main(["extract", "--kind", "3D-Raw", "--in", str(path), "--out", str(out)]) == EXIT_OK
    fm = read_feature_csv((out / "s_seg000_3D-Raw.csv").read_text())
    assert np.all(np.isfinite(fm.values)) and fm.values.shape == (20, 36)
