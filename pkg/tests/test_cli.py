"""Command line interface: parsing, exit codes, one end-to-end report run."""

import json

import pytest

from conftest import toy_doc
from kerrcat.cli import build_parser, main
from kerrcat.config import MODES
from kerrcat.io import read_json


def test_parser_modes():
    parser = build_parser()
    for mode in MODES:
        args = parser.parse_args([mode, "--preset", "fig1"])
        assert args.mode == mode and args.preset == "fig1"
    args = parser.parse_args(["sweep", "--config", "x.json", "--out", "d",
                              "--workers", "3"])
    assert args.config == "x.json" and args.out == "d" and args.workers == 3
    with pytest.raises(SystemExit):
        parser.parse_args(["sweep"])  # --config/--preset required
    with pytest.raises(SystemExit):
        parser.parse_args(["sweep", "--config", "a", "--preset", "b"])
    with pytest.raises(SystemExit):
        parser.parse_args(["flop", "--preset", "fig1"])


def test_unknown_preset_exits_2(capsys):
    rc = main(["sweep", "--preset", "fig9"])
    assert rc == 2
    err = capsys.readouterr().err
    assert "fig9" in err and "fig1" in err  # lists what is available


def test_bad_config_exits_2(tmp_path, capsys):
    doc = toy_doc(fock_dims=40)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    rc = main(["sweep", "--config", str(path)])
    assert rc == 2
    assert "fock_dims" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path, capsys):
    rc = main(["sweep", "--config", str(tmp_path / "nope.json")])
    assert rc == 2
    assert "nope.json" in capsys.readouterr().err


def test_classify_run_exit_0(tmp_path, capsys):
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(toy_doc()))
    out = tmp_path / "report"
    rc = main(["classify", "--config", str(path), "--out", str(out)])
    assert rc == 0
    assert "classify" in capsys.readouterr().out
    assert (out / "localization.csv").exists()
    assert (out / "localization.svg").exists()
    cls = read_json(out / "classification.json")
    assert cls["n_chaotic"] >= 0
    manifest = read_json(out / "manifest.json")
    assert manifest["all_ok"] and manifest["mode"] == "classify"


def test_failing_sweep_exits_1(tmp_path, capsys):
    doc = toy_doc(calibration={"strict": True, "max_iter": 1,
                               "gap_rtol": 1e-15})
    path = tmp_path / "strict.json"
    path.write_text(json.dumps(doc))
    rc = main(["sweep", "--config", str(path), "--out",
               str(tmp_path / "run")])
    assert rc == 1
    out = capsys.readouterr().out
    assert "FAILED at p1" in out
