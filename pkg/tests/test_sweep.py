"""Sweep orchestration: passes, artifacts, determinism, fail-soft records."""

import hashlib
import os
import time

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import toy_doc
from kerrcat.classical import lobe_area
from kerrcat.config import validate_config
from kerrcat.errors import ConfigError
from kerrcat.io import load_checkpoint, read_csv, read_json
from kerrcat.sweep import run_curve, run_sweep


def _tree_digest(root):
    """{relative path: sha256} over every file under root."""
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in files:
            p = os.path.join(dirpath, name)
            rel = os.path.relpath(p, root)
            with open(p, "rb") as fh:
                out[rel] = hashlib.sha256(fh.read()).hexdigest()
    return out


def test_manifest_and_artifacts(toy_sweep):
    cfg, outdir, manifest = toy_sweep
    assert manifest["all_ok"]
    assert manifest["mode"] == "sweep"
    assert manifest["stages"] == ["p1", "p2", "p3"]
    assert manifest["config_hash"] == cfg.config_hash
    assert [s["index"] for s in manifest["k_status"]] == [0, 1]
    for s in manifest["k_status"]:
        assert s["ok"] and s["failed_stage"] is None and s["error"] is None
    # two points cannot anchor the three-point prefactor fit
    assert manifest["fit"]["fitted"] is False
    for name in ("manifest.json", "floquet.csv", "cat.csv", "spectrum.csv",
                 "curve.svg", "localization.svg", "localization_k000.csv",
                 "localization_k001.csv", "island_k000.json",
                 "island_k001.json"):
        assert (outdir / name).exists(), name
    assert read_json(outdir / "manifest.json") == manifest


def test_floquet_table(toy_sweep):
    cfg, outdir, _ = toy_sweep
    t = read_csv(outdir / "floquet.csv")
    assert_allclose(t["K"], cfg.k_grid, rtol=0.0)
    assert_allclose(t["eps2_over_K"], 4.0, rtol=0.0)
    assert_allclose(t["delta_over_K"], 0.6, rtol=0.0)
    # regular toy point: driven splitting tracks the effective one
    assert np.all(np.abs(t["dE_floquet_over_K"] / t["dE_effective_over_K"]
                         - 1.0) < 0.05)
    assert np.all(t["unitarity_defect"] < 1e-8)
    assert np.all(t["fidelity0"] > 0.9) and np.all(t["fidelity1"] > 0.9)
    assert np.all(t["n_unmatched"] >= 0.0)


def test_cat_table_lobe_source(toy_sweep):
    cfg, outdir, _ = toy_sweep
    t = read_csv(outdir / "cat.csv")
    assert np.all(t["N_ch"] == 0.0)
    assert np.all(t["gamma0"] == 0.0)
    assert np.all(t["dE_fgr_over_K"] == 0.0)
    assert np.all(t["t_H_flag"] == 1.0)  # zero leak never beats t_H
    for i, k in enumerate(cfg.k_grid):
        assert_allclose(t["A"][i], lobe_area(cfg.params(k)), rtol=1e-12)
    # no fit: the semiclassical column and prefactor stay NaN
    assert np.all(np.isnan(t["c0"]))
    assert np.all(np.isnan(t["dE_semiclassical_over_K"]))
    ij = read_json(outdir / "island_k000.json")
    assert ij["boundary_source"] == "lobe"
    assert_allclose(ij["A"], t["A"][0], rtol=1e-15)


def test_spectrum_table(toy_sweep):
    cfg, outdir, _ = toy_sweep
    t = read_csv(outdir / "spectrum.csv")
    assert t["index"].size == cfg.fock_dim
    assert np.all(np.diff(t["energy"]) <= 0.0)  # descending from the top
    assert set(np.unique(t["parity"])) <= {-1.0, 1.0}
    # top doublet of the toy spectrum is split but close
    assert abs(t["energy"][0] - t["energy"][1]) < 0.1 * abs(t["energy"][0])


def test_records_and_checkpoints(toy_sweep):
    cfg, outdir, _ = toy_sweep
    rec = read_json(outdir / "records" / "k000.json")
    assert rec["config_hash"] == cfg.config_hash
    assert rec["status"] == {"p1": "ok", "p2": "ok", "p3": "ok"}
    assert rec["calibration"]["converged"]
    assert set(rec["drive"]) >= {"omega0", "omegad", "Omegad", "g3", "g4"}
    u, tau, h = load_checkpoint(outdir / "checkpoints" / "k000.ckpt",
                                expect_hash=cfg.config_hash)
    assert u.shape == (cfg.fock_dim, cfg.fock_dim)
    assert_allclose(tau, rec["tau"], rtol=1e-15)
    defect = np.abs(u.conj().T @ u - np.eye(cfg.fock_dim)).max()
    assert defect < 1e-8
    modes = np.load(outdir / "arrays" / "k000_modes.npy")
    assert modes.shape[0] == cfg.fock_dim


def test_idempotent_rerun_is_fast_and_identical(toy_sweep):
    cfg, outdir, manifest = toy_sweep
    before = _tree_digest(outdir)
    t0 = time.monotonic()
    again = run_sweep(cfg, output_dir=str(outdir))
    elapsed = time.monotonic() - t0
    assert again == manifest
    assert _tree_digest(outdir) == before
    assert elapsed < 10.0  # skip-if-ok must not recompute the propagators


def test_foreign_hash_refused(toy_sweep, tmp_path):
    cfg, outdir, _ = toy_sweep
    other = validate_config(toy_doc(g3=0.019))
    with pytest.raises(ConfigError, match="refusing to mix"):
        run_sweep(other, output_dir=str(outdir))
    before = _tree_digest(outdir)
    assert _tree_digest(outdir) == before


def test_parallel_matches_serial(toy_sweep, tmp_path):
    cfg, outdir, _ = toy_sweep
    par = tmp_path / "parallel"
    manifest = run_sweep(cfg, output_dir=str(par), workers=2)
    assert manifest["all_ok"]
    assert _tree_digest(par) == _tree_digest(outdir)


def test_curve_mode(tmp_path):
    cfg = validate_config(toy_doc(mode="curve"))
    manifest = run_curve(cfg, output_dir=str(tmp_path / "curve"))
    assert manifest["all_ok"]
    assert manifest["mode"] == "curve"
    assert manifest["stages"] == ["p1", "p2"]
    out = tmp_path / "curve"
    assert (out / "floquet.csv").exists()
    assert (out / "curve.svg").exists()
    assert not (out / "cat.csv").exists()
    assert not (out / "localization.svg").exists()
    rec = read_json(out / "records" / "k000.json")
    assert rec["status"] == {"p1": "ok", "p2": "ok"}


def test_fail_soft_records(tmp_path):
    doc = toy_doc(calibration={"strict": True, "max_iter": 1,
                               "gap_rtol": 1e-15})
    cfg = validate_config(doc)
    manifest = run_sweep(cfg, output_dir=str(tmp_path / "failing"))
    assert manifest["all_ok"] is False
    for s in manifest["k_status"]:
        assert not s["ok"]
        assert s["failed_stage"] == "p1"
        assert "calibration" in s["error"] or "gap" in s["error"]
    out = tmp_path / "failing"
    assert (out / "manifest.json").exists()
    assert (out / "spectrum.csv").exists()  # static side still reported
    assert not (out / "floquet.csv").exists()
    rec = read_json(out / "records" / "k000.json")
    assert rec["status"]["p1"] == "failed"
