"""Configuration schema: validation, defaults, content hash."""

import json
import pytest

from conftest import toy_doc
from kerrcat.config import (MODES, RunConfig, fock_bound, load_config,
                            validate_config)
from kerrcat.errors import ConfigError


def test_defaults_filled_and_echo_canonical():
    cfg = validate_config(toy_doc())
    assert cfg.mode == "sweep"
    assert cfg["integrator"]["steps_per_period"] == 512
    assert cfg["cat"]["fgr_period"] == "tau"
    assert cfg["g4"] == 1e-8
    echo = cfg.echo()
    # echo is pure JSON and revalidates to the same document
    assert validate_config(echo).echo() == echo


def test_required_keys():
    for path in ("effective", "K_grid", "fock_dim", "g3"):
        doc = toy_doc()
        doc.pop(path)
        with pytest.raises(ConfigError, match="required|missing"):
            validate_config(doc)
    doc = toy_doc()
    doc["effective"].pop("delta_over_K")
    with pytest.raises(ConfigError, match="delta_over_K"):
        validate_config(doc)


def test_unknown_keys_rejected():
    doc = toy_doc()
    doc["fock_dims"] = 40
    with pytest.raises(ConfigError, match="fock_dims"):
        validate_config(doc)
    doc = toy_doc(integrator={"rel_tol": 1e-12, "abs_tl": 1e-12})
    with pytest.raises(ConfigError, match="integrator.abs_tl"):
        validate_config(doc)


def test_mode_and_integrator_enums():
    with pytest.raises(ConfigError, match="mode"):
        validate_config(toy_doc(mode="scan"))
    for mode in MODES:
        assert validate_config(toy_doc(mode=mode)).mode == mode
    with pytest.raises(ConfigError, match="integrator.kind"):
        validate_config(toy_doc(integrator={"kind": "euler"}))


def test_k_grid_constraints():
    with pytest.raises(ConfigError, match="K_grid"):
        validate_config(toy_doc(K_grid=[]))
    with pytest.raises(ConfigError, match="increasing"):
        validate_config(toy_doc(K_grid=[1e-3, 8e-4]))
    with pytest.raises(ConfigError, match="positive"):
        validate_config(toy_doc(K_grid=[-1e-3, 1e-3]))
    with pytest.raises(ConfigError, match="k_index"):
        validate_config(toy_doc(report={"k_index": 2}))
    assert validate_config(toy_doc(report={"k_index": 1}))["report"][
        "k_index"] == 1


def test_fock_bound():
    # conservative: 4 (eps2 + delta/2) / K; relaxed: occupied window + 6 sigma
    assert fock_bound(50.0, 10.0) == 220
    assert fock_bound(50.0, 10.0, relaxed=True) == 110
    doc = toy_doc(effective={"eps2_over_K": 50.0, "delta_over_K": 10.0},
                  fock_dim=150)
    with pytest.raises(ConfigError, match="below the"):
        validate_config(doc)
    doc["relax_fock_bound"] = True
    assert validate_config(doc).fock_dim == 150


def test_tolerance_ranges():
    with pytest.raises(ConfigError, match="rel_tol"):
        validate_config(toy_doc(integrator={"rel_tol": 1e-3}))
    with pytest.raises(ConfigError, match="abs_tol"):
        validate_config(toy_doc(integrator={"abs_tol": 0.0}))
    with pytest.raises(ConfigError, match="steps_per_period"):
        validate_config(toy_doc(integrator={"steps_per_period": 8}))
    with pytest.raises(ConfigError, match="theta"):
        validate_config(toy_doc(classification={"theta": 0.0}))
    with pytest.raises(ConfigError, match="f_min"):
        validate_config(toy_doc(classification={"f_min": 1.0}))
    with pytest.raises(ConfigError, match="escape_factor"):
        validate_config(toy_doc(classical={"escape_factor": 0.5}))
    with pytest.raises(ConfigError, match="fgr_period"):
        validate_config(toy_doc(cat={"fgr_period": "3tau"}))
    with pytest.raises(ConfigError, match="which_well"):
        validate_config(toy_doc(section={"which_well": 0}))


def test_params_and_options_accessors():
    cfg = validate_config(toy_doc())
    p = cfg.params(1e-3)
    assert p.K == 1e-3 and p.eps2 == 4e-3 and p.delta == 0.6e-3
    opts = cfg.propagator_options()
    assert opts.integrator_kind == "adaptive-runge-kutta"
    assert opts.max_step == float("inf")  # 0 means unlimited
    opts2 = validate_config(toy_doc(integrator={"max_step": 0.5})
                            ).propagator_options()
    assert opts2.max_step == 0.5
    copts = cfg.classical_options()
    assert copts.escape_factor == 3.0


def test_config_hash_invariances():
    base = validate_config(toy_doc()).config_hash
    assert len(base) == 64 and int(base, 16) >= 0
    # execution-only keys do not affect the hash
    assert validate_config(toy_doc(workers=4)).config_hash == base
    assert validate_config(toy_doc(output_dir="elsewhere")).config_hash == base
    # physics keys and the mode do
    assert validate_config(toy_doc(g3=0.021)).config_hash != base
    assert validate_config(toy_doc(mode="curve")).config_hash != base
    # explicit defaults hash identically to omitted ones
    assert validate_config(toy_doc(relax_fock_bound=False)).config_hash == base


def test_load_config_round_trip(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(toy_doc()))
    cfg = load_config(path)
    assert isinstance(cfg, RunConfig)
    assert cfg.config_hash == validate_config(toy_doc()).config_hash
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
