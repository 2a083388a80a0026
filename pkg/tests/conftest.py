"""Shared fixtures.

The toy configuration (eps2/K = 4, delta/K = 0.6, 40 Fock states) keeps
every pipeline stage in the sub-minute range; the two smoke configurations
are the bundled reduced grids used by the acceptance tests.  Sweep outputs
are produced once per session and shared read-only.
"""

import json
import time

import pytest

from kerrcat.config import validate_config
from kerrcat.fockspace import EffectiveParams
from kerrcat.sweep import run_sweep


TOY_DOC = {
    "effective": {"eps2_over_K": 4.0, "delta_over_K": 0.6},
    "K_grid": [0.0008, 0.001],
    "fock_dim": 40,
    "g3": 0.02,
    "g4": 1e-8,
    "integrator": {"rel_tol": 1e-12, "abs_tol": 1e-12},
    "grid": {"resolution": 128},
    "cat": {"area_source": "lobe"},
}


def toy_doc(**over):
    doc = json.loads(json.dumps(TOY_DOC))
    doc.update(over)
    return doc


@pytest.fixture(scope="session")
def toy_params():
    return EffectiveParams(K=1e-3, eps2=4e-3, delta=0.6e-3)


@pytest.fixture(scope="session")
def toy_sweep(tmp_path_factory):
    """(cfg, outdir, manifest) for the toy two-point sweep."""
    outdir = tmp_path_factory.mktemp("toy_sweep")
    cfg = validate_config(toy_doc())
    manifest = run_sweep(cfg, output_dir=str(outdir))
    return cfg, outdir, manifest


def _preset(name):
    import importlib.resources
    path = importlib.resources.files("kerrcat").joinpath(f"configs/{name}.json")
    return json.loads(path.read_text())


@pytest.fixture(scope="session")
def fig1_smoke_sweep(tmp_path_factory):
    """Reduced main-figure sweep: 10 K points, 120 Fock states.

    Returns (cfg, outdir, manifest, elapsed_seconds); the wall time backs
    the smoke-runtime contract.
    """
    outdir = tmp_path_factory.mktemp("fig1_smoke")
    cfg = validate_config(_preset("fig1_smoke"))
    t0 = time.monotonic()
    manifest = run_sweep(cfg, output_dir=str(outdir))
    return cfg, outdir, manifest, time.monotonic() - t0


@pytest.fixture(scope="session")
def figs1_smoke_sweep(tmp_path_factory):
    """Reduced side-figure sweep (eps2/K = 10, delta/K = 0.2).

    The lobe area stands in for the island here: the acceptance checks on
    this grid concern the splitting curve and the localization onsets, not
    the area curve.  Returns (cfg, outdir, manifest, elapsed_seconds).
    """
    outdir = tmp_path_factory.mktemp("figs1_smoke")
    doc = _preset("figS1_left_smoke")
    doc["cat"] = {"area_source": "lobe"}
    cfg = validate_config(doc)
    t0 = time.monotonic()
    manifest = run_sweep(cfg, output_dir=str(outdir))
    return cfg, outdir, manifest, time.monotonic() - t0
