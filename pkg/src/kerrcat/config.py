"""Run configuration: validation, defaults, canonical echo, content hash.

A run is described by a JSON document.  Unknown keys are rejected by name
(typos must not silently fall back to defaults), defaults are filled in and
echoed back, and the canonical echoed document minus the execution-only
fields (output_dir, workers) is hashed; the hash keys all on-disk records
so results can never be silently mixed across configurations.
"""

import hashlib
import json
import numpy as np
from dataclasses import dataclass, field

from .errors import ConfigError
from .fockspace import EffectiveParams
from .floquet import INTEGRATOR_KINDS, PropagatorOptions
from .classical import ClassicalOptions

SCHEMA_VERSION = 1

MODES = ("sweep", "poincare", "husimi", "classify", "curve")

# full schema with defaults; None marks a required leaf
_DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "mode": "sweep",
    "effective": {"eps2_over_K": None, "delta_over_K": None},
    "K_grid": None,
    "fock_dim": None,
    "g3": None,
    "g4": 0.0,
    "relax_fock_bound": False,
    "integrator": {
        "kind": "adaptive-runge-kutta",
        "rel_tol": 1e-10,
        "abs_tol": 1e-10,
        "max_step": 0.0,
        "steps_per_period": 512,
    },
    "grid": {"window_factor": 1.5, "resolution": 256},
    "classification": {"theta": 0.5, "window": 5, "f_min": 0.5},
    "calibration": {"refine": True, "max_iter": 4, "gap_rtol": 2e-4,
                    "strict": False},
    "classical": {"rtol": 1e-10, "n_rungs": 12, "n_bisect": 12,
                  "escape_factor": 3.0},
    "cat": {"fgr_period": "tau", "area_source": "island"},
    "section": {"n_seeds": 16, "n_periods": 400, "which_well": 1},
    "report": {"state_index": 0, "k_index": 0},
    "output_dir": "out",
    "workers": 1,
}

_EXECUTION_KEYS = ("output_dir", "workers")


def _merge(defaults, user, prefix=""):
    out = {}
    for key, dval in defaults.items():
        path = f"{prefix}{key}"
        if isinstance(dval, dict):
            sub = user.get(key, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"'{path}' must be an object")
            out[key] = _merge(dval, sub, prefix=f"{path}.")
        elif key in user:
            out[key] = user[key]
        elif dval is None:
            raise ConfigError(f"missing required key '{path}'")
        else:
            out[key] = dval
    for key in user:
        if key not in defaults:
            raise ConfigError(f"unknown key '{prefix}{key}'")
    return out


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


@dataclass
class RunConfig:
    """Validated configuration with canonical echo and content hash."""

    raw: dict = field(repr=False)

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def mode(self):
        return self.raw["mode"]

    @property
    def k_grid(self):
        return np.asarray(self.raw["K_grid"], dtype=float)

    @property
    def fock_dim(self):
        return int(self.raw["fock_dim"])

    def params(self, k):
        eff = self.raw["effective"]
        return EffectiveParams(K=k, eps2=eff["eps2_over_K"] * k,
                               delta=eff["delta_over_K"] * k)

    def propagator_options(self):
        it = self.raw["integrator"]
        return PropagatorOptions(
            rel_tol=it["rel_tol"], abs_tol=it["abs_tol"],
            max_step=np.inf if it["max_step"] == 0.0 else it["max_step"],
            integrator_kind=it["kind"],
            steps_per_period=it["steps_per_period"])

    def classical_options(self):
        cl = self.raw["classical"]
        return ClassicalOptions(rtol=cl["rtol"], n_rungs=cl["n_rungs"],
                                n_bisect=cl["n_bisect"],
                                escape_factor=cl["escape_factor"])

    def echo(self):
        """Canonical dict: defaults filled, key order fixed by the schema."""
        return json.loads(json.dumps(self.raw))

    @property
    def config_hash(self):
        doc = {k: v for k, v in self.echo().items()
               if k not in _EXECUTION_KEYS}
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def fock_bound(eps2_over_k, delta_over_k, relaxed=False):
    """Minimum Fock dimension for the target ratios.

    The conservative bound keeps 4x the well occupation
    n_bar = (delta + 2 eps2)/(2K); the relaxed variant keeps the occupied
    window plus six standard deviations, n_bar + 6 sqrt(n_bar) + 10, which
    suffices for smoke-scale runs.
    """
    nbar = 0.5 * (delta_over_k + 2.0 * eps2_over_k)
    if relaxed:
        return int(np.ceil(nbar + 6.0 * np.sqrt(max(nbar, 0.0)) + 10.0))
    return int(np.ceil(4.0 * (eps2_over_k + 0.5 * delta_over_k)))


def validate_config(doc):
    """Validate a raw dict against the schema; returns a RunConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    merged = _merge(_DEFAULTS, doc)
    _require(merged["schema_version"] == SCHEMA_VERSION,
             f"schema_version must be {SCHEMA_VERSION}")
    _require(merged["mode"] in MODES,
             f"mode must be one of {', '.join(MODES)}")

    eff = merged["effective"]
    for leaf in ("eps2_over_K", "delta_over_K"):
        _require(np.isfinite(eff[leaf]), f"effective.{leaf} must be finite")
    _require(eff["eps2_over_K"] >= 0.0, "effective.eps2_over_K must be >= 0")

    kg = merged["K_grid"]
    _require(isinstance(kg, (list, tuple)) and len(kg) >= 1,
             "K_grid must be a non-empty array")
    karr = np.asarray(kg, dtype=float)
    _require(np.all(karr > 0.0), "K_grid entries must be positive")
    _require(np.all(np.diff(karr) > 0.0), "K_grid must be strictly increasing")

    bound = fock_bound(eff["eps2_over_K"], eff["delta_over_K"],
                       relaxed=merged["relax_fock_bound"])
    _require(merged["fock_dim"] >= bound,
             f"fock_dim {merged['fock_dim']} is below the "
             f"{'relaxed ' if merged['relax_fock_bound'] else ''}bound {bound} "
             "for these ratios")

    _require(np.isfinite(merged["g3"]), "g3 must be finite")
    _require(np.isfinite(merged["g4"]), "g4 must be finite")

    it = merged["integrator"]
    _require(it["kind"] in INTEGRATOR_KINDS,
             f"integrator.kind must be one of {', '.join(INTEGRATOR_KINDS)}")
    for leaf in ("rel_tol", "abs_tol"):
        _require(0.0 < it[leaf] <= 1e-6,
                 f"integrator.{leaf} must be in (0, 1e-6]")
    _require(it["max_step"] >= 0.0, "integrator.max_step must be >= 0 (0 = unlimited)")
    _require(int(it["steps_per_period"]) >= 16,
             "integrator.steps_per_period must be at least 16")

    gr = merged["grid"]
    _require(gr["window_factor"] > 0.0, "grid.window_factor must be positive")
    _require(int(gr["resolution"]) >= 8, "grid.resolution must be at least 8")

    cl = merged["classification"]
    _require(cl["theta"] > 0.0, "classification.theta must be positive")
    _require(int(cl["window"]) >= 1, "classification.window must be >= 1")
    _require(0.0 < cl["f_min"] < 1.0, "classification.f_min must be in (0, 1)")

    ca = merged["calibration"]
    _require(int(ca["max_iter"]) >= 1, "calibration.max_iter must be >= 1")
    _require(ca["gap_rtol"] > 0.0, "calibration.gap_rtol must be positive")

    cc = merged["classical"]
    _require(cc["rtol"] > 0.0, "classical.rtol must be positive")
    _require(int(cc["n_rungs"]) >= 4, "classical.n_rungs must be at least 4")
    _require(int(cc["n_bisect"]) >= 1, "classical.n_bisect must be >= 1")
    _require(cc["escape_factor"] > 1.0, "classical.escape_factor must exceed 1")

    ct = merged["cat"]
    _require(ct["fgr_period"] in ("tau", "2tau"),
             "cat.fgr_period must be 'tau' or '2tau'")
    _require(ct["area_source"] in ("island", "lobe"),
             "cat.area_source must be 'island' or 'lobe'")

    se = merged["section"]
    _require(int(se["n_seeds"]) >= 1, "section.n_seeds must be >= 1")
    _require(int(se["n_periods"]) >= 1, "section.n_periods must be >= 1")
    _require(se["which_well"] in (1, -1), "section.which_well must be +-1")

    rp = merged["report"]
    _require(int(rp["state_index"]) >= 0, "report.state_index must be >= 0")
    _require(0 <= int(rp["k_index"]) < len(kg),
             "report.k_index must index into K_grid")

    _require(int(merged["workers"]) >= 1, "workers must be >= 1")
    _require(isinstance(merged["output_dir"], str) and merged["output_dir"],
             "output_dir must be a non-empty string")
    return RunConfig(raw=merged)


def load_config(path):
    """Read and validate a JSON configuration file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return validate_config(doc)
