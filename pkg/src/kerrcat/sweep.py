"""Sweep orchestration: calibrate/propagate, continuation matching, analysis.

A sweep over the K grid runs in three passes:

  P1 (parallel)    calibrate the drive and integrate the period propagator
                   for each K; store the propagator checkpoint, Floquet
                   arrays, and calibration record.
  P2 (sequential)  match Floquet modes to the effective ladder, walking the
                   grid in order and seeding each point with the previous
                   matched modes so labels cannot swap across avoided
                   crossings; extract the doublet splitting.
  P3 (parallel)    localization comparison, chaos classification, golden
                   rule leak, island geometry.

Every per-K record is keyed by the configuration hash: reruns skip finished
work, and an output directory holding records from a different
configuration is refused outright.  Failures are contained per K and per
pass; the manifest reports them and the run exits nonzero.
"""

import numpy as np
import os
from concurrent.futures import ProcessPoolExecutor

from . import io as kio
from . import plots
from .calibration import calibrate_drive
from .cat import (build_projector, classify_states, fgr_rate, fit_c0,
                  heisenberg_flag, retained_count, semiclassical_splitting,
                  splitting_from_rate)
from .classical import island_area, lobe_area, count_well_states
from .config import validate_config
from .errors import ConfigError, FitError, KerrcatError
from .fockspace import build_effective_hamiltonian, eigendecompose, Spectrum
from .floquet import DriveParams, FloquetSpectrum, FrameMap, match_states, \
    quasienergy_splitting
from .phasespace import GridSpec, localization_compare

FIT_RISE_THRESHOLD = 1e-4  # dE_floquet/K above which a point counts as risen


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


class _Paths:
    def __init__(self, outdir):
        self.root = outdir
        self.records = os.path.join(outdir, "records")
        self.arrays = os.path.join(outdir, "arrays")
        self.checkpoints = os.path.join(outdir, "checkpoints")
        for d in (self.root, self.records, self.arrays, self.checkpoints):
            os.makedirs(d, exist_ok=True)

    def record(self, idx):
        return os.path.join(self.records, f"k{idx:03d}.json")

    def array(self, idx, name):
        return os.path.join(self.arrays, f"k{idx:03d}_{name}.npy")

    def checkpoint(self, idx):
        return os.path.join(self.checkpoints, f"k{idx:03d}.ckpt")

    def out(self, name):
        return os.path.join(self.root, name)


def _load_record(paths, idx):
    p = paths.record(idx)
    return kio.read_json(p) if os.path.exists(p) else None


def _store_record(paths, idx, rec):
    kio.write_json(paths.record(idx), _jsonable(rec))


def _check_hash(paths, cfg):
    """Refuse to mix records from different configurations."""
    for name in sorted(os.listdir(paths.records)):
        rec = kio.read_json(os.path.join(paths.records, name))
        if rec.get("config_hash") != cfg.config_hash:
            raise ConfigError(
                f"output dir {paths.root} holds records for config "
                f"{rec.get('config_hash', '?')[:12]}..., refusing to mix with "
                f"{cfg.config_hash[:12]}...; use a fresh output directory")


def _shared_spectrum(cfg):
    """Effective eigensystem at the first grid point.

    For fixed ratios H_eff is linear in K, so the eigenvectors are shared by
    the whole sweep and energies scale as E/K.
    """
    k0 = float(cfg.k_grid[0])
    spec = eigendecompose(build_effective_hamiltonian(cfg.params(k0),
                                                      cfg.fock_dim))
    return spec, spec.energies / k0


def _spectrum_at(cfg, shared, k):
    spec, e_over_k = shared
    return Spectrum(energies=e_over_k * k, states=spec.states,
                    parities=spec.parities)


def _drive_from_record(rec):
    d = rec["drive"]
    return DriveParams(omega0=d["omega0"], omegad=d["omegad"],
                       Omegad=d["Omegad"], g3=d["g3"], g4=d["g4"])


def _fs_from_record(paths, idx, rec):
    qe = np.load(paths.array(idx, "qe"))
    eigvals = np.load(paths.array(idx, "eigvals"))
    modes = np.load(paths.array(idx, "modes"))
    matching = {int(i): (int(v[0]), float(v[1]))
                for i, v in rec.get("matching", {}).items()}
    return FloquetSpectrum(
        tau=rec["tau"], omegad=rec["drive"]["omegad"], quasienergies=qe,
        modes=modes, eigvals=eigvals, defect=rec["defect"],
        matching=matching, unmatched=list(rec.get("unmatched", [])),
        meta=rec.get("fs_meta", {}))


# ---------------------------------------------------------------------------
# pass 1: calibrate + propagate

def _p1_task(args):
    raw, outdir, idx, k = args
    cfg = validate_config(raw)
    paths = _Paths(outdir)
    params = cfg.params(k)
    cal = cfg["calibration"]
    try:
        rep = calibrate_drive(params, cfg["g3"], cfg["g4"], cfg.fock_dim,
                              opts=cfg.propagator_options(),
                              refine=cal["refine"], max_iter=cal["max_iter"],
                              gap_rtol=cal["gap_rtol"], strict=cal["strict"])
    except KerrcatError as exc:
        rec = {"config_hash": cfg.config_hash, "index": idx, "K": k,
               "status": {"p1": "failed"}, "error": str(exc)}
        _store_record(paths, idx, rec)
        return idx, rec
    fs = rep.spectrum
    np.save(paths.array(idx, "qe"), fs.quasienergies)
    np.save(paths.array(idx, "eigvals"), fs.eigvals)
    np.save(paths.array(idx, "modes"), fs.modes)
    kio.save_checkpoint(paths.checkpoint(idx), rep.propagator.matrix,
                        rep.drive.tau, cfg.config_hash)
    d = rep.drive
    rec = {
        "config_hash": cfg.config_hash, "index": idx, "K": k,
        "status": {"p1": "ok"},
        "tau": d.tau, "defect": rep.propagator.meta["defect"],
        "drive": {"omega0": d.omega0, "omegad": d.omegad,
                  "Omegad": d.Omegad, "g3": d.g3, "g4": d.g4},
        "calibration": {"converged": rep.converged, "fallback": rep.fallback,
                        "iterations": rep.iterations,
                        "gap_rel_err": rep.gap_rel_err, "fitted": rep.fitted},
    }
    _store_record(paths, idx, rec)
    return idx, rec


# ---------------------------------------------------------------------------
# pass 2: continuation matching

def _p2_all(cfg, paths):
    shared = _shared_spectrum(cfg)
    n_keep = retained_count(cfg.params(cfg.k_grid[0]), cfg.fock_dim)
    f_min = cfg["classification"]["f_min"]
    seeds = None
    for idx, k in enumerate(cfg.k_grid):
        rec = _load_record(paths, idx)
        if rec is None or rec["status"].get("p1") != "ok":
            continue
        if rec["status"].get("p2") == "ok":
            fs = _fs_from_record(paths, idx, rec)
            seeds = dict(seeds or {})
            seeds.update({i: fs.modes[:, fs.matching[i][0]]
                          for i in fs.matching})
            continue
        eff = _spectrum_at(cfg, shared, k)
        fs = _fs_from_record(paths, idx, rec)
        frame = FrameMap.from_drive(_drive_from_record(rec), cfg.fock_dim)
        matched = match_states(eff, fs, frame, f_min=f_min,
                               seed_modes=seeds, n_track=n_keep)
        np.save(paths.array(idx, "modes"), matched.modes)
        rec["matching"] = {str(i): [v[0], v[1]]
                          for i, v in matched.matching.items()}
        rec["unmatched"] = matched.unmatched
        rec["fs_meta"] = {kk: _jsonable(vv)
                          for kk, vv in matched.meta.items()
                          if kk in ("ambiguous", "rotated_clusters",
                                    "n_track", "f_min", "seeded")}
        e0, e1 = eff.energies[0], eff.energies[1]
        row = {"K": k, "eps2_over_K": cfg["effective"]["eps2_over_K"],
               "delta_over_K": cfg["effective"]["delta_over_K"],
               "dE_effective_over_K": abs(e0 - e1) / k,
               "unitarity_defect": rec["defect"],
               "fidelity0": matched.matching.get(0, (None, np.nan))[1],
               "fidelity1": matched.matching.get(1, (None, np.nan))[1],
               "n_unmatched": n_keep - len(matched.matching)}
        try:
            row["dE_floquet_over_K"] = quasienergy_splitting(matched) / k
            rec["status"]["p2"] = "ok"
        except KerrcatError as exc:
            row["dE_floquet_over_K"] = np.nan
            rec["status"]["p2"] = "failed"
            rec["error"] = str(exc)
        rec["floquet_row"] = row
        _store_record(paths, idx, rec)
        # matched branches refresh their seeds; lost branches keep the last
        # good seed so they can re-latch past an avoided crossing
        seeds = dict(seeds or {})
        seeds.update({i: matched.modes[:, matched.matching[i][0]]
                      for i in matched.matching})


# ---------------------------------------------------------------------------
# pass 3: localization, classification, leak rate, island

def _p3_task(args):
    raw, outdir, idx, k = args
    cfg = validate_config(raw)
    paths = _Paths(outdir)
    rec = _load_record(paths, idx)
    if rec is None or rec["status"].get("p2") != "ok":
        return idx, rec
    if rec["status"].get("p3") == "ok":
        return idx, rec
    params = cfg.params(k)
    try:
        shared = _shared_spectrum(cfg)
        eff = _spectrum_at(cfg, shared, k)
        fs = _fs_from_record(paths, idx, rec)
        frame = FrameMap.from_drive(_drive_from_record(rec), cfg.fock_dim)
        n_keep = retained_count(params, cfg.fock_dim)
        grid = GridSpec.for_fock(n_keep,
                                 resolution=cfg["grid"]["resolution"])
        cl = cfg["classification"]
        report = localization_compare(eff, fs, frame, grid, n_keep)
        kio.write_csv(paths.out(f"localization_k{idx:03d}.csv"),
                      kio.LOCALIZATION_COLUMNS, report.rows)
        cls = classify_states(report, fs, theta=cl["theta"],
                              window=cl["window"])

        u, tau, _ = kio.load_checkpoint(paths.checkpoint(idx),
                                        expect_hash=cfg.config_hash)
        u_eff = frame.pullback_operator(u)
        if cls.chaotic_floquet:
            proj = build_projector(
                frame.pullback_states(fs.modes[:, cls.chaotic_floquet]))
            gamma0 = fgr_rate(u_eff, eff.states[:, 0], proj)
        else:
            gamma0 = 0.0
        omegad = rec["drive"]["omegad"]
        de_fgr = splitting_from_rate(gamma0, tau, cfg["cat"]["fgr_period"])
        t_h_flag = heisenberg_flag(gamma0, tau, omegad, cls.n_chaotic)

        if cfg["cat"]["area_source"] == "lobe":
            area = lobe_area(params)
            island_meta = {"boundary_source": "lobe"}
            boundary = []
        else:
            geo = island_area(_drive_from_record(rec), params,
                              which_well=1, opts=cfg.classical_options())
            area = geo.area
            island_meta = {kk: _jsonable(vv) for kk, vv in geo.meta.items()
                           if kk in ("boundary_source", "s_boundary",
                                     "n_class", "coverage_gap",
                                     "resonance_flags", "vanished")}
            boundary = geo.boundary
            if len(boundary):
                kio.write_csv(paths.out(f"island_k{idx:03d}.csv"),
                              kio.BOUNDARY_COLUMNS,
                              [{"x": float(x), "p": float(p)}
                               for x, p in boundary])
        kio.write_json(paths.out(f"island_k{idx:03d}.json"),
                       {"A": float(area), "n_ebk": count_well_states(area)
                        if np.isfinite(area) else 0,
                        "which_well": 1, **island_meta})

        rec["cat_row"] = {"K": k, "N_ch": cls.n_chaotic, "gamma0": gamma0,
                          "dE_fgr_over_K": de_fgr / k, "A": area,
                          "t_H_flag": t_h_flag}
        rec["classification"] = {
            "ipn_onset": cls.ipn_onset, "wehrl_onset": cls.wehrl_onset,
            "onset_consistent": cls.meta["onset_consistent"],
            "n_chaotic": cls.n_chaotic,
            "chaotic_indices": [int(i) for i in np.nonzero(cls.chaotic)[0]]}
        rec["localization_rows"] = _jsonable(report.rows)
        rec["status"]["p3"] = "ok"
    except KerrcatError as exc:
        rec["status"]["p3"] = "failed"
        rec["error"] = str(exc)
    _store_record(paths, idx, rec)
    return idx, rec


# ---------------------------------------------------------------------------
# assembly

def _pick_fit_points(records):
    """<=3 fit anchors on the risen part of the curve: first, middle, last."""
    risen = [r for r in records
             if r and r.get("floquet_row") and r.get("cat_row")
             and np.isfinite(r["floquet_row"]["dE_floquet_over_K"])
             and r["floquet_row"]["dE_floquet_over_K"] >= FIT_RISE_THRESHOLD
             and np.isfinite(r["cat_row"]["A"]) and r["cat_row"]["A"] > 0.0]
    if len(risen) <= 3:
        return risen
    return [risen[0], risen[len(risen) // 2], risen[-1]]


def _assemble(cfg, paths, records, stages):
    floquet_rows = [r["floquet_row"] for r in records
                    if r and r.get("floquet_row")]
    if floquet_rows:
        kio.write_csv(paths.out("floquet.csv"), kio.FLOQUET_COLUMNS,
                      floquet_rows)

    c0 = np.nan
    fit_info = {"fitted": False}
    cat_rows = []
    if "p3" in stages:
        pts = _pick_fit_points(records)
        try:
            model, residuals = fit_c0(
                [r["cat_row"]["A"] for r in pts],
                [r["floquet_row"]["dE_floquet_over_K"] * r["K"] for r in pts])
            c0 = model.c0
            fit_info = {"fitted": True, "c0": c0,
                        "points_K": [r["K"] for r in pts],
                        "residuals": [float(x) for x in residuals]}
        except FitError as exc:
            fit_info = {"fitted": False, "error": str(exc)}
        for r in records:
            if not (r and r.get("cat_row")):
                continue
            row = dict(r["cat_row"])
            de_sc = (semiclassical_splitting(row["A"], c0)
                     if np.isfinite(c0) and np.isfinite(row["A"])
                     else np.nan)
            row["dE_semiclassical_over_K"] = de_sc / r["K"] \
                if np.isfinite(de_sc) else de_sc
            row["c0"] = c0
            cat_rows.append(row)
            r["cat_row"] = row
            _store_record(paths, r["index"], r)
        if cat_rows:
            kio.write_csv(paths.out("cat.csv"), kio.CAT_COLUMNS, cat_rows)

    shared = _shared_spectrum(cfg)
    spec0 = _spectrum_at(cfg, shared, cfg.k_grid[0])
    kio.write_csv(paths.out("spectrum.csv"), kio.SPECTRUM_COLUMNS,
                  kio.spectrum_rows(spec0))

    if floquet_rows:
        plots.plot_curve(paths.out("curve.svg"), floquet_rows, cat_rows)
    last_ok = next((r for r in reversed(records)
                    if r and r.get("localization_rows")), None)
    if last_ok is not None:
        plots.plot_localization(paths.out("localization.svg"),
                                last_ok["localization_rows"],
                                title_k=last_ok["K"])
    return fit_info


def _effective_workers(cfg, workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("KERRCAT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, int(cfg["workers"]))


def _run_pass(task, argl, workers):
    if workers <= 1 or len(argl) <= 1:
        return [task(a) for a in argl]
    with ProcessPoolExecutor(max_workers=min(workers, len(argl))) as pool:
        return list(pool.map(task, argl))


def run_sweep(cfg, output_dir=None, workers=None, stages=("p1", "p2", "p3")):
    """Run the sweep passes; returns the manifest dict (also written to disk)."""
    outdir = output_dir or cfg["output_dir"]
    paths = _Paths(outdir)
    _check_hash(paths, cfg)
    nworkers = _effective_workers(cfg, workers)

    argl = []
    for idx, k in enumerate(cfg.k_grid):
        rec = _load_record(paths, idx)
        if rec is not None and rec["status"].get("p1") == "ok":
            continue
        argl.append((cfg.raw, outdir, idx, float(k)))
    if argl:
        _run_pass(_p1_task, argl, nworkers)

    if "p2" in stages:
        _p2_all(cfg, paths)

    if "p3" in stages:
        argl = [(cfg.raw, outdir, idx, float(k))
                for idx, k in enumerate(cfg.k_grid)]
        _run_pass(_p3_task, argl, nworkers)

    records = [_load_record(paths, idx) for idx in range(len(cfg.k_grid))]
    fit_info = _assemble(cfg, paths, records, stages)

    final = stages[-1]
    k_status = []
    for idx, k in enumerate(cfg.k_grid):
        rec = records[idx]
        st = rec["status"] if rec else {}
        ok = bool(rec) and st.get(final) == "ok"
        failed = next((p for p in stages if st.get(p) != "ok"), None)
        k_status.append({"index": idx, "K": float(k), "ok": ok,
                         "failed_stage": None if ok else (failed or "p1"),
                         "error": None if ok else
                         (rec or {}).get("error", "missing record")})
    manifest = {
        "config": cfg.echo(), "config_hash": cfg.config_hash,
        "mode": "sweep" if "p3" in stages else "curve",
        "stages": list(stages), "fit": _jsonable(fit_info),
        "k_status": k_status, "all_ok": all(s["ok"] for s in k_status),
    }
    kio.write_json(paths.out("manifest.json"), manifest)
    return manifest


def run_curve(cfg, output_dir=None, workers=None):
    """P1 + P2 only: the splitting curve without the classical analysis."""
    return run_sweep(cfg, output_dir, workers, stages=("p1", "p2"))


# ---------------------------------------------------------------------------
# single-K report modes

def _single_k(cfg):
    """Calibrate one grid point (report.k_index) for the report modes."""
    idx = int(cfg["report"]["k_index"])
    k = float(cfg.k_grid[idx])
    params = cfg.params(k)
    cal = cfg["calibration"]
    rep = calibrate_drive(params, cfg["g3"], cfg["g4"], cfg.fock_dim,
                          opts=cfg.propagator_options(),
                          refine=cal["refine"], max_iter=cal["max_iter"],
                          gap_rtol=cal["gap_rtol"], strict=cal["strict"])
    return idx, k, params, rep


def _report_manifest(cfg, paths, mode, ok, extra=None, error=None):
    manifest = {"config": cfg.echo(), "config_hash": cfg.config_hash,
                "mode": mode, "all_ok": bool(ok)}
    if extra:
        manifest.update(_jsonable(extra))
    if error:
        manifest["error"] = str(error)
    kio.write_json(paths.out("manifest.json"), manifest)
    return manifest


def run_poincare(cfg, output_dir=None, workers=None):
    """Stroboscopic section seeded along the well ray, CSV + SVG."""
    from .classical import (find_well_center, from_section, poincare_section,
                            separatrix, to_section)
    paths = _Paths(output_dir or cfg["output_dir"])
    se = cfg["section"]
    try:
        idx, k, params, rep = _single_k(cfg)
        opts = cfg.classical_options()
        well = int(se["which_well"])
        flip = well < 0
        wc_rot = to_section(find_well_center(rep.drive, params, well, opts),
                            rep.drive, flip=flip)
        svals = np.linspace(0.15, 1.25, int(se["n_seeds"]))
        seeds = from_section(wc_rot[None, :] * svals[:, None], rep.drive,
                             flip=flip)
        sec = poincare_section(rep.drive, seeds, int(se["n_periods"]), opts,
                               which_well=well, params=params)
        kio.write_csv(paths.out("section.csv"), kio.SECTION_COLUMNS,
                      kio.section_rows(sec))
        plots.plot_section(paths.out("section.svg"), sec,
                           boundary=separatrix(params, which_well=well))
    except KerrcatError as exc:
        return _report_manifest(cfg, paths, "poincare", False, error=exc)
    return _report_manifest(
        cfg, paths, "poincare", True,
        extra={"K": k, "k_index": idx,
               "n_escaped": int(np.count_nonzero(sec.escaped))})


def run_husimi(cfg, output_dir=None, workers=None):
    """Husimi maps of one effective state and its Floquet partner."""
    from .phasespace import husimi
    paths = _Paths(output_dir or cfg["output_dir"])
    state_index = int(cfg["report"]["state_index"])
    try:
        idx, k, params, rep = _single_k(cfg)
        eff = eigendecompose(build_effective_hamiltonian(params,
                                                         cfg.fock_dim))
        matched = match_states(eff, rep.spectrum, rep.frame,
                               f_min=cfg["classification"]["f_min"],
                               n_track=max(8, state_index + 1))
        psi = eff.states[:, state_index]
        cols, labels = [psi], [f"effective {state_index}"]
        partner = matched.matching.get(state_index)
        if partner is not None:
            cols.append(rep.frame.pullback_states(matched.modes[:,
                                                               partner[0]]))
            labels.append(f"Floquet partner (f = {partner[1]:.4f})")
        x_sep = np.sqrt(2.0 * (params.delta + 2.0 * params.eps2) / params.K)
        grid = GridSpec.for_states(
            np.column_stack(cols),
            resolution=cfg["grid"]["resolution"],
            floor=cfg["grid"]["window_factor"] * x_sep)
        grids = [husimi(c, grid) for c in cols]
        hg_e = grids[0]
        xs, ps = np.meshgrid(hg_e.xs, hg_e.ps)
        qf = grids[1].q if len(grids) > 1 else np.full_like(hg_e.q, np.nan)
        rows = [{"x": float(x), "p": float(p), "q_eff": float(qe),
                 "q_floquet": float(qff)}
                for x, p, qe, qff in zip(xs.ravel(), ps.ravel(),
                                         hg_e.q.ravel(), qf.ravel())]
        kio.write_csv(paths.out("husimi.csv"), kio.HUSIMI_COLUMNS, rows)
        plots.plot_husimi(paths.out("husimi.svg"), grids, labels)
    except KerrcatError as exc:
        return _report_manifest(cfg, paths, "husimi", False, error=exc)
    return _report_manifest(
        cfg, paths, "husimi", True,
        extra={"K": k, "k_index": idx, "state_index": state_index,
               "matched": partner is not None})


def run_classify(cfg, output_dir=None, workers=None):
    """Localization comparison and chaos classification at one grid point."""
    paths = _Paths(output_dir or cfg["output_dir"])
    cl = cfg["classification"]
    try:
        idx, k, params, rep = _single_k(cfg)
        eff = eigendecompose(build_effective_hamiltonian(params,
                                                         cfg.fock_dim))
        n_keep = retained_count(params, cfg.fock_dim)
        matched = match_states(eff, rep.spectrum, rep.frame,
                               f_min=cl["f_min"], n_track=n_keep)
        grid = GridSpec.for_fock(n_keep,
                                 resolution=cfg["grid"]["resolution"])
        report = localization_compare(eff, matched, rep.frame, grid, n_keep)
        kio.write_csv(paths.out("localization.csv"),
                      kio.LOCALIZATION_COLUMNS, report.rows)
        cls = classify_states(report, matched, theta=cl["theta"],
                              window=cl["window"])
        kio.write_json(paths.out("classification.json"), _jsonable({
            "K": k, "n_track": n_keep,
            "ipn_onset": cls.ipn_onset, "wehrl_onset": cls.wehrl_onset,
            "onset_consistent": cls.meta["onset_consistent"],
            "n_chaotic": cls.n_chaotic,
            "chaotic_indices": [int(i) for i in np.nonzero(cls.chaotic)[0]],
        }))
        plots.plot_localization(paths.out("localization.svg"), report.rows,
                                title_k=k)
    except KerrcatError as exc:
        return _report_manifest(cfg, paths, "classify", False, error=exc)
    return _report_manifest(
        cfg, paths, "classify", True,
        extra={"K": k, "k_index": idx, "n_chaotic": cls.n_chaotic,
               "ipn_onset": cls.ipn_onset, "wehrl_onset": cls.wehrl_onset})


_MODE_RUNNERS = {
    "sweep": run_sweep,
    "curve": run_curve,
    "poincare": run_poincare,
    "husimi": run_husimi,
    "classify": run_classify,
}


def run(cfg, mode=None, output_dir=None, workers=None):
    """Dispatch on mode (argument wins over the configured mode)."""
    mode = mode or cfg.mode
    if mode not in _MODE_RUNNERS:
        raise ConfigError(f"unknown mode {mode!r}")
    return _MODE_RUNNERS[mode](cfg, output_dir=output_dir, workers=workers)
