"""Drive calibration: lab-frame parameters realizing a target effective model.

Fourth-order averaging of the driven cubic-quartic oscillator gives closed
seed formulas for (omega0, omegad, Omegad) in terms of the targets
(K, eps2, delta) and the lab nonlinearities (g3, g4).  The seeds carry
higher-order corrections of relative size ~g3^2/omega0 which shift the
measured gaps; `calibrate_drive` removes them by fitting the measured
quasi-energy ladder against the effective-model ladder and nudging the
drive until the two agree.
"""

import numpy as np
from dataclasses import dataclass, field
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import least_squares

from .errors import CalibrationError, KerrcatError
from .fockspace import EffectiveParams, build_effective_hamiltonian, eigendecompose
from .floquet import (DriveParams, FrameMap, PropagatorOptions, circle_diff,
                      floquet_spectrum, match_states, propagate_period)

# Number of ladder states measured / fitted.  The first gap is the tunneling
# splitting (exponentially small, numerically noisy) so the fit and the
# convergence check start at the second gap.
N_GAPS = 7


@dataclass
class CalibrationReport:
    """Outcome of calibrate_drive, including the final-period propagator.

    The propagator and the matched Floquet spectrum belong to the returned
    drive, so downstream users (the sweep) never re-integrate.
    """

    drive: DriveParams
    frame: FrameMap
    converged: bool
    fallback: bool
    iterations: int
    gap_rel_err: float
    fitted: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    propagator: object = None
    spectrum: object = None


def seed_drive(params, g3, g4, corr_delta=0.0, corr_eps=1.0):
    """Averaging-theory drive seeds for the target effective params.

    omega_p = 30 g3^2 / (K + 6 g4) sets the scale separation, the drive is
    at 2 omega_p, the bare detuning absorbs the quartic Lamb shift, and the
    drive strength maps through the three-wave mixing rate eps2 = g3 Omegad
    ... / omegad (inverted here).  corr_delta / corr_eps are the refinement
    knobs used by calibrate_drive.
    """
    if g3 <= 0.0 and params.eps2 > 0.0:
        raise CalibrationError(
            "eps2 > 0 needs a positive cubic nonlinearity g3 to generate the "
            "two-photon drive"
        )
    shift = params.K + 6.0 * g4
    if shift <= 0.0:
        raise CalibrationError("K + 6 g4 must be positive for the seed formulas")
    omega_p = 30.0 * g3**2 / shift
    omegad = 2.0 * omega_p
    omega0 = omega_p + params.delta + 2.0 * shift + corr_delta
    Omegad = corr_eps * params.eps2 * omegad / (4.0 * g3) if g3 > 0.0 else 0.0
    return DriveParams(omega0=omega0, omegad=omegad, Omegad=Omegad, g3=g3, g4=g4)


def _block_energies(params, dim):
    """Descending eigenvalues of the even and odd parity blocks of H_eff."""
    out = []
    for par in (0, 1):
        ns = np.arange(par, dim, 2, dtype=float)
        diag = params.delta * ns - params.K * ns * (ns - 1.0)
        off = params.eps2 * np.sqrt((ns[:-1] + 1.0) * (ns[:-1] + 2.0))
        w = eigh_tridiagonal(diag, off, eigvals_only=True)
        out.append(w[::-1])
    return out


def model_gaps(params, dim, n_gaps=N_GAPS):
    """Top-of-ladder gaps E_0 - E_k of the effective model, k = 1..n_gaps."""
    even, odd = _block_energies(params, dim)
    top = np.sort(np.concatenate([even[: n_gaps + 1], odd[: n_gaps + 1]]))[::-1]
    return top[0] - top[1 : 1 + n_gaps]


def _measure(drive, params, dim, opts):
    """Propagate one period, match to H_eff, extract the ladder gaps.

    At larger K resonances hybridize parts of the ladder and the matching
    drops them; their gaps come back NaN and the caller decides whether
    enough of the ladder survived to calibrate on.
    """
    u = propagate_period(drive, dim, opts)
    frame = FrameMap.from_drive(drive, dim)
    eff = eigendecompose(build_effective_hamiltonian(params, dim))
    fs = match_states(eff, floquet_spectrum(u, drive.tau, drive.omegad),
                      frame, n_track=N_GAPS + 1)
    missing = [i for i in range(N_GAPS + 1) if i not in fs.matching]
    gaps = np.full(N_GAPS, np.nan)
    if 0 in fs.matching:
        half = 0.5 * drive.omegad
        qe = fs.quasienergies
        q0 = qe[fs.matching[0][0]]
        for i in range(1, N_GAPS + 1):
            if i in fs.matching:
                gaps[i - 1] = circle_diff(q0 - qe[fs.matching[i][0]], half)
    fid0 = fs.matching.get(0, (None, np.nan))[1]
    return u, frame, fs, gaps, fid0, missing


def calibrate_drive(params, g3, g4, dim, opts=None, refine=True, max_iter=4,
                    gap_rtol=2e-4, strict=True):
    """Calibrate the lab drive against the target effective parameters.

    Measures the top quasi-energy gaps, fits (K, eps2, delta) of the
    effective model to them, and corrects the seed formulas until the
    measured ladder matches the target ladder to gap_rtol (tunneling gap
    excluded).  Resonantly hybridized ladder states are simply left out of
    the fit; the calibration is defined by the gaps that remain clean.
    Returns the drive whose *measured* spectrum converged, not the
    post-update one.  With strict=False a failed or untrackable refinement
    falls back to the plain seeds (propagator included) instead of raising,
    so a sweep can push through the chaotic end of the grid.
    """
    if max_iter < 1:
        raise CalibrationError("max_iter must be at least 1")
    opts = opts or PropagatorOptions()
    target = model_gaps(params, dim)
    scale = np.abs(target[1:])

    def fit_effective(gaps):
        usable = np.isfinite(gaps[:6])
        if usable.sum() < 3:
            return None  # fewer clean gaps than fit parameters
        def resid(p):
            return (model_gaps(EffectiveParams(*p), dim, 6) - gaps[:6])[usable]
        sol = least_squares(resid, [params.K, params.eps2, params.delta],
                            diff_step=1e-6)
        return EffectiveParams(*sol.x)

    def as_dict(fitted):
        if fitted is None:
            return {}
        return {"K": fitted.K, "eps2": fitted.eps2, "delta": fitted.delta}

    corr_delta, corr_eps = 0.0, 1.0
    omega_p = None  # running plasma-frequency estimate, updated by the K fit
    history = []
    first = None  # seed-drive measurement kept for the fallback path
    failure = None
    n_iter = max_iter if refine else 1
    for it in range(n_iter):
        if omega_p is None:
            drive = seed_drive(params, g3, g4, corr_delta, corr_eps)
            omega_p = 0.5 * drive.omegad
        else:
            omegad = 2.0 * omega_p
            drive = DriveParams(
                omega0=omega_p + params.delta + 2.0 * (params.K + 6.0 * g4)
                + corr_delta,
                omegad=omegad,
                Omegad=corr_eps * params.eps2 * omegad / (4.0 * g3),
                g3=g3, g4=g4)
        try:
            u, frame, fs, gaps, fid0, missing = _measure(drive, params, dim,
                                                         opts)
        except KerrcatError as exc:
            failure = exc
            break
        finite = np.isfinite(gaps[1:])
        if finite.sum() < 2:
            # hybridization ate the ladder; keep the propagator so the
            # fallback path can still hand the sweep something to match
            failure = CalibrationError(
                f"calibration lost track of effective states {missing}; the "
                "drive is too far from the averaging regime")
            if first is None:
                first = (drive, u, frame, fs, float("inf"), None)
            break
        rel_err = float(np.max(np.abs((gaps[1:] - target[1:])[finite])
                               / scale[finite]))
        fitted = fit_effective(gaps)
        history.append({"iteration": it, "gap_rel_err": rel_err,
                        "fidelity0": fid0, "missing": missing,
                        "fitted": as_dict(fitted),
                        "omega0": drive.omega0, "omegad": drive.omegad,
                        "Omegad": drive.Omegad})
        if it == 0:
            first = (drive, u, frame, fs, rel_err, fitted)
        if rel_err < gap_rtol or not refine:
            return CalibrationReport(
                drive=drive, frame=frame, converged=rel_err < gap_rtol,
                fallback=False, iterations=it + 1, gap_rel_err=rel_err,
                fitted=history[-1]["fitted"], history=history,
                propagator=u, spectrum=fs)
        if fitted is None:
            failure = CalibrationError(
                f"calibration lost track of effective states {missing}; too "
                "few clean gaps remain to refine the drive")
            break
        # probe7-style corrections: shift the plasma frequency to cancel the
        # K error, the detuning offset additively, the drive strength
        # multiplicatively.
        omega_p = 30.0 * g3**2 / (30.0 * g3**2 / omega_p - (fitted.K - params.K))
        corr_delta += params.delta - fitted.delta
        corr_eps *= params.eps2 / fitted.eps2

    if strict:
        if failure is not None:
            raise failure
        raise CalibrationError(
            f"calibration did not converge in {max_iter} iterations; last "
            f"gap_rel_err = {history[-1]['gap_rel_err']:.3e} (tol {gap_rtol:.1e})"
        )
    if first is None:
        raise failure  # the propagation itself failed; nothing to return
    drive, u, frame, fs, rel_err, fitted = first
    return CalibrationReport(
        drive=drive, frame=frame, converged=False, fallback=True,
        iterations=max(len(history), 1), gap_rel_err=rel_err,
        fitted=as_dict(fitted), history=history, propagator=u, spectrum=fs)
