"""Chaos-assisted decay of the cat doublet.

The regular/chaotic split of the Floquet spectrum is decided per effective
index from the localization comparison (failed matching, or a Floquet mode
occupying substantially more phase-space area than its effective partner,
cross-checked against the Wehrl entropy).  The chaotic subspace drives two
splitting predictions: a one-period golden-rule leak rate, and the
semiclassical formula

    dE = c0 hbar Gamma(s, 2s) / Gamma(s + 1),   s = A / (pi hbar),

with A the regular island area.  Gamma(s, 2s)/Gamma(s+1) = Q(s, 2s)/s in
terms of the regularized upper incomplete gamma; for s beyond the double
underflow (~1830) a uniform large-a expansion of Q evaluated through erfcx
keeps the logarithm finite.
"""

import numpy as np
from dataclasses import dataclass, field
from scipy.special import erfcx, gammaincc

from .errors import ClassificationError, FitError
from .fockspace import FockOperator
from .classical import count_well_states, lobe_area

DEFAULT_THETA = 0.5
DEFAULT_WINDOW = 5


def retained_count(params, dim):
    """Size of the retained ladder subspace for classification.

    Covers both well ladders plus a margin of above-separatrix states,
    capped so the tail never touches the truncation edge.  The lobe count
    depends only on the parameter ratios, so this is sweep-stable.
    """
    ebk = count_well_states(lobe_area(params))
    return int(min(3 * (2 * ebk + 10), int(0.55 * dim)))


@dataclass
class ChaoticClassification:
    """Per-index chaos flags and the onset bookkeeping behind them."""

    chaotic: np.ndarray
    ipn_onset: int
    wehrl_onset: int
    chaotic_floquet: list
    n_chaotic: int
    evidence: list
    meta: dict = field(default_factory=dict)


def _onset(flags, window):
    """First index whose flag is corroborated by a majority of its window."""
    n = len(flags)
    for i in range(n):
        if not flags[i]:
            continue
        w = flags[i:min(i + window, n)]
        if np.count_nonzero(w) * 2 > len(w):
            return i
    return -1


def classify_states(report, fs, theta=DEFAULT_THETA, window=DEFAULT_WINDOW):
    """Classify tracked effective indices as regular or chaotic.

    report is the LocalizationReport for the tracked ladder; fs supplies the
    matching.  An index is chaotic when it has no Floquet partner, or when
    its partner's inverse participation exceeds the effective one by the
    fraction theta with majority support in the following `window` indices
    (isolated resonance hybridization does not count as an onset).  The
    Wehrl entropies provide an independent onset estimate: a spread factor
    (1 + theta) in area is a gap ln(1 + theta) in entropy.
    """
    tracked = [r for r in report.rows if r["index"] >= 0]
    tracked.sort(key=lambda r: r["index"])
    n = len(tracked)
    unmatched = np.array([r["index"] not in fs.matching for r in tracked])
    with np.errstate(invalid="ignore"):
        ipn_flag = np.array([
            (not np.isnan(r["ipn_floquet"]))
            and r["ipn_floquet"] / r["ipn_eff"] - 1.0 > theta
            for r in tracked])
        wehrl_flag = np.array([
            (not np.isnan(r["wehrl_floquet"]))
            and r["wehrl_floquet"] - r["wehrl_eff"] > np.log1p(theta)
            for r in tracked])

    loc_flags = ipn_flag | unmatched
    chaotic = unmatched.copy()
    for i in range(n):
        if not ipn_flag[i]:
            continue
        w = loc_flags[i:min(i + window, n)]
        if np.count_nonzero(w) * 2 > len(w):
            chaotic[i] = True

    ipn_onset = _onset(loc_flags, window)
    wehrl_onset = _onset(wehrl_flag | unmatched, window)

    chaotic_floquet = [fs.matching[r["index"]][0]
                       for i, r in enumerate(tracked) if chaotic[i]
                       and r["index"] in fs.matching]
    extras = [-(r["index"] + 1) for r in report.rows if r["index"] < 0]
    chaotic_floquet.extend(extras)

    evidence = [{**r, "chaotic": bool(chaotic[i])}
                for i, r in enumerate(tracked)]
    return ChaoticClassification(
        chaotic=chaotic, ipn_onset=ipn_onset, wehrl_onset=wehrl_onset,
        chaotic_floquet=sorted(set(chaotic_floquet)),
        n_chaotic=len(set(chaotic_floquet)), evidence=evidence,
        meta={"theta": theta, "window": window,
              "onset_consistent": ipn_onset >= 0 and wehrl_onset >= 0
              and abs(ipn_onset - wehrl_onset) <= 2})


@dataclass
class ChaoticProjector:
    """Orthogonal projector onto the chaotic Floquet subspace."""

    op: FockOperator
    rank: int


def build_projector(modes):
    """Projector from a (dim, k) stack of orthonormal mode columns.

    Raises ClassificationError if the columns fail orthonormality at 1e-10;
    that means upstream rotation/pullback lost unitarity and the projector
    would not be idempotent.
    """
    modes = np.asarray(modes, dtype=complex)
    if modes.ndim != 2 or modes.shape[1] == 0:
        raise ClassificationError("projector needs at least one mode column")
    gram = modes.conj().T @ modes
    defect = np.abs(gram - np.eye(modes.shape[1])).max()
    if defect > 1e-10:
        raise ClassificationError(
            f"chaotic modes are not orthonormal (defect {defect:.2e})")
    p = modes @ modes.conj().T
    return ChaoticProjector(
        op=FockOperator(modes.shape[0], p, hermitian=True,
                        meta={"gram_defect": float(defect)}),
        rank=modes.shape[1])


def fgr_rate(u_eff, psi0, projector):
    """One-period leak amplitude gamma0 = |P U_eff psi0| into the chaotic span.

    All three arguments live in the same (effective) basis; u_eff is the
    period propagator pulled back through the frame map.
    """
    u = u_eff.matrix if isinstance(u_eff, FockOperator) else np.asarray(u_eff)
    return float(np.linalg.norm(projector.op.matrix @ (u @ psi0)))


def splitting_from_rate(gamma0, tau, fgr_period="tau"):
    """Golden-rule splitting estimate from the per-period leak amplitude.

    The default attributes the leak to one map period; "2tau" halves it for
    the convention where the amplitude builds up over a full parity cycle.
    """
    if fgr_period not in ("tau", "2tau"):
        raise ValueError("fgr_period must be 'tau' or '2tau'")
    return gamma0 / tau if fgr_period == "tau" else gamma0 / (2.0 * tau)


def heisenberg_flag(gamma0, tau, omegad, n_chaotic):
    """True when the leak cannot resolve the chaotic spacing before t_H.

    The chaotic quasienergy spacing is (omegad/2)/N_ch on the Floquet
    circle; with t_H = 1/spacing, gamma0 t_H / tau < 1 means less than one
    quantum of amplitude leaks before recurrences set in and the golden
    rule is not self-consistent.
    """
    if n_chaotic <= 0:
        return True
    t_h = 1.0 / ((0.5 * omegad) / n_chaotic)
    return bool(gamma0 * t_h / tau < 1.0)


# eta = sqrt(2 (1 - ln 2)): the uniform-asymptotic variable of Q(s, 2s)
_ETA = np.sqrt(2.0 * (1.0 - np.log(2.0)))


def _log_qratio(s):
    """log of Gamma(s, 2s)/Gamma(s+1) = gammaincc(s, 2s)/s, underflow-safe."""
    g = gammaincc(s, 2.0 * s)
    if g > 1e-280:
        return np.log(g) - np.log(s)
    # Temme's uniform expansion of Q(a, x) at x = 2a, through erfcx so the
    # Gaussian factor stays in the exponent
    y = _ETA * np.sqrt(0.5 * s)
    corr = (1.0 - 1.0 / _ETA) / np.sqrt(2.0 * np.pi * s)
    return -y * y + np.log(0.5 * erfcx(y) + corr) - np.log(s)


def semiclassical_splitting(area, c0, hbar=1.0):
    """Eq.-form splitting c0 hbar Gamma(s, 2s)/Gamma(s+1) with s = A/(pi hbar).

    A vanished island (area 0) has no action barrier left; the formula
    diverges there, returned as inf so overflow is visible downstream.
    """
    if area < 0.0:
        raise ValueError("area must be nonnegative")
    if area == 0.0:
        return np.inf
    s = area / (np.pi * hbar)
    return c0 * hbar * np.exp(_log_qratio(s))


@dataclass(frozen=True)
class SemiclassicalModel:
    """Calibrated semiclassical splitting curve."""

    c0: float
    hbar: float = 1.0
    area_source: str = "island"

    def predict(self, area):
        return semiclassical_splitting(area, self.c0, self.hbar)


def fit_c0(areas, splittings, hbar=1.0, area_source="island"):
    """Fit the prefactor c0 from (area, splitting) pairs in log space.

    ln c0 is the mean log-offset between measured splittings and the
    unit-prefactor formula.  Needs >= 3 finite pairs spanning distinct
    areas; a degenerate area set cannot anchor the curve shape.
    Returns (model, residuals) with residuals in log space.
    """
    areas = np.asarray(areas, dtype=float)
    splittings = np.asarray(splittings, dtype=float)
    good = (areas > 0.0) & (splittings > 0.0) & np.isfinite(splittings)
    if np.count_nonzero(good) < 3:
        raise FitError("need at least 3 usable (area, splitting) pairs")
    a = areas[good]
    de = splittings[good]
    if a.max() - a.min() < 1e-9 * max(a.max(), 1.0):
        raise FitError("degenerate island areas cannot constrain the fit")
    logq = np.array([_log_qratio(x / (np.pi * hbar)) for x in a])
    offs = np.log(de) - (np.log(hbar) + logq)
    logc0 = float(np.mean(offs))
    residuals = offs - logc0
    model = SemiclassicalModel(c0=float(np.exp(logc0)), hbar=hbar,
                               area_source=area_source)
    return model, residuals
