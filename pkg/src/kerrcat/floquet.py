"""Lab-frame driven dynamics, Floquet spectra, and effective-state matching.

The lab Hamiltonian (angular frequencies, hbar = 1) is

    H(t) = omega0 a^dag a + g3 x^3 + g4 x^4 - i Omegad (a - a^dag) cos(omegad t)

with x = a + a^dag.  The drive period is T = 2 pi / omegad; the natural
stroboscopic period in the period-doubling regime is tau = 2T = 4 pi/omegad,
and H(t + T) = H(t) exactly, so U(tau) = U(T)^2 (used by default to halve the
integration cost).

Three propagators are provided:

* adaptive-runge-kutta: DOP853 on the interaction-picture system
  (phases exp(i omega0 n t) factored out).  Smooth one-step truncation error
  largely cancels between the two cat partners, which is what pushes the
  quasi-energy splitting floor to ~1e-8 K and below.
* adaptive-multistep: Adams (zvode) on the same interaction-picture system.
  Honors the classic choice for this problem; its error has a quasi-random
  parity-breaking component, so its splitting floor is markedly worse.
* fixed-magnus: 4th-order commutator-free Magnus with two banded matrix
  exponentials per step.  Fixed grid, exactly unitary factors; best floor.

Quasi-energies are e_k = -arg(lambda_k)/tau reduced to [0, omegad/2).
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import ode, solve_ivp
from scipy.linalg import eig_banded, schur

from .errors import ClassificationError, ConfigError, KerrcatError, PropagationError, QualityError
from .fockspace import FockOperator, annihilation, displacement_operator

INTEGRATOR_KINDS = ("adaptive-multistep", "adaptive-runge-kutta", "fixed-magnus")

# CF4 Gauss-Legendre nodes and weights (Blanes & Moan commutator-free scheme)
_CF4_C1 = 0.5 - math.sqrt(3.0) / 6.0
_CF4_C2 = 0.5 + math.sqrt(3.0) / 6.0
_CF4_X1 = (3.0 - 2.0 * math.sqrt(3.0)) / 12.0
_CF4_X2 = (3.0 + 2.0 * math.sqrt(3.0)) / 12.0


@dataclass(frozen=True)
class DriveParams:
    """Lab-frame drive parameterization (omega0, omegad, Omegad, g3, g4)."""

    omega0: float
    omegad: float
    Omegad: float
    g3: float
    g4: float

    def __post_init__(self):
        if not (self.omegad > 0):
            raise KerrcatError(f"omegad must be positive, got {self.omegad}")

    @property
    def tau(self):
        return 4.0 * np.pi / self.omegad


@dataclass(frozen=True)
class PropagatorOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = np.inf
    integrator_kind: str = "adaptive-runge-kutta"
    steps_per_period: int = 512  # fixed-magnus only, steps per drive period T

    def __post_init__(self):
        for name, v in (("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)):
            if not (0.0 < v <= 1e-6):
                raise ConfigError(f"{name} must lie in (0, 1e-6], got {v}")
        if self.integrator_kind not in INTEGRATOR_KINDS:
            raise ConfigError(
                f"integrator_kind must be one of {INTEGRATOR_KINDS}, got {self.integrator_kind!r}"
            )
        if self.steps_per_period < 16:
            raise ConfigError(f"steps_per_period must be >= 16, got {self.steps_per_period}")


@dataclass
class FloquetSpectrum:
    """Quasi-energies in [0, omegad/2), modes, and the effective matching.

    matching maps effective index -> (floquet index, fidelity); unmatched
    lists Floquet indices without an effective partner among the tracked set.
    """

    tau: float
    omegad: float
    quasienergies: np.ndarray
    modes: np.ndarray
    eigvals: np.ndarray
    defect: float = 0.0
    matching: dict = field(default_factory=dict)
    unmatched: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.modes.shape[0]


@dataclass(frozen=True)
class FrameMap:
    """Unitary taking effective-frame states into the lab frame.

    M = D(alpha0) R(pi/4) with R = diag(exp(i pi n/4)) and
    alpha0 = i Omegad omega0 / (omegad^2 - omega0^2), the linear response to
    the drive at the stroboscopic phase.  The pi/4 is the accumulated
    rotating-frame angle at t = 0 in this drive convention; the classical
    stroboscopic wells sit at +45 degrees, confirming the sign.
    """

    dim: int
    alpha0: complex
    rotation: float
    matrix: np.ndarray

    @classmethod
    def from_drive(cls, d, dim):
        alpha0 = 1j * d.Omegad * d.omega0 / (d.omegad**2 - d.omega0**2)
        rot = np.exp(1j * np.pi / 4.0 * np.arange(dim))
        m = displacement_operator(alpha0, dim).matrix * rot[None, :]
        return cls(dim, alpha0, np.pi / 4.0, m)

    @classmethod
    def identity(cls, dim):
        return cls(dim, 0.0 + 0.0j, 0.0, np.eye(dim, dtype=complex))

    def map_states(self, v):
        return self.matrix @ v

    def pullback_states(self, v):
        return self.matrix.conj().T @ v

    def pullback_operator(self, m):
        return self.matrix.conj().T @ m @ self.matrix


def _hermitize(m):
    return 0.5 * (m + m.conj().T)


def _hamiltonian_parts(d, dim):
    """Static and drive-envelope parts: H(t) = Hs + cos(omegad t) Hd."""
    a = annihilation(dim).matrix
    ad = a.conj().T
    x = a + ad
    n = np.arange(dim)
    hs = np.diag(d.omega0 * n).astype(complex)
    if d.g3 != 0.0 or d.g4 != 0.0:
        x2 = x @ x
        hs += _hermitize(d.g3 * (x2 @ x) + d.g4 * (x2 @ x2))
    hd = -1j * d.Omegad * (a - ad)
    return hs, hd


def lab_hamiltonian(t, d, dim):
    """H(t) as a Hermitian FockOperator."""
    hs, hd = _hamiltonian_parts(d, dim)
    return FockOperator(dim, hs + np.cos(d.omegad * t) * hd, hermitian=True)


def _banded_lower(m, bw):
    dim = m.shape[0]
    b = np.zeros((bw + 1, dim), dtype=complex)
    for k in range(bw + 1):
        b[k, : dim - k] = np.diagonal(m, -k)
    return b


def _propagate_interaction(d, dim, opts, t_end):
    """Integrate i dV/dt = M(t) V in the picture with exp(i omega0 n t) removed."""
    hs, hd = _hamiltonian_parts(d, dim)
    n = np.arange(dim)
    hnl = hs - np.diag(d.omega0 * n)  # nonlinear remainder
    w0, wd = d.omega0, d.omegad

    def rhs(t, y):
        v = y.reshape(dim, dim)
        u = np.exp(1j * w0 * t * n)
        m = (hnl + np.cos(wd * t) * hd) * np.outer(u, u.conj())
        return (-1j * (m @ v)).ravel()

    y0 = np.eye(dim, dtype=complex).ravel()
    if opts.integrator_kind == "adaptive-multistep":
        r = ode(rhs)
        r.set_integrator(
            "zvode", method="adams", rtol=opts.rel_tol, atol=opts.abs_tol,
            max_step=opts.max_step if np.isfinite(opts.max_step) else 0.0, nsteps=10**7,
        )
        r.set_initial_value(y0, 0.0)
        y = r.integrate(t_end)
        if not r.successful():
            raise PropagationError("zvode failed before reaching the period")
        nfev = -1
    else:
        sol = solve_ivp(rhs, (0.0, t_end), y0, method="DOP853",
                        rtol=opts.rel_tol, atol=opts.abs_tol, max_step=opts.max_step)
        if not sol.success:
            raise PropagationError(f"DOP853 failed: {sol.message}")
        y = sol.y[:, -1]
        nfev = sol.nfev
    v = y.reshape(dim, dim)
    u = np.exp(-1j * w0 * t_end * n)[:, None] * v
    return u, nfev


def _propagate_cf4(d, dim, nsteps, t_end):
    """Commutator-free 4th-order Magnus on the banded lab Hamiltonian."""
    hs, hd = _hamiltonian_parts(d, dim)
    bs = _banded_lower(hs, 4)
    bd = _banded_lower(hd, 4)
    wd = d.omegad
    h = t_end / nsteps
    u = np.eye(dim, dtype=complex)
    for k in range(nsteps):
        t0 = k * h
        f1 = np.cos(wd * (t0 + _CF4_C1 * h))
        f2 = np.cos(wd * (t0 + _CF4_C2 * h))
        for w in (2.0 * (_CF4_X1 * f1 + _CF4_X2 * f2), 2.0 * (_CF4_X2 * f1 + _CF4_X1 * f2)):
            lam, v = eig_banded(bs + w * bd, lower=True)
            u = v @ (np.exp(-1j * (0.5 * h) * lam)[:, None] * (v.conj().T @ u))
    return u


def propagate_period(d, dim, opts=None, compose_half=True):
    """Propagator U(tau) over tau = 2T = 4 pi/omegad, column-batched.

    compose_half integrates one drive period T and squares (exact by
    T-periodicity of H); set False to integrate tau directly, e.g. to check
    the composition property.  The unitarity defect max|U^dag U - I| lands in
    meta["defect"]; above 1e-6 it is a QualityError.
    """
    opts = opts or PropagatorOptions()
    tau = d.tau
    t_end = 0.5 * tau if compose_half else tau
    if opts.integrator_kind == "fixed-magnus":
        nsteps = opts.steps_per_period if compose_half else 2 * opts.steps_per_period
        if np.isfinite(opts.max_step):
            nsteps = max(nsteps, int(np.ceil(t_end / opts.max_step)))
        u = _propagate_cf4(d, dim, nsteps, t_end)
        nfev = 2 * nsteps
    else:
        u, nfev = _propagate_interaction(d, dim, opts, t_end)
    if compose_half:
        u = u @ u
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(dim))))
    if not np.isfinite(defect) or defect > 1e-6:
        raise QualityError(f"unitarity defect {defect:.3e} exceeds 1e-6")
    meta = {
        "defect": defect,
        "nfev": nfev,
        "integrator_kind": opts.integrator_kind,
        "rel_tol": opts.rel_tol,
        "abs_tol": opts.abs_tol,
        "compose_half": compose_half,
        "tau": tau,
    }
    return FockOperator(dim, u, unitary=defect < 1e-9, meta=meta)


def circle_diff(x, modulus):
    """Signed difference reduced to [-modulus/2, modulus/2)."""
    return (x + 0.5 * modulus) % modulus - 0.5 * modulus


def floquet_spectrum(u, tau, omegad):
    """Eigenphases of U via a complex Schur decomposition.

    Schur vectors are orthonormal even inside numerically degenerate
    clusters, which keeps matching fidelities meaningful there.  Modes are
    returned sorted by quasi-energy.
    """
    if not u.unitary:
        raise QualityError(
            "floquet_spectrum requires the unitary flag "
            f"(defect {u.meta.get('defect', float('nan')):.3e} too large)"
        )
    t, z = schur(np.asarray(u.matrix), output="complex")
    lam = np.diag(t).copy()
    qe = (-np.angle(lam) / tau) % (0.5 * omegad)
    order = np.argsort(qe, kind="stable")
    return FloquetSpectrum(
        tau=tau,
        omegad=omegad,
        quasienergies=qe[order],
        modes=np.ascontiguousarray(z[:, order]),
        eigvals=lam[order],
        defect=float(u.meta.get("defect", 0.0)),
    )


def _parity_clusters(qe, omegad, tau, defect):
    """Runs of circle-adjacent quasi-energies closer than the noise scale.

    The phase-gap threshold scales with the propagator defect; a pair split
    only by integration noise must be treated as one degenerate cluster so
    its parity basis can be restored.  The run may wrap around the
    [0, omegad/2) branch point.
    """
    n = len(qe)
    if n < 2:
        return []
    half = 0.5 * omegad
    tol = max(100.0 * defect, 1e-12) / tau  # phase tolerance -> quasi-energy
    gaps = np.empty(n)
    gaps[: n - 1] = np.diff(qe)
    gaps[n - 1] = qe[0] + half - qe[n - 1]  # wrap gap across the branch point
    small = gaps < tol
    if not small.any():
        return []
    if small.all():
        return [list(range(n))]
    # walk edges starting right after a known-open gap so no run straddles the start
    start = int(np.argmin(small))
    clusters = []
    run = None
    for off in range(n):
        e = (start + 1 + off) % n
        if small[e]:
            if run is None:
                run = [e]
            run.append((e + 1) % n)
        elif run is not None:
            clusters.append(run)
            run = None
    if run is not None:
        clusters.append(run)
    return clusters


def _rotate_cluster(modes, eigvals, members, parity_lab, leak_tol=0.25):
    """Restore the parity eigenbasis inside a degenerate cluster.

    Any unitary mix of a noise-degenerate doublet is an eigenbasis of U to
    working precision, but only the parity eigenvectors match the cat states.
    Gate on the leak of the transformed parity out of the cluster subspace so
    genuinely split (non-degenerate) clusters are left untouched.
    """
    q = modes[:, members]
    psub = q.conj().T @ parity_lab @ q
    leak = np.linalg.norm(parity_lab @ q - q @ psub) / np.sqrt(len(members))
    if leak >= leak_tol:
        return False
    _, s = np.linalg.eigh(_hermitize(psub))
    modes[:, members] = q @ s
    # reassign eigenvalues by dominant overlap with the original columns
    perm = np.argmax(np.abs(s), axis=0)
    if len(set(perm.tolist())) == len(members):
        eigvals[members] = eigvals[np.asarray(members)[perm]]
    return True


def match_states(eff, fs, frame=None, f_min=0.5, seed_modes=None, n_track=None):
    """Greedy injective matching of effective eigenstates to Floquet modes.

    Effective states are mapped into the lab frame (frame=None means the
    identity, for propagators built directly from H_eff).  With seed_modes
    (lab-frame mode columns from the previous sweep point, keyed by effective
    index) the match fidelity is computed against those instead, which is the
    iterative continuation that prevents label swaps across avoided
    crossings; reported fidelities are always against the effective states.

    Near-ties (two candidate fidelities within 1e-3) are flagged and resolved
    by quasi-energy proximity to the expected position.  Returns a new
    FloquetSpectrum with matching filled and parity-canonicalized modes.
    """
    dim = fs.dim
    if eff.states.shape[0] != dim:
        raise KerrcatError("effective spectrum and Floquet spectrum dims differ")
    frame = frame if frame is not None else FrameMap.identity(dim)
    n_track = min(n_track or dim, dim, len(eff.energies))
    half = 0.5 * fs.omegad

    qe = fs.quasienergies.copy()
    modes = fs.modes.copy()
    eigvals = fs.eigvals.copy()
    parity_diag = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    parity_lab = (frame.matrix * parity_diag[None, :]) @ frame.matrix.conj().T
    rotated = []
    for members in _parity_clusters(qe, fs.omegad, fs.tau, fs.defect):
        if _rotate_cluster(modes, eigvals, members, parity_lab):
            rotated.append(members)

    mapped = frame.map_states(eff.states[:, :n_track])
    fid_eff = np.abs(mapped.conj().T @ modes) ** 2
    fid_match = fid_eff
    if seed_modes is not None:
        fid_match = fid_eff.copy()
        for i, col in seed_modes.items():
            if i < n_track:
                fid_match[i] = np.abs(col.conj() @ modes) ** 2

    matching = {}
    used = set()
    ambiguous = []
    anchor = None  # first assigned effective index, the expected-position reference
    flat = np.argsort(fid_match, axis=None)[::-1]
    rows, cols = np.unravel_index(flat, fid_match.shape)
    for i, k in zip(rows, cols):
        f = fid_match[i, k]
        if f < f_min:
            break
        if i in matching or k in used:
            continue
        free = [kk for kk in np.where(fid_match[i] >= f - 1e-3)[0] if kk not in used]
        if len(free) > 1 and anchor is not None:
            ambiguous.append(int(i))
            expected = (qe[matching[anchor][0]]
                        + (eff.energies[i] - eff.energies[anchor])) % half
            k = min(free, key=lambda kk: abs(circle_diff(qe[kk] - expected, half)))
        matching[int(i)] = (int(k), float(min(fid_eff[i, k], 1.0)))
        used.add(int(k))
        if anchor is None:
            anchor = int(i)
    unmatched = sorted(set(range(dim)) - used)

    return FloquetSpectrum(
        tau=fs.tau, omegad=fs.omegad, quasienergies=qe, modes=modes, eigvals=eigvals,
        defect=fs.defect, matching=matching, unmatched=unmatched,
        meta={**fs.meta, "ambiguous": ambiguous, "rotated_clusters": rotated,
              "n_track": n_track, "f_min": f_min, "seeded": seed_modes is not None},
    )


def quasienergy_splitting(fs):
    """Ground-doublet splitting: minimal circle distance of e_1 - e_0."""
    if 0 not in fs.matching or 1 not in fs.matching:
        raise ClassificationError(
            "quasienergy_splitting needs matched effective indices 0 and 1"
        )
    q0 = fs.quasienergies[fs.matching[0][0]]
    q1 = fs.quasienergies[fs.matching[1][0]]
    half = 0.5 * fs.omegad
    d = abs(circle_diff(q1 - q0, half))
    return min(d, half - d)
