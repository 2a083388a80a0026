"""Truncated Fock-space operators and the static effective Hamiltonian.

The effective model is

    H_eff = delta * a^dag a - K * a^dag^2 a^2 + eps2 * (a^dag^2 + a^2)

with hbar = 1 and every frequency (K, eps2, delta, and the lab-frame set) in
one shared angular-frequency unit.  In the double-well regime
-2*eps2 < delta < 2*eps2 the top of the spectrum is a near-degenerate cat
doublet, so spectra here are sorted in *descending* energy: index 0 is the
even cat state, index 1 its odd partner.

State vectors are plain complex ndarrays normalized to 1; operators are
small dense complex matrices wrapped in FockOperator so the Hermitian and
unitary flags travel with them.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import KerrcatError, TruncationError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-9


@dataclass(frozen=True)
class FockOperator:
    """Dense N x N operator in the number basis with validity flags."""

    dim: int
    matrix: np.ndarray
    hermitian: bool = False
    unitary: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise KerrcatError(f"operator shape {m.shape} does not match dim {self.dim}")
        if self.hermitian:
            defect = np.max(np.abs(m - m.conj().T))
            if defect >= HERMITIAN_TOL:
                raise KerrcatError(f"hermitian flag set but max|M - M^dag| = {defect:.3e}")
        if self.unitary:
            defect = np.max(np.abs(m.conj().T @ m - np.eye(self.dim)))
            if defect >= UNITARY_TOL:
                raise KerrcatError(f"unitary flag set but max|M^dag M - I| = {defect:.3e}")
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class EffectiveParams:
    """Static-model parameters (K, eps2, delta), all angular frequencies."""

    K: float
    eps2: float
    delta: float

    def __post_init__(self):
        if not (self.K > 0 and np.isfinite(self.K)):
            raise KerrcatError(f"K must be positive and finite, got {self.K}")
        if not (np.isfinite(self.eps2) and np.isfinite(self.delta)):
            raise KerrcatError("eps2 and delta must be finite")

    def in_double_well(self):
        return -2.0 * self.eps2 < self.delta < 2.0 * self.eps2


@dataclass(frozen=True)
class Spectrum:
    """Eigenpairs sorted by descending energy; column k of states is state k.

    parities holds the exact +/-1 label when the Hamiltonian commutes with
    parity (block diagonalization), otherwise sign(<psi|P|psi>).
    """

    energies: np.ndarray
    states: np.ndarray
    parities: np.ndarray


def annihilation(dim):
    """Ladder operator a with <n-1|a|n> = sqrt(n)."""
    if dim < 2:
        raise KerrcatError(f"annihilation needs dim >= 2, got {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    n = np.arange(1, dim)
    m[n - 1, n] = np.sqrt(n)
    return FockOperator(dim, m)


def number_operator(dim):
    return FockOperator(dim, np.diag(np.arange(dim)).astype(complex), hermitian=True)


def parity_operator(dim):
    """P = exp(i pi a^dag a), diagonal (-1)^n."""
    if dim < 1:
        raise KerrcatError(f"parity_operator needs dim >= 1, got {dim}")
    d = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    return FockOperator(dim, np.diag(d).astype(complex), hermitian=True, unitary=True)


def coherent_state(alpha, dim):
    """Truncated coherent state, renormalized to 1.

    The cutoff must leave room for the Poisson tail: |alpha|^2 + 6|alpha| < dim
    keeps the truncated weight below ~1e-10.
    """
    alpha = complex(alpha)
    r = abs(alpha)
    need = r * r + 6.0 * r
    if need >= dim:
        raise TruncationError(
            f"coherent_state(|alpha|={r:.3f}) needs dim > {need:.1f}, got {dim}; "
            f"increase the Fock cutoff to at least {int(np.ceil(need)) + 1}"
        )
    n = np.arange(dim)
    if r == 0.0:
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0
        return psi
    # log-domain magnitudes avoid under/overflow of alpha^n / sqrt(n!)
    logmag = -0.5 * r * r + n * np.log(r)
    logmag[1:] -= 0.5 * np.cumsum(np.log(n[1:]))
    psi = np.exp(logmag) * np.exp(1j * n * np.angle(alpha))
    return psi / np.linalg.norm(psi)


@lru_cache(maxsize=8)
def _displacement_basis(dim):
    # eigenbasis of the Hermitian generator i(a^dag - a); exp of it is exactly
    # unitary, unlike a scaled-and-squared expm
    a = annihilation(dim).matrix
    g = 1j * (a.conj().T - a)
    mu, w = np.linalg.eigh(g)
    return mu, w


def displacement_operator(alpha, dim):
    """D(alpha) = exp(alpha a^dag - conj(alpha) a) on the truncated space."""
    alpha = complex(alpha)
    r, phi = abs(alpha), np.angle(alpha)
    mu, w = _displacement_basis(dim)
    core = (w * np.exp(-1j * r * mu)) @ w.conj().T  # exp(r (a^dag - a))
    rot = np.exp(1j * phi * np.arange(dim))
    m = rot[:, None] * core * rot.conj()[None, :]
    return FockOperator(dim, m, unitary=True)


def build_effective_hamiltonian(params, dim):
    """H_eff = delta n - K a^dag^2 a^2 + eps2 (a^dag^2 + a^2), Hermitian."""
    if dim < 4:
        raise KerrcatError(f"build_effective_hamiltonian needs dim >= 4, got {dim}")
    n = np.arange(dim)
    m = np.zeros((dim, dim), dtype=complex)
    m[n, n] = params.delta * n - params.K * n * (n - 1.0)
    k = np.arange(dim - 2)
    coup = params.eps2 * np.sqrt((k + 1.0) * (k + 2.0))
    m[k, k + 2] = coup
    m[k + 2, k] = coup
    return FockOperator(dim, m, hermitian=True)


def _fix_phases(states):
    # deterministic global phase: largest-magnitude component made real positive
    idx = np.argmax(np.abs(states), axis=0)
    piv = states[idx, np.arange(states.shape[1])]
    ph = piv / np.abs(piv)
    return states * ph.conj()[None, :]


def eigendecompose(h):
    """Full spectrum of a Hermitian FockOperator, descending energies.

    If H commutes with parity the even/odd blocks are diagonalized
    separately, which keeps near-degenerate cat doublets resolved to the
    block scale instead of the full-matrix scale and yields exact parity
    labels.  Degenerate pairs are ordered even (+1) first.
    """
    if not h.hermitian:
        raise KerrcatError("eigendecompose requires the hermitian flag")
    dim = h.dim
    m = h.matrix
    pdiag = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    comm = m * pdiag[None, :] - pdiag[:, None] * m
    scale = max(1.0, np.max(np.abs(m)))
    if np.max(np.abs(comm)) < 1e-12 * scale:
        energies = np.empty(dim)
        states = np.zeros((dim, dim), dtype=complex)
        parities = np.empty(dim, dtype=int)
        pos = 0
        for par in (0, 1):
            sel = np.arange(par, dim, 2)
            block = m[np.ix_(sel, sel)]
            if np.max(np.abs(block.imag)) < 1e-14 * scale:
                w, v = np.linalg.eigh(block.real)
                v = v.astype(complex)
            else:
                w, v = np.linalg.eigh(block)
            k = len(sel)
            energies[pos:pos + k] = w
            states[sel, pos:pos + k] = v
            parities[pos:pos + k] = 1 - 2 * par
            pos += k
    else:
        energies, states = np.linalg.eigh(m)
        parities = np.sign(np.real(np.einsum("ij,i,ij->j", states.conj(), pdiag, states))).astype(int)
    order = np.lexsort((-parities, -energies))
    return Spectrum(energies[order], _fix_phases(states[:, order]), parities[order])
