"""Static effective Hamiltonian, eigensystem ordering, coherent states."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kerrcat.errors import TruncationError
from kerrcat.fockspace import (EffectiveParams, annihilation,
                               build_effective_hamiltonian, coherent_state,
                               displacement_operator, eigendecompose,
                               number_operator, parity_operator)

FIG1 = EffectiveParams(K=1e-4, eps2=50e-4, delta=10e-4)


def test_annihilation_algebra():
    a = annihilation(30).matrix
    comm = a @ a.conj().T - a.conj().T @ a
    # [a, a+] = 1 up to the truncation corner
    assert_allclose(comm[:-1, :-1], np.eye(29), atol=1e-14)
    assert_allclose(a.conj().T @ a, number_operator(30).matrix, atol=1e-14)


def test_effective_hamiltonian_matrix_elements():
    dim = 12
    params = EffectiveParams(K=0.7, eps2=1.3, delta=0.25)
    h = build_effective_hamiltonian(params, dim).matrix
    n = np.arange(dim)
    assert_allclose(np.diag(h), params.delta * n - params.K * n * (n - 1),
                    atol=1e-14)
    # two-photon drive couples n <-> n+2 with eps2 sqrt((n+1)(n+2))
    off = np.array([h[i, i + 2] for i in range(dim - 2)])
    assert_allclose(off, params.eps2 * np.sqrt((n[:-2] + 1) * (n[:-2] + 2)),
                    atol=1e-14)
    assert_allclose(h, h.conj().T, atol=1e-14)


def test_kerr_only_spectrum_order():
    # K-only: E_n = -K n(n-1); ordering is descending with the even member
    # of each degenerate pair first
    spec = eigendecompose(build_effective_hamiltonian(
        EffectiveParams(K=1.0, eps2=0.0, delta=0.0), 8))
    assert_allclose(spec.energies[:4], [0.0, 0.0, -2.0, -6.0], atol=1e-12)
    assert list(spec.parities[:2]) == [1, -1]
    assert np.all(np.diff(spec.energies) <= 1e-12)


def test_parity_labels_exact():
    spec = eigendecompose(build_effective_hamiltonian(FIG1, 250))
    p = parity_operator(250).matrix
    # parity-block diagonalization makes the labels exact, not just close
    for i in (0, 1, 2, 7, 120):
        v = spec.states[:, i]
        assert_allclose(v.conj() @ (p @ v), spec.parities[i], atol=1e-12)


def test_even_delta_ground_degeneracy():
    # delta/K = 10 puts the cat doublet at an exact degeneracy
    spec = eigendecompose(build_effective_hamiltonian(FIG1, 250))
    assert abs(spec.energies[0] - spec.energies[1]) < 1e-10 * FIG1.K
    assert spec.parities[0] == 1 and spec.parities[1] == -1


def test_top_energy_near_classical_well():
    # classical well top (delta + 2 eps2)^2 / 4K, quantum-shifted upward
    # by about half the secular frequency
    spec = eigendecompose(build_effective_hamiltonian(FIG1, 250))
    e_cl = (FIG1.delta + 2.0 * FIG1.eps2) ** 2 / (4.0 * FIG1.K)
    assert e_cl < spec.energies[0] < e_cl + 0.5 * np.sqrt(
        8.0 * FIG1.eps2 * (FIG1.delta + 2.0 * FIG1.eps2))


def test_eigendecompose_dual_route():
    # dense-eigensystem energies against an independent per-parity
    # tridiagonal route through scipy
    from scipy.linalg import eigh_tridiagonal
    params = EffectiveParams(K=1e-3, eps2=4e-3, delta=0.6e-3)
    dim = 40
    spec = eigendecompose(build_effective_hamiltonian(params, dim))
    h = build_effective_hamiltonian(params, dim).matrix.real
    merged = []
    for start in (0, 1):
        idx = np.arange(start, dim, 2)
        d = h[idx, idx]
        e = h[idx[:-1], idx[:-1] + 2]
        w = eigh_tridiagonal(d, e, eigvals_only=True)
        merged.extend(w)
    merged = np.sort(merged)[::-1]
    assert_allclose(spec.energies, merged, atol=1e-12 * np.abs(merged).max())


def test_states_orthonormal():
    spec = eigendecompose(build_effective_hamiltonian(FIG1, 120))
    g = spec.states.conj().T @ spec.states
    assert_allclose(g, np.eye(120), atol=1e-10)


def test_coherent_state_overlaps():
    dim = 60
    for a, b in ((0.3, 0.0), (1.2 + 0.4j, -0.5j), (2.0, 2.0)):
        va, vb = coherent_state(a, dim), coherent_state(b, dim)
        assert_allclose(np.linalg.norm(va), 1.0, atol=1e-12)
        expect = np.exp(-0.5 * abs(a - b) ** 2
                        + 1j * np.imag(np.conj(b) * a))
        assert_allclose(vb.conj() @ va, expect, atol=1e-10)


def test_coherent_state_truncation_guard():
    with pytest.raises(TruncationError):
        coherent_state(4.0, 20)


def test_displacement_operator():
    dim = 80
    alpha = 0.9 - 0.6j
    d = displacement_operator(alpha, dim)
    assert d.unitary
    assert_allclose(d.matrix @ np.eye(dim)[:, 0], coherent_state(alpha, dim),
                    atol=1e-10)
    d2 = displacement_operator(-alpha, dim)
    assert_allclose(d2.matrix @ d.matrix, np.eye(dim), atol=1e-9)


def test_hamiltonian_parity_commutes():
    h = build_effective_hamiltonian(FIG1, 250).matrix
    p = parity_operator(250).matrix
    scale = np.abs(h).max()
    assert np.abs(h @ p - p @ h).max() < 1e-12 * scale
