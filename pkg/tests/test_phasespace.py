"""Husimi distributions, phase-space functionals, localization comparison."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kerrcat.errors import WindowError
from kerrcat.fockspace import (EffectiveParams, build_effective_hamiltonian,
                               coherent_state, eigendecompose)
from kerrcat.phasespace import (GridSpec, GridSpec as GS, husimi, ipn,
                                localization_compare, wehrl_entropy)

LN2PI = np.log(2.0 * np.pi)


def _coherent_grid(alpha, dim=60, res=256):
    grid = GridSpec(extent=10.0, resolution=res)
    return husimi(coherent_state(alpha, dim), grid)


def test_husimi_normalized_and_positive():
    hg = _coherent_grid(1.0 + 0.5j)
    assert_allclose(hg.q.sum() * hg.dx * hg.dp, 1.0, atol=1e-12)
    assert hg.q.min() >= 0.0


def test_husimi_peak_location():
    alpha = 1.2 - 0.7j
    hg = _coherent_grid(alpha)
    i, j = np.unravel_index(np.argmax(hg.q), hg.q.shape)
    # x = sqrt2 Re alpha, p = sqrt2 Im alpha
    assert abs(hg.xs[j] - np.sqrt(2.0) * alpha.real) < 2.5 * hg.dx
    assert abs(hg.ps[i] - np.sqrt(2.0) * alpha.imag) < 2.5 * hg.dp


def test_husimi_value_oracle():
    # Q(x, p) = |<alpha|psi>|^2 / (2 pi) checked pointwise against a direct
    # overlap with the coherent state labelled by the grid node
    params = EffectiveParams(K=1e-3, eps2=4e-3, delta=0.6e-3)
    spec = eigendecompose(build_effective_hamiltonian(params, 40))
    psi = spec.states[:, 0]
    grid = GridSpec(extent=8.0, resolution=64)
    hg = husimi(psi, grid)
    for (x, p) in ((1.2, 0.4), (-2.0, 1.0), (3.1, -1.5)):
        j = np.argmin(np.abs(hg.xs - x))
        i = np.argmin(np.abs(hg.ps - p))
        alpha = (hg.xs[j] + 1j * hg.ps[i]) / np.sqrt(2.0)
        ov = np.vdot(coherent_state(alpha, 40), psi)
        # q is renormalized to unit mass; window tail perturbs at ~1e-9
        assert_allclose(hg.q[i, j], abs(ov) ** 2 / (2.0 * np.pi), rtol=1e-6)


def test_coherent_ipn_wehrl_oracles():
    # IPN of any coherent state is 4 pi; Wehrl entropy is 1 + ln 2 pi
    for alpha in (0.0, 1.5, 2.0 - 1.0j):
        hg = _coherent_grid(alpha)
        assert_allclose(ipn(hg), 4.0 * np.pi, rtol=2e-3)
        assert_allclose(wehrl_entropy(hg), 1.0 + LN2PI, rtol=1e-3)


def test_cat_doublet_oracles():
    # a well-separated even cat has two half-weight lobes: IPN doubles to
    # 8 pi and the Wehrl entropy gains ln 2
    dim = 60
    alpha = 2.4
    v = coherent_state(alpha, dim) + coherent_state(-alpha, dim)
    v = v / np.linalg.norm(v)
    grid = GridSpec(extent=10.0, resolution=256)
    hg = husimi(v, grid)
    assert_allclose(ipn(hg), 8.0 * np.pi, rtol=2e-3)
    assert_allclose(wehrl_entropy(hg), 1.0 + LN2PI + np.log(2.0), rtol=1e-3)


def test_lieb_bound_random_states():
    # coherent states minimize the Wehrl entropy
    rng = np.random.default_rng(11)
    dim = 40
    grid = GridSpec.for_fock(dim - 1, resolution=128)
    floor = 1.0 + LN2PI
    for _ in range(50):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        v /= np.linalg.norm(v)
        assert wehrl_entropy(husimi(v, grid)) > floor - 1e-3


def test_displacement_invariance():
    from kerrcat.fockspace import displacement_operator
    rng = np.random.default_rng(5)
    v = rng.normal(size=12) + 1j * rng.normal(size=12)
    v /= np.linalg.norm(v)
    big = np.zeros(80, dtype=complex)
    big[:12] = v
    d = displacement_operator(1.1 + 0.3j, 80)
    grid = GridSpec(extent=14.0, resolution=256)
    h1, h2 = husimi(big, grid), husimi(d.matrix @ big, grid)
    assert_allclose(ipn(h2), ipn(h1), rtol=2e-3)
    assert_allclose(wehrl_entropy(h2), wehrl_entropy(h1), rtol=1e-3)


def test_grid_refinement():
    hg1 = _coherent_grid(1.0, res=192)
    hg2 = _coherent_grid(1.0, res=256)
    assert abs(ipn(hg1) / ipn(hg2) - 1.0) < 0.005
    assert abs(wehrl_entropy(hg1) / wehrl_entropy(hg2) - 1.0) < 0.005


def test_window_error_suggests_extent():
    with pytest.raises(WindowError) as exc:
        husimi(coherent_state(3.0, 60), GridSpec(extent=3.0, resolution=64))
    assert "extent" in str(exc.value)


def test_grid_constructors():
    params = EffectiveParams(K=1e-4, eps2=50e-4, delta=10e-4)
    g = GS.for_params(params)
    x_sep = np.sqrt(2.0 * (params.delta + 2.0 * params.eps2) / params.K)
    assert_allclose(g.extent, 1.5 * x_sep)
    g2 = GS.for_fock(66)
    assert_allclose(g2.extent, 1.2 * np.sqrt(2.0 * 133.0))
    g3 = GS.for_states(coherent_state(2.0, 40), floor=1.0)
    assert g3.extent >= np.sqrt(2.0) * 2.0
    with pytest.raises(WindowError):
        GridSpec(extent=-1.0)
    with pytest.raises(WindowError):
        GridSpec(extent=5.0, resolution=4)


def test_localization_compare_rows():
    from kerrcat.calibration import calibrate_drive
    from kerrcat.floquet import PropagatorOptions, match_states
    params = EffectiveParams(K=1e-3, eps2=4e-3, delta=0.6e-3)
    rep = calibrate_drive(params, 0.02, 1e-8, 40,
                          opts=PropagatorOptions(rel_tol=1e-12,
                                                 abs_tol=1e-12))
    eff = eigendecompose(build_effective_hamiltonian(params, 40))
    n_track = 10
    fs = match_states(eff, rep.spectrum, rep.frame, n_track=n_track)
    grid = GridSpec.for_fock(22, resolution=128)
    report = localization_compare(eff, fs, rep.frame, grid, n_track)
    tracked = [r for r in report.rows if r["index"] >= 0]
    assert [r["index"] for r in tracked] == list(range(n_track))
    for r in tracked:
        assert r["ipn_eff"] >= 4.0 * np.pi * 0.98
        if np.isfinite(r["ipn_floquet"]):
            # regular toy point: driven and static localization agree
            assert abs(r["ipn_floquet"] / r["ipn_eff"] - 1.0) < 0.1
            assert r["fidelity"] > 0.5
    extras = [r for r in report.rows if r["index"] < 0]
    for k, r in enumerate(extras):
        assert r["index"] == -(k + 1)
        assert np.isnan(r["ipn_eff"])
