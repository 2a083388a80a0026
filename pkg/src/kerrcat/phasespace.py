"""Husimi distributions and phase-space localization functionals.

Conventions: x = sqrt(2) Re(alpha), p = sqrt(2) Im(alpha), so the coherent
label of a grid point is alpha = (x + i p)/sqrt(2) and the normalized
distribution is Q(x, p) = |<alpha|psi>|^2 / (2 pi) with
integral Q dx dp = 1.  Grids are square and symmetric about the origin.

The overlap kernel uses *unnormalized* truncated coherent rows: far outside
the occupied Fock window the truncated row has exponentially small norm and
contributes nothing, whereas renormalizing would amplify truncation garbage
in the grid corners (|alpha|^2 there can exceed the Fock cutoff by 2x).
"""

import numpy as np
from dataclasses import dataclass, field

from .errors import WindowError

# rows of the kernel matrix are processed in chunks of this many grid points
# to keep the (chunk x dim) workspace in cache-friendly territory
_CHUNK_ROWS = 8192

RING_MASS_TOL = 1e-4


@dataclass(frozen=True)
class GridSpec:
    """Square phase-space window [-extent, extent]^2 with resolution^2 points."""

    extent: float
    resolution: int = 256

    def __post_init__(self):
        if self.extent <= 0.0:
            raise WindowError("grid extent must be positive")
        if self.resolution < 8:
            raise WindowError("grid resolution must be at least 8")

    @classmethod
    def for_params(cls, params, factor=1.5, resolution=256):
        """Window scaled to the separatrix tip x_sep = sqrt(2(delta+2eps2)/K)."""
        x_sep = np.sqrt(2.0 * (params.delta + 2.0 * params.eps2) / params.K)
        return cls(extent=factor * x_sep, resolution=resolution)

    @classmethod
    def for_fock(cls, n_max, margin=1.2, resolution=256):
        """Window covering the turning radius sqrt(2(2n+1)) of Fock state n_max.

        Localization comparisons over a retained subspace need this rather
        than for_params: the high rungs live well outside the separatrix.
        """
        return cls(extent=margin * np.sqrt(2.0 * (2.0 * n_max + 1.0)),
                   resolution=resolution)

    @classmethod
    def for_states(cls, states, resolution=256, floor=0.0):
        """Window sized to the occupied Fock window of the given column states."""
        ext = _suggest_extent(np.asarray(states, dtype=complex))
        return cls(extent=max(ext, floor), resolution=resolution)

    @property
    def axis(self):
        return np.linspace(-self.extent, self.extent, self.resolution)

    @property
    def step(self):
        return 2.0 * self.extent / (self.resolution - 1)


@dataclass
class HusimiGrid:
    """Sampled Q(x, p); q[i, j] = Q(xs[j], ps[i]) (row index is p)."""

    xs: np.ndarray
    ps: np.ndarray
    q: np.ndarray
    dx: float
    dp: float

    @property
    def mass(self):
        return float(self.q.sum() * self.dx * self.dp)


def _coherent_rows(alphas, dim):
    """<alpha|_n kernel rows for a flat array of labels, unnormalized.

    Log-domain magnitude recursion avoids overflow of alpha^n/sqrt(n!) for
    the large |alpha| that occur in grid corners.
    """
    n = np.arange(dim, dtype=float)
    r = np.abs(alphas)
    th = np.angle(alphas)
    logfact = np.concatenate(([0.0], np.cumsum(np.log(n[1:]))))
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.where(r > 0.0, np.log(r), -np.inf)
        logmag = (-0.5 * r[:, None] ** 2) + n[None, :] * logr[:, None] \
            - 0.5 * logfact[None, :]
        rows = np.exp(logmag) * np.exp(-1j * th[:, None] * n[None, :])
    if np.any(r == 0.0):
        rows[r == 0.0] = 0.0
        rows[r == 0.0, 0] = 1.0
    return rows


def _suggest_extent(states):
    """Window that would cover the occupied Fock window of the given states."""
    pops = (np.abs(states) ** 2).sum(axis=1) if states.ndim == 2 else np.abs(states) ** 2
    pops = pops / pops.sum()
    n99 = int(np.searchsorted(np.cumsum(pops), 0.99))
    return 1.2 * np.sqrt(2.0 * (2.0 * n99 + 1.0))


def _edge_mass_fraction(states, grid):
    """Probability mass on the outermost grid ring, per state (column)."""
    ax = grid.axis
    edge_pts = []
    for v in (ax[0], ax[-1]):
        edge_pts.append(np.stack([ax, np.full_like(ax, v)], axis=1))
        edge_pts.append(np.stack([np.full_like(ax[1:-1], v), ax[1:-1]], axis=1))
    pts = np.concatenate(edge_pts)
    alphas = (pts[:, 0] + 1j * pts[:, 1]) / np.sqrt(2.0)
    rows = _coherent_rows(alphas, states.shape[0])
    q = np.abs(rows @ states) ** 2 / (2.0 * np.pi)
    return q.sum(axis=0) * grid.step**2


def _functionals_pass(states, grid):
    """Single pass over the grid: mass, inverse participation, Wehrl entropy.

    states has one column per state.  Totals are accumulated chunk by chunk
    so the full (resolution^2 x dim) kernel never materializes.
    """
    dim, nstates = states.shape
    ax = grid.axis
    da = grid.step**2
    m = np.zeros(nstates)
    q2 = np.zeros(nstates)
    qlogq = np.zeros(nstates)
    xg, pg = np.meshgrid(ax, ax)
    alphas = ((xg + 1j * pg) / np.sqrt(2.0)).ravel()
    for lo in range(0, alphas.size, _CHUNK_ROWS):
        rows = _coherent_rows(alphas[lo:lo + _CHUNK_ROWS], dim)
        q = np.abs(rows @ states) ** 2 / (2.0 * np.pi)
        m += q.sum(axis=0) * da
        q2 += (q**2).sum(axis=0) * da
        with np.errstate(divide="ignore", invalid="ignore"):
            ql = np.where(q > 0.0, q * np.log(q), 0.0)
        qlogq += ql.sum(axis=0) * da
    ipn_v = m**2 / q2
    wehrl_v = -(qlogq / m - np.log(m))
    return m, ipn_v, wehrl_v


def husimi(state, grid):
    """Husimi distribution of a Fock-basis state on the grid.

    Raises WindowError when more than RING_MASS_TOL of the mass sits on the
    boundary ring, which means the window clips the state; the suggested
    extent in the message covers the occupied Fock window.  The returned
    grid is renormalized to unit mass exactly.
    """
    state = np.asarray(state, dtype=complex)
    dim = state.shape[0]
    ax = grid.axis
    ring = _edge_mass_fraction(state[:, None], grid)[0]
    xg, pg = np.meshgrid(ax, ax)
    alphas = ((xg + 1j * pg) / np.sqrt(2.0)).ravel()
    q = np.empty(alphas.size)
    for lo in range(0, alphas.size, _CHUNK_ROWS):
        rows = _coherent_rows(alphas[lo:lo + _CHUNK_ROWS], dim)
        q[lo:lo + _CHUNK_ROWS] = np.abs(rows @ state) ** 2 / (2.0 * np.pi)
    q = q.reshape(grid.resolution, grid.resolution)
    total = q.sum() * grid.step**2
    if total <= 0.0:
        raise WindowError("state has no support inside the grid window")
    if ring / total > RING_MASS_TOL:
        raise WindowError(
            f"boundary ring holds {ring / total:.2e} of the Husimi mass; "
            f"enlarge the window to extent >= {_suggest_extent(state):.1f}"
        )
    q /= total
    return HusimiGrid(xs=ax, ps=ax, q=q, dx=grid.step, dp=grid.step)


def ipn(hg):
    """Inverse participation number integral (Q dx dp)^2 / integral Q^2 dx dp.

    The phase-space area occupied by the state; a coherent state gives the
    minimal value 4 pi, and spreading over k wells (or a chaotic sea)
    scales it by roughly k.
    """
    da = hg.dx * hg.dp
    m = hg.q.sum() * da
    return float(m**2 / ((hg.q**2).sum() * da))


def wehrl_entropy(hg):
    """Wehrl entropy -integral Q ln Q dx dp, >= 1 + ln(2 pi) (Lieb bound)."""
    da = hg.dx * hg.dp
    m = hg.q.sum() * da
    with np.errstate(divide="ignore", invalid="ignore"):
        ql = np.where(hg.q > 0.0, hg.q * np.log(hg.q), 0.0)
    return float(-(ql.sum() * da / m - np.log(m)))


@dataclass
class LocalizationReport:
    """Per-state localization functionals, effective vs Floquet.

    rows[i] has keys index, ipn_eff, ipn_floquet, wehrl_eff, wehrl_floquet,
    fidelity.  Negative index rows are unmatched Floquet modes living in the
    retained subspace (the effective-side fields are NaN there).
    """

    rows: list
    grid: GridSpec
    meta: dict = field(default_factory=dict)


def localization_compare(eff, fs, frame, grid, n_track, extras_cap=None):
    """Compare localization of effective states and their Floquet partners.

    Floquet modes are pulled back through the frame map so both columns are
    evaluated in the effective frame on the same grid.  Tracked effective
    indices without a Floquet partner get NaN Floquet fields; unmatched
    Floquet modes overlapping the tracked subspace by more than 1/2 are
    appended with index -(k+1) (k the Floquet index), capped at extras_cap
    (default n_track).

    Raises WindowError if any evaluated state leaks past the grid boundary.
    """
    n_track = min(n_track, len(eff.energies))
    extras_cap = n_track if extras_cap is None else extras_cap
    eff_states = eff.states[:, :n_track]

    extras = []
    if fs.unmatched:
        sub = eff_states.conj().T @ frame.pullback_states(
            fs.modes[:, fs.unmatched])
        overlap = (np.abs(sub) ** 2).sum(axis=0)
        order = np.argsort(overlap)[::-1]
        extras = [fs.unmatched[k] for k in order[:extras_cap]
                  if overlap[k] > 0.5]

    cols = [eff_states]
    ncol = n_track  # running column offset into the concatenated block
    fl_cols = np.full(n_track, -1, dtype=int)
    for i in range(n_track):
        if i in fs.matching:
            fl_cols[i] = ncol
            ncol += 1
            cols.append(frame.pullback_states(
                fs.modes[:, fs.matching[i][0]])[:, None])
    ex_cols = {}
    for k in extras:
        ex_cols[k] = ncol
        ncol += 1
        cols.append(frame.pullback_states(fs.modes[:, k])[:, None])
    stacked = np.concatenate(cols, axis=1)

    ring = _edge_mass_fraction(stacked, grid)
    mass, ipn_v, wehrl_v = _functionals_pass(stacked, grid)
    if np.any(ring / mass > RING_MASS_TOL):
        bad = int(np.argmax(ring / mass))
        raise WindowError(
            f"state column {bad} leaks {ring[bad] / mass[bad]:.2e} past the "
            f"grid; enlarge the window to extent >= "
            f"{_suggest_extent(stacked.T):.1f}"
        )

    rows = []
    for i in range(n_track):
        j = fl_cols[i]
        rows.append({
            "index": i,
            "ipn_eff": float(ipn_v[i]),
            "ipn_floquet": float(ipn_v[j]) if j >= 0 else np.nan,
            "wehrl_eff": float(wehrl_v[i]),
            "wehrl_floquet": float(wehrl_v[j]) if j >= 0 else np.nan,
            "fidelity": float(fs.matching[i][1]) if i in fs.matching else np.nan,
        })
    for k, j in ex_cols.items():
        rows.append({
            "index": -(k + 1),
            "ipn_eff": np.nan,
            "ipn_floquet": float(ipn_v[j]),
            "wehrl_eff": np.nan,
            "wehrl_floquet": float(wehrl_v[j]),
            "fidelity": np.nan,
        })
    return LocalizationReport(rows=rows, grid=grid,
                              meta={"n_track": n_track, "extras": extras})
