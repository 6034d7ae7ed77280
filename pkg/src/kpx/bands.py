"""Band structures E(alpha) over the first Brillouin zone and band edges."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .dispersion import (SolverConfig, dispersion_residual, oracle_energy_roots, residual_scale,
                         rhs)
from .errors import BranchDomainViolation, NoBandFound
from .model import Branch, CellGeometry, ModelKind, ModelParams, Sign

log = logging.getLogger(__name__)

TOUCH_GAP = 1e-9
_EPS = np.finfo(float).eps


@dataclass
class Band:
    bottom: float
    top: float
    touching_above: bool = False


@dataclass
class BandStructure:
    params: ModelParams
    branch: Branch | None
    window: tuple[float, float]
    alpha_grid: np.ndarray
    energies: list[np.ndarray]          # sorted roots per alpha
    band_index: list[np.ndarray]        # parallel to energies
    bands: list[Band] = field(default_factory=list)

    @property
    def edges(self) -> list[tuple[float, float]]:
        return [(b.bottom, b.top) for b in self.bands]

    def rows(self):
        """(alpha, band_index, E) triples in alpha-major order."""
        for al, Es, idx in zip(self.alpha_grid, self.energies, self.band_index):
            for E, i in zip(Es, idx):
                yield float(al), int(i), float(E)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "branch": self.branch.value if self.branch else None,
            "window": list(self.window),
            "alpha_grid": [float(a) for a in self.alpha_grid],
            "energies": [[float(E) for E in Es] for Es in self.energies],
            "band_index": [[int(i) for i in idx] for idx in self.band_index],
            "edges": [[b.bottom, b.top] for b in self.bands],
            "touching": [b.touching_above for b in self.bands],
        }


def default_window(params: ModelParams, branch: Branch | None = None) -> tuple[float, float]:
    V = params.V
    if params.kind is ModelKind.BARRIER:
        return 0.0, V
    if branch is Branch.WELL_NEGATIVE:
        return -V, 0.0
    if branch is Branch.WELL_POSITIVE:
        return 0.0, 3.0 * V
    return -V, 3.0 * V


def _check_window(params, branch, window):
    lo, hi = map(float, window)
    if not lo < hi:
        raise BranchDomainViolation(f"empty energy window ({lo!r}, {hi!r})")
    V = params.V
    if params.kind is ModelKind.BARRIER:
        if branch not in (None, Branch.BARRIER_GAP):
            raise BranchDomainViolation(f"branch {branch.value} does not exist for barriers")
        dom = (0.0, V)
    elif branch is Branch.WELL_NEGATIVE:
        dom = (-V, 0.0)
    elif branch is Branch.WELL_POSITIVE:
        dom = (0.0, math.inf)
    elif branch is None:
        dom = (-V, math.inf)
    else:
        raise BranchDomainViolation("barrier branch requested for a well model")
    if lo < dom[0] or hi > dom[1]:
        raise BranchDomainViolation(f"window ({lo!r}, {hi!r}) outside branch domain {dom}")
    return lo, hi


# --- allowed-energy predicate ----------------------------------------------------

def _residual_range(params, E, n_scan):
    """(min, max) over alpha in [0, pi/(a+b)] of the residual at each energy E."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    zone = math.pi / params.period
    grid = np.linspace(0.0, zone, n_scan)
    g = dispersion_residual(params, None, E[:, None], grid[None, :])
    lo, hi = g.min(axis=1), g.max(axis=1)
    if params.m1 == params.m2:
        return lo, hi
    # unequal masses can put extrema inside the zone; polish the grid extremum
    # wherever it decides the sign test
    for r in np.flatnonzero((lo > 0) | (hi < 0)):
        for sgn in (1.0, -1.0):
            row = sgn * g[r]
            pick = int(np.argmin(row))
            if row[pick] <= 0:
                continue
            if not 0 < pick < n_scan - 1:
                continue  # zone-edge extrema are attained exactly on the grid
            a0, a1 = grid[max(pick - 1, 0)], grid[min(pick + 1, n_scan - 1)]
            res = minimize_scalar(lambda al: sgn * dispersion_residual(params, None, E[r], al),
                                  bounds=(a0, a1), method="bounded", options={"xatol": 1e-14})
            if sgn > 0:
                lo[r] = min(lo[r], float(res.fun))
            else:
                hi[r] = max(hi[r], -float(res.fun))
    return lo, hi


def _state(params, Es, n_scan=512):
    """-1 where the residual is negative for every alpha, +1 where it is
    positive for every alpha, 0 in allowed bands."""
    if params.m1 == params.m2:
        r = np.asarray(rhs(params, Es, 0.0))
        return np.where(r > 1.0, -1, np.where(r < -1.0, 1, 0))
    lo, hi = _residual_range(params, Es, n_scan)
    return np.where(hi < 0.0, -1, np.where(lo > 0.0, 1, 0))


def _allowed_mask(params, Es, n_scan=512):
    return _state(params, Es, n_scan) == 0


def _allowed(params, E, n_scan=512) -> bool:
    return bool(_allowed_mask(params, np.atleast_1d(float(E)), n_scan)[0])


def _refine_edge(params, E_in, E_out, n_scan):
    """Boundary between an allowed energy E_in and a forbidden E_out."""
    if params.m1 == params.m2:
        r_out = rhs(params, E_out, 0.0)
        target = 1.0 if r_out > 1.0 else -1.0
        f = lambda E: rhs(params, E, 0.0) - target  # noqa: E731
        if f(E_in) == 0.0:
            return float(E_in)
        return float(brentq(f, min(E_in, E_out), max(E_in, E_out), xtol=1e-15,
                            rtol=4 * _EPS, maxiter=200))
    for _ in range(200):
        mid = 0.5 * (E_in + E_out)
        if mid in (E_in, E_out) or abs(E_out - E_in) <= 4 * _EPS * max(1.0, abs(mid)):
            break
        if _allowed(params, mid, n_scan):
            E_in = mid
        else:
            E_out = mid
    return float(E_in)


def _hidden_seed(params, E_a, s_a, E_b, n_scan):
    """An allowed energy between forbidden E_a and E_b lying on opposite sides.

    Both residual extrema are continuous in E, so a switch from one forbidden
    side to the other must cross an allowed band narrower than the grid step.
    """
    for _ in range(200):
        mid = 0.5 * (E_a + E_b)
        if mid in (E_a, E_b):
            return mid
        st = int(_state(params, np.array([mid]), n_scan)[0])
        if st == 0:
            return mid
        if st == s_a:
            E_a = mid
        else:
            E_b = mid
    return 0.5 * (E_a + E_b)


def allowed_bands(params: ModelParams, window: tuple[float, float], n_energy: int = 2000,
                  n_scan: int = 512) -> list[Band]:
    """Allowed energy intervals inside ``window``, edges refined.

    Bands narrower than the energy grid are caught by a change of forbidden
    side between neighbouring grid points.
    """
    lo, hi = window
    Es = np.linspace(lo, hi, n_energy)
    state = _state(params, Es, n_scan)
    bands = []
    i = 0
    while i < n_energy:
        if state[i] != 0:
            if i + 1 < n_energy and state[i] * state[i + 1] < 0:
                seed = _hidden_seed(params, Es[i], int(state[i]), Es[i + 1], n_scan)
                bands.append(Band(_refine_edge(params, seed, Es[i], n_scan),
                                  _refine_edge(params, seed, Es[i + 1], n_scan)))
            i += 1
            continue
        j = i
        while j + 1 < n_energy and state[j + 1] == 0:
            j += 1
        bottom = float(Es[i]) if i == 0 else _refine_edge(params, Es[i], Es[i - 1], n_scan)
        top = float(Es[j]) if j == n_energy - 1 else _refine_edge(params, Es[j], Es[j + 1], n_scan)
        bands.append(Band(bottom, top))
        i = j + 1
    for lower, upper in zip(bands, bands[1:]):
        lower.touching_above = upper.bottom - lower.top < TOUCH_GAP
    return bands


# --- roots in E at fixed alpha --------------------------------------------------

def _energy_roots(params, alpha, Es, g, tol):
    """Roots of the residual along one alpha column sampled at Es."""
    f = lambda E: dispersion_residual(params, None, E, alpha)  # noqa: E731
    roots = []
    for i in np.flatnonzero(g == 0.0):
        roots.append(float(Es[i]))
    for i in np.flatnonzero(g[:-1] * g[1:] < 0):
        roots.append(float(brentq(f, Es[i], Es[i + 1], xtol=tol, rtol=4 * _EPS, maxiter=200)))
    # tangential (double) roots, e.g. touching bands of a free particle
    g = np.asarray(g)
    inner = g[1:-1]
    cand = ((g[:-2] * inner > 0) & (inner * g[2:] > 0)
            & (np.abs(inner) <= np.abs(g[:-2])) & (np.abs(inner) <= np.abs(g[2:])))
    for i in np.flatnonzero(cand) + 1:
        E_t = _tangent_root(f, Es[i - 1], Es[i + 1])
        if E_t is None:
            continue
        f_t = f(E_t)
        if abs(f_t) <= 1e-10 * residual_scale(params, E_t, alpha):
            roots.append(E_t)
        elif f_t * inner[i - 1] < 0:
            # the extremum dips through zero: two roots closer than the grid step
            for lo, hi in ((Es[i - 1], E_t), (E_t, Es[i + 1])):
                if f(lo) * f(hi) < 0:
                    roots.append(float(brentq(f, lo, hi, xtol=tol, rtol=4 * _EPS, maxiter=200)))
    roots.sort()
    out = []
    for E in roots:
        if not out or E - out[-1] > 1e-10 * max(1.0, abs(E)):
            out.append(E)
    return out


def _tangent_root(f, lo, hi):
    """Stationary point of f in [lo, hi] from a central-difference derivative."""
    h = 1e-7 * max(1.0, abs(hi), abs(lo))
    df = lambda E: (f(E + h) - f(E - h)) / (2 * h)  # noqa: E731
    a, b = lo + h, hi - h
    try:
        if df(a) * df(b) > 0:
            return None
        return float(brentq(df, a, b, xtol=1e-15, rtol=4 * _EPS, maxiter=200))
    except (ValueError, RuntimeError):
        return None


def _branch_for_domain(params, window):
    if params.kind is ModelKind.BARRIER:
        return Branch.BARRIER_GAP
    lo, hi = window
    if hi <= 0:
        return Branch.WELL_NEGATIVE
    if lo >= 0:
        return Branch.WELL_POSITIVE
    return None


def band_structure(params: ModelParams, branch: Branch | None = None, n_alpha: int = 256,
                   E_window: tuple[float, float] | None = None, n_energy: int = 2000,
                   config: SolverConfig | None = None) -> BandStructure:
    """Band energies on a uniform alpha grid plus refined band edges.

    ``branch=None`` scans the whole model domain (for wells both signs of E,
    continuous through E = 0).
    """
    config = config or SolverConfig()
    if n_alpha < 2:
        raise BranchDomainViolation(f"need at least 2 alpha points, got {n_alpha}")
    branch = Branch(branch) if branch is not None else None
    window = _check_window(params, branch, E_window or default_window(params, branch))
    tol = config.tol * max(1.0, params.V)
    alphas = np.linspace(0.0, math.pi / params.period, n_alpha)
    Es = np.linspace(window[0], window[1], n_energy)
    G = dispersion_residual(params, None, Es[:, None], alphas[None, :])
    bands = allowed_bands(params, window, n_energy, config.n_scan)

    energies, indices = [], []
    for j, al in enumerate(alphas):
        roots = np.array(_energy_roots(params, al, Es, G[:, j], tol))
        idx = np.array([_band_of(bands, E) for E in roots], dtype=int)
        energies.append(roots)
        indices.append(idx)
    return BandStructure(params, branch or _branch_for_domain(params, window), window, alphas,
                         energies, indices, bands)


def _band_of(bands, E):
    for i, b in enumerate(bands):
        if b.bottom - 1e-9 <= E <= b.top + 1e-9:
            return i
    # only reachable when the edge predicate and the root scan disagree at grid level
    if not bands:
        log.warning("root E=%r found where no band was detected; adding it", E)
        bands.append(Band(E, E))
        return 0
    i = int(np.argmin([min(abs(E - b.bottom), abs(E - b.top)) for b in bands]))
    log.warning("root E=%r outside refined edges; widening band %d", E, i)
    bands[i].bottom = min(bands[i].bottom, E)
    bands[i].top = max(bands[i].top, E)
    return i


def band_edges(params: ModelParams, branch: Branch | None = None, band_index: int | None = None,
               seed_energy: float | None = None, E_window: tuple[float, float] | None = None,
               n_energy: int = 2000, n_scan: int = 512) -> tuple[float, float]:
    """(E_bottom, E_top) of the band with the given index or containing ``seed_energy``."""
    branch = Branch(branch) if branch is not None else None
    window = _check_window(params, branch, E_window or default_window(params, branch))
    bands = allowed_bands(params, window, n_energy, n_scan)
    if band_index is not None:
        if not 0 <= band_index < len(bands):
            raise NoBandFound(f"band {band_index} not in window (found {len(bands)})")
        b = bands[band_index]
        return b.bottom, b.top
    if seed_energy is None:
        raise ValueError("give band_index or seed_energy")
    for b in bands:
        if b.bottom <= seed_energy <= b.top:
            return b.bottom, b.top
    raise NoBandFound(f"E={seed_energy!r} lies in a gap")


def oracle_band_energies(params: ModelParams, geometry: CellGeometry, alpha: float,
                         E_window: tuple[float, float] | None = None, n_energy: int = 2000,
                         sign: Sign | None = None) -> list[float]:
    """Band energies at ``alpha`` from zeros of the matching determinant only.

    Well windows straddling E = 0 are split there, since the determinant
    degenerates identically at branch endpoints.
    """
    lo, hi = E_window or default_window(params)
    pieces = [(lo, hi)]
    if params.kind is ModelKind.WELL and lo < 0 < hi:
        pieces = [(lo, 0.0), (0.0, hi)]
    out = []
    for p_lo, p_hi in pieces:
        out.extend(oracle_energy_roots(params, geometry, alpha, p_lo, p_hi, n_energy, sign))
    return sorted(out)
