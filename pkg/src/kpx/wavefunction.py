"""Bloch states: periodic parts, full Bloch waves and their verification."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson

from .coefficients import CoefficientPair, coefficient_fractions
from .dispersion import dispersion_residual, residual_scale
from .errors import BadRange, DegenerateDenominator, NotOnDispersionLocus
from .model import (Branch, CellGeometry, ModelParams, Region, Sign, Wavenumbers,
                    wavenumbers)

LOCUS_TOL = 1e-9
L2_PANELS = 10_000


@dataclass(frozen=True)
class BlochState:
    """One Bloch solution u_I = A e^{(-i alpha + kI) x} + B e^{(-i alpha - kI) x},
    u_II = C e^{(-i alpha + kII) x} + D e^{(-i alpha - kII) x} on the unit cell."""
    params: ModelParams
    geometry: CellGeometry
    E: float
    alpha: float
    coeffs: CoefficientPair
    A: complex
    B: complex
    C: complex
    D: complex
    wavenumbers: Wavenumbers
    sign: Sign | None = None

    @property
    def exponents(self) -> tuple[complex, complex]:
        return self.wavenumbers.exponents(self.sign)

    @property
    def amplitudes(self) -> tuple[complex, complex, complex, complex]:
        return self.A, self.B, self.C, self.D


@dataclass(frozen=True)
class WaveSample:
    x: float
    u: complex
    psi: complex


@dataclass(frozen=True)
class MatchingResiduals:
    value_x2: float
    derivative_x2: float
    value_boundary: float
    derivative_boundary: float

    def max(self) -> float:
        return max(self.value_x2, self.derivative_x2, self.value_boundary,
                   self.derivative_boundary)

    def as_dict(self) -> dict:
        return {"value_x2": self.value_x2, "derivative_x2": self.derivative_x2,
                "value_boundary": self.value_boundary,
                "derivative_boundary": self.derivative_boundary}


def _pair(frac):
    """Amplitudes (first, second) proportional to num:den, pivoting when den ~ 0."""
    num, den = frac.homogeneous
    if not frac.degenerate:
        return num / den, 1.0 + 0j
    if abs(num) == 0.0:
        raise DegenerateDenominator("both numerator and denominator vanish")
    return 1.0 + 0j, den / num


def region_value(state: BlochState, region: Region, x, derivative: bool = False):
    """Region formula for u (or du/dx) at x, without reduction into the cell."""
    x = np.asarray(x, dtype=float)
    kI, kII = state.exponents
    if region is Region.I:
        k, p, q = kI, state.A, state.B
    else:
        k, p, q = kII, state.C, state.D
    e_plus, e_minus = -1j * state.alpha + k, -1j * state.alpha - k
    if derivative:
        out = p * e_plus * np.exp(e_plus * x) + q * e_minus * np.exp(e_minus * x)
    else:
        out = p * np.exp(e_plus * x) + q * np.exp(e_minus * x)
    return out if out.ndim else complex(out)


def build_state(params: ModelParams, geometry: CellGeometry, E: float, alpha: float,
                normalization: str = "b_unit", sign: Sign | str | None = None,
                check_locus: bool = True) -> BlochState:
    """Assemble the Bloch state at (E, alpha) from the closed-form ratios.

    ``normalization`` is ``"b_unit"`` (B = 1) or ``"l2"`` (unit norm of u over
    one period). D follows from continuity at x2. With ``check_locus=False``
    off-locus states can be built for sensitivity studies.
    """
    E, alpha = float(E), float(alpha)
    wn = wavenumbers(params, E)
    if wn.branch is Branch.WELL_NEGATIVE:
        sign = Sign(sign or Sign.PLUS)
    else:
        sign = None
    res = dispersion_residual(params, geometry, E, alpha)
    if check_locus and not abs(res) <= LOCUS_TOL * residual_scale(params, E, alpha):
        raise NotOnDispersionLocus(f"|residual| = {abs(res):.3e} at E={E!r}, alpha={alpha!r}")
    f1, f2 = coefficient_fractions(params, geometry, E, alpha, sign)
    A, B = _pair(f1)
    C, D = _pair(f2)
    coeffs = CoefficientPair(None if f1.degenerate else A / B,
                             None if f2.degenerate else C / D,
                             geometry.cell_type, wn.branch, sign)
    state = BlochState(params, geometry, E, alpha, coeffs, A, B, C, D, wn, sign)

    x2 = geometry.x2
    uI = region_value(state, Region.I, x2)
    uII = region_value(state, Region.II, x2)
    kII = state.exponents[1]
    terms = (abs(C * np.exp((-1j * alpha + kII) * x2)) + abs(D * np.exp((-1j * alpha - kII) * x2)))
    if abs(uII) > 1e-12 * terms:
        s = uI / uII
    else:
        # u vanishes at x2: fix the region-II scale by derivative matching instead
        s = params.y * region_value(state, Region.I, x2, True) / region_value(
            state, Region.II, x2, True)
    state = replace(state, C=C * s, D=D * s)

    if normalization == "l2":
        state = normalize_l2(state)
    elif normalization != "b_unit":
        raise ValueError(f"unknown normalization {normalization!r}")
    return state


def _rescale(state: BlochState, s: complex) -> BlochState:
    return replace(state, A=state.A * s, B=state.B * s, C=state.C * s, D=state.D * s)


def cell_norm(state: BlochState, panels: int = L2_PANELS) -> float:
    """Integral of |u|^2 over one period by composite Simpson, panels split
    between the two slabs in proportion to their widths."""
    g = state.geometry
    total = 0.0
    for lo, hi in ((g.x1, g.x2), (g.x2, g.x3)):
        if hi <= lo:
            continue
        n = max(2, 2 * round(panels * (hi - lo) / g.period / 2))
        x = np.linspace(lo, hi, n + 1)
        region = g.region_at(0.5 * (lo + hi))
        u = region_value(state, region, x)
        total += simpson(np.abs(u) ** 2, x=x)
    return float(total)


def normalize_l2(state: BlochState, panels: int = L2_PANELS) -> BlochState:
    return _rescale(state, 1.0 / math.sqrt(cell_norm(state, panels)))


def periodic_part(state: BlochState, x):
    """u(x), extended (a+b)-periodically from the fundamental cell [x1, x3)."""
    g = state.geometry
    x = np.asarray(x, dtype=float)
    xr = g.x1 + np.mod(x - g.x1, g.period)
    xr = np.where(xr >= g.x3, g.x1, xr)
    first = xr < g.x2
    u = np.where(first, region_value(state, g.first_region(), xr),
                 region_value(state, g.second_region(), xr))
    return u if u.ndim else complex(u)


def bloch_wave(state: BlochState, x):
    x = np.asarray(x, dtype=float)
    out = np.exp(1j * state.alpha * x) * periodic_part(state, x)
    return out if out.ndim else complex(out)


def _term_scale(state: BlochState, region: Region, x: float, derivative: bool) -> float:
    """Summed magnitude of the two exponential terms entering region_value."""
    kI, kII = state.exponents
    k, p, q = (kI, state.A, state.B) if region is Region.I else (kII, state.C, state.D)
    out = 0.0
    for amp, e in ((p, -1j * state.alpha + k), (q, -1j * state.alpha - k)):
        out += abs(amp * np.exp(e * x)) * (abs(e) if derivative else 1.0)
    return out


def _scaled(state, xI, xII, derivative, weight=1.0) -> float:
    lhs = weight * region_value(state, Region.I, xI, derivative)
    rhs = region_value(state, Region.II, xII, derivative)
    scale = (weight * _term_scale(state, Region.I, xI, derivative)
             + _term_scale(state, Region.II, xII, derivative))
    return float(abs(lhs - rhs) / scale) if scale > 0 else 0.0


def matching_residuals(state: BlochState) -> MatchingResiduals:
    """Residuals of the four matching conditions, evaluated with analytic
    derivatives and scaled by the magnitudes of the terms involved (so a
    quantity that vanishes by cancellation does not inflate the residual)."""
    g, y = state.geometry, state.params.y
    xI, xII = g.boundary_points()
    return MatchingResiduals(
        _scaled(state, g.x2, g.x2, False),
        _scaled(state, g.x2, g.x2, True, y),
        _scaled(state, xI, xII, False),
        _scaled(state, xI, xII, True, y),
    )


def sample(state: BlochState, x_min: float, x_max: float, n_points: int) -> list[WaveSample]:
    x, u, psi = sample_arrays(state, x_min, x_max, n_points)
    return [WaveSample(float(xi), complex(ui), complex(pi)) for xi, ui, pi in zip(x, u, psi)]


def sample_arrays(state: BlochState, x_min: float, x_max: float, n_points: int):
    if n_points < 2:
        raise BadRange(f"need at least 2 sample points, got {n_points}")
    if not x_min < x_max:
        raise BadRange(f"x_min must be below x_max (got {x_min!r}, {x_max!r})")
    x = np.linspace(x_min, x_max, n_points)
    u = np.asarray(periodic_part(state, x))
    return x, u, np.exp(1j * state.alpha * x) * u


def _psi_extended(state: BlochState, x, n_cells: int, region: Region):
    """Bloch wave in extended precision at x (a longdouble), known to lie
    n_cells periods from the fundamental cell, inside ``region``."""
    ld, cld = np.longdouble, np.clongdouble
    xr = x - n_cells * ld(state.params.period)
    kI, kII = state.exponents
    k, p, q = (kI, state.A, state.B) if region is Region.I else (kII, state.C, state.D)
    alpha = ld(state.alpha)
    e_plus = cld(-1j * alpha) + cld(k)
    e_minus = cld(-1j * alpha) - cld(k)
    u = cld(p) * np.exp(e_plus * xr) + cld(q) * np.exp(e_minus * xr)
    return np.exp(cld(1j) * alpha * x) * u


def schrodinger_residual(state: BlochState, x: float, h: float) -> complex:
    """psi'' + 2 m(x) (E - V(x)) psi with psi'' by a central second difference.

    psi is sampled in extended precision so that rounding (eps/h^2) stays
    below the O(h^2) truncation error down to h ~ 1e-4; x +- h must not
    straddle an interface.
    """
    g, p = state.geometry, state.params
    n_cells = math.floor((x - g.x1) / g.period)
    xr = x - n_cells * g.period
    region = g.region_at(xr)
    hh, xl = np.longdouble(h), np.longdouble(x)
    psi = [_psi_extended(state, xl + d, n_cells, region) for d in (-hh, 0 * hh, hh)]
    d2 = (psi[0] - 2 * psi[1] + psi[2]) / (hh * hh)
    weight = np.longdouble(2 * p.mass(region) * (state.E - p.potential(region)))
    return complex(d2 + weight * psi[1])


@dataclass(frozen=True)
class FDCheck:
    x: float
    coarse: float        # |residual| at h_coarse
    fine: float          # |residual| at h_fine
    floor: float         # rounding level of the fine difference
    h_coarse: float
    h_fine: float

    @property
    def resolved(self) -> bool:
        """True when the predicted fine-step truncation error clears rounding by 10x."""
        return self.coarse * (self.h_fine / self.h_coarse) ** 2 > 10 * self.floor

    @property
    def ratio(self) -> float:
        return self.coarse / self.fine if self.fine > 0 else math.inf


def schrodinger_check(state: BlochState, x: float, h_coarse: float = 1e-3,
                      h_fine: float = 1e-4) -> FDCheck:
    g = state.geometry
    xr = g.x1 + (x - g.x1) % g.period
    terms = _term_scale(state, g.region_at(xr), xr, False)
    floor = 4 * np.finfo(np.longdouble).eps * terms / h_fine ** 2
    return FDCheck(x, abs(schrodinger_residual(state, x, h_coarse)),
                   abs(schrodinger_residual(state, x, h_fine)), float(floor), h_coarse, h_fine)


def region_midpoints(state: BlochState) -> dict[Region, float]:
    g = state.geometry
    return {g.first_region(): 0.5 * (g.x1 + g.x2), g.second_region(): 0.5 * (g.x2 + g.x3)}
