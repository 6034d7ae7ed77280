"""Closed-form coefficient ratios of the Bloch periodic parts.

Region I carries A/B (mu for barriers, nu for wells), region II carries
C/D (lambda for barriers, chi for wells). Every formula is kept as an
explicit numerator/denominator pair so that callers can pivot when the
denominator (B or D) vanishes.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dispersion import balanced, det4, sin_over, sinh_over
from .errors import (DegenerateDenominator, NotOnDispersionLocus, RankDeficiencyTooHigh,
                     RequiresEqualMasses)
from .model import (Branch, CellGeometry, CellType, ModelKind, ModelParams, Sign,
                    make_geometry, wavenumbers)

DEGENERACY_RTOL = 1e-12
LOCUS_TOL = 1e-8


@dataclass(frozen=True)
class CoefficientPair:
    region1_ratio: complex | None  # A/B
    region2_ratio: complex | None  # C/D
    cell_type: CellType | None = None
    branch: Branch | None = None
    sign: Sign | None = None


@dataclass(frozen=True)
class Fraction:
    """num/den * pref, with ``den_scale`` the summed magnitude of the terms of den."""
    num: complex
    den: complex
    pref: complex = 1.0
    den_scale: float = 0.0

    @property
    def degenerate(self) -> bool:
        # cancellation in the denominator, not merely a large ratio
        return abs(self.den) < DEGENERACY_RTOL * self.den_scale + 1e-300

    @property
    def homogeneous(self) -> tuple[complex, complex]:
        """(numerator, denominator) with the prefactor folded in."""
        return self.num * self.pref, self.den

    def value(self, label: str = "ratio") -> complex:
        if self.degenerate:
            raise DegenerateDenominator(f"{label}: |denominator| = {abs(self.den):.3e} "
                                        f"after cancellation among terms of size "
                                        f"{self.den_scale:.3e}")
        return self.num / self.den * self.pref


def _frac(num_terms, den_terms, pref) -> Fraction:
    return Fraction(sum(num_terms), sum(den_terms), pref, float(sum(abs(t) for t in den_terms)))


# --- barrier model -----------------------------------------------------------

def _barrier_fractions(params, geometry, E, alpha):
    wn = wavenumbers(params, E, Branch.BARRIER_GAP)
    gamma, beta = wn.first, wn.second
    a, b, y, L, x2 = params.a, params.b, params.y, params.period, geometry.x2
    c, sb = math.cos(beta * a), sin_over(beta, a)  # sin(beta a)/beta
    ch, shg = math.cosh(gamma * b), sinh_over(gamma, b)  # sh(gamma b)/gamma
    q = (1 - y) * alpha
    mu_pref = math.exp(-2 * gamma * x2)
    lam_pref = cmath.exp(-2j * beta * x2)
    if geometry.cell_type is CellType.KP1:
        mu = _frac([c, -(1j * q - y * gamma) * sb, -cmath.exp(-1j * alpha * L - gamma * b)],
                   [-c, (1j * q + y * gamma) * sb, cmath.exp(-1j * alpha * L + gamma * b)],
                   mu_pref)
        lam = _frac([ch, -1j * (q + beta) / y * shg, -cmath.exp(1j * (alpha * L + beta * a))],
                    [-ch, 1j * (q - beta) / y * shg, cmath.exp(1j * (alpha * L - beta * a))],
                    lam_pref)
    else:
        mu = _frac([c, (1j * q - y * gamma) * sb, -cmath.exp(1j * alpha * L + gamma * b)],
                   [-c, -(1j * q + y * gamma) * sb, cmath.exp(1j * alpha * L - gamma * b)],
                   mu_pref)
        lam = _frac([ch, 1j * (q + beta) / y * shg, -cmath.exp(-1j * (alpha * L + beta * a))],
                    [-ch, -1j * (q - beta) / y * shg, cmath.exp(-1j * (alpha * L - beta * a))],
                    lam_pref)
    return mu, lam


def barrier_coefficients(params: ModelParams, geometry: CellGeometry, E: float,
                         alpha: float) -> CoefficientPair:
    """(mu_I, lambda_II) for a KP1 or KP2 barrier cell. Valid off the locus too,
    but only meaningful on it."""
    mu, lam = _barrier_fractions(params, geometry, E, float(alpha))
    return CoefficientPair(mu.value("mu_I"), lam.value("lambda_II"), geometry.cell_type,
                           Branch.BARRIER_GAP)


# --- well model, E > 0 ---------------------------------------------------------

def _well_fractions(params, geometry, E, alpha):
    wn = wavenumbers(params, E, Branch.WELL_POSITIVE)
    theta, phi = wn.first, wn.second
    a, b, y, L, x2 = params.a, params.b, params.y, params.period, geometry.x2
    cp, sp = math.cos(phi * b), sin_over(phi, b)
    ct, st = math.cos(theta * a), sin_over(theta, a)
    q = (1 - y) * alpha
    nu_pref = cmath.exp(-2j * theta * x2)
    chi_pref = cmath.exp(-2j * phi * x2)
    if geometry.cell_type is CellType.KP1:
        nu = _frac([cp, -1j * (q - y * theta) * sp, -cmath.exp(-1j * (alpha * L + theta * a))],
                   [-cp, 1j * (q + y * theta) * sp, cmath.exp(-1j * (alpha * L - theta * a))],
                   nu_pref)
        chi = _frac([ct, -1j * (q + phi) / y * st, -cmath.exp(1j * (alpha * L + phi * b))],
                    [-ct, 1j * (q - phi) / y * st, cmath.exp(1j * (alpha * L - phi * b))],
                    chi_pref)
    else:
        nu = _frac([cp, 1j * (q - y * theta) * sp, -cmath.exp(1j * (alpha * L + theta * a))],
                   [-cp, -1j * (q + y * theta) * sp, cmath.exp(1j * (alpha * L - theta * a))],
                   nu_pref)
        chi = _frac([ct, 1j * (q + phi) / y * st, -cmath.exp(-1j * (alpha * L + phi * b))],
                    [-ct, -1j * (q - phi) / y * st, cmath.exp(-1j * (alpha * L - phi * b))],
                    chi_pref)
    return nu, chi


def well_coefficients(params: ModelParams, geometry: CellGeometry, E: float,
                      alpha: float) -> CoefficientPair:
    nu, chi = _well_fractions(params, geometry, E, float(alpha))
    return CoefficientPair(nu.value("nu_I"), chi.value("chi_II"), geometry.cell_type,
                           Branch.WELL_POSITIVE)


# --- well model, -V < E < 0 ------------------------------------------------------

def _well_negative_fractions(params, geometry, E, alpha, sign):
    wn = wavenumbers(params, E, Branch.WELL_NEGATIVE)
    k, phi = wn.first, wn.second
    s = 1.0 if Sign(sign) is Sign.PLUS else -1.0
    a, b, y, L, x2 = params.a, params.b, params.y, params.period, geometry.x2
    cp, sp = math.cos(phi * b), sin_over(phi, b)
    ck, shk = math.cosh(k * a), sinh_over(k, a)
    q = (1 - y) * alpha
    nu_pref = math.exp(2 * s * k * x2)
    chi_pref = cmath.exp(-2j * phi * x2)
    # chi has no sign dependence: one expression serves both signs
    if geometry.cell_type is CellType.KP1:
        nu = _frac([cp, -(1j * q + s * y * k) * sp, -cmath.exp(-1j * alpha * L + s * k * a)],
                   [-cp, (1j * q - s * y * k) * sp, cmath.exp(-1j * alpha * L - s * k * a)],
                   nu_pref)
        chi = _frac([ck, -1j * (q + phi) / y * shk, -cmath.exp(1j * (alpha * L + phi * b))],
                    [-ck, 1j * (q - phi) / y * shk, cmath.exp(1j * (alpha * L - phi * b))],
                    chi_pref)
    else:
        nu = _frac([cp, (1j * q + s * y * k) * sp, -cmath.exp(1j * alpha * L - s * k * a)],
                   [-cp, -(1j * q - s * y * k) * sp, cmath.exp(1j * alpha * L + s * k * a)],
                   nu_pref)
        chi = _frac([ck, 1j * (q + phi) / y * shk, -cmath.exp(-1j * (alpha * L + phi * b))],
                    [-ck, -1j * (q - phi) / y * shk, cmath.exp(-1j * (alpha * L - phi * b))],
                    chi_pref)
    return nu, chi


def well_negative_coefficients(params: ModelParams, geometry: CellGeometry, E: float,
                               alpha: float, sign: Sign | str = Sign.PLUS) -> CoefficientPair:
    """(nu_I^+/-, chi_II) for -V < E < 0.

    PLUS pairs A with exp[(-i alpha - k) x], MINUS with exp[(-i alpha + k) x];
    the two region-I ratios are therefore reciprocal, and chi is shared.
    """
    sign = Sign(sign)
    nu, chi = _well_negative_fractions(params, geometry, E, float(alpha), sign)
    return CoefficientPair(nu.value("nu_I"), chi.value("chi_II"), geometry.cell_type,
                           Branch.WELL_NEGATIVE, sign)


def coefficient_fractions(params: ModelParams, geometry: CellGeometry, E: float, alpha: float,
                          sign: Sign | None = None) -> tuple[Fraction, Fraction]:
    """(A:B, C:D) as unreduced fractions for whichever branch E falls on."""
    wn = wavenumbers(params, E)
    if wn.branch is Branch.BARRIER_GAP:
        return _barrier_fractions(params, geometry, E, float(alpha))
    if wn.branch is Branch.WELL_POSITIVE:
        return _well_fractions(params, geometry, E, float(alpha))
    return _well_negative_fractions(params, geometry, E, float(alpha), sign or Sign.PLUS)


def coefficients(params: ModelParams, geometry: CellGeometry, E: float, alpha: float,
                 sign: Sign | None = None) -> CoefficientPair:
    wn = wavenumbers(params, E)
    if wn.branch is Branch.BARRIER_GAP:
        return barrier_coefficients(params, geometry, E, alpha)
    if wn.branch is Branch.WELL_POSITIVE:
        return well_coefficients(params, geometry, E, alpha)
    return well_negative_coefficients(params, geometry, E, alpha, sign or Sign.PLUS)


# --- equal-mass reference expressions ---------------------------------------------

class Reference(str, Enum):
    BLOSS = "bloss"
    CLASSICAL_KP = "classical_kp"
    GUBANOV = "gubanov"


def reference_geometry(variant: Reference | str, params: ModelParams) -> CellGeometry:
    """The cell each published expression was written for."""
    variant = Reference(variant)
    if variant is Reference.BLOSS:
        return make_geometry(params, CellType.KP1, x2=params.a)
    if variant is Reference.CLASSICAL_KP:
        return make_geometry(params, CellType.KP2, x2=0.0)
    return make_geometry(params, CellType.KP2, x2=params.b / 2)


def _kp_fractions(beta, gamma, a, b, alpha):
    L = a + b
    c, s = math.cos(beta * a), math.sin(beta * a)
    ch, sh = math.cosh(gamma * b), math.sinh(gamma * b)
    mu = ((c - gamma / beta * s - cmath.exp(1j * alpha * L + gamma * b))
          / (-c - gamma / beta * s + cmath.exp(1j * alpha * L - gamma * b)))
    lam = ((ch + 1j * beta / gamma * sh - cmath.exp(-1j * (alpha * L + beta * a)))
           / (-ch + 1j * beta / gamma * sh + cmath.exp(-1j * (alpha * L - beta * a))))
    return mu, lam


def reference_coefficients(variant: Reference | str, params: ModelParams, E: float,
                           alpha: float) -> CoefficientPair:
    """Equal-mass barrier coefficients in their published closed forms.

    BLOSS gives only lambda (KP1 cell, x2 = a); CLASSICAL_KP (KP2, x2 = 0) and
    GUBANOV (KP2, x2 = b/2) give both ratios.
    """
    variant = Reference(variant)
    if params.kind is not ModelKind.BARRIER:
        raise ValueError("reference expressions exist only for the barrier model")
    if params.m1 != params.m2:
        raise RequiresEqualMasses(f"m1={params.m1!r} != m2={params.m2!r}")
    wn = wavenumbers(params, E, Branch.BARRIER_GAP)
    gamma, beta = wn.first, wn.second
    a, b, L = params.a, params.b, params.period
    alpha = float(alpha)
    if variant is Reference.BLOSS:
        ch, sh = math.cosh(gamma * b), math.sinh(gamma * b)
        lam = ((ch - 1j * beta / gamma * sh - cmath.exp(1j * (alpha * L + beta * a)))
               / (-ch - 1j * beta / gamma * sh + cmath.exp(1j * (alpha * L - beta * a)))
               * cmath.exp(-2j * beta * a))
        return CoefficientPair(None, lam, CellType.KP1, Branch.BARRIER_GAP)
    mu, lam = _kp_fractions(beta, gamma, a, b, alpha)
    if variant is Reference.GUBANOV:
        mu, lam = mu * math.exp(-gamma * b), lam * cmath.exp(-1j * beta * b)
    return CoefficientPair(mu, lam, CellType.KP2, Branch.BARRIER_GAP)


# --- null-space oracle ------------------------------------------------------------------

_PIN = {"A_unit": 0, "B_unit": 1, "C_unit": 2, "D_unit": 3}


def nullspace_oracle(matrix: np.ndarray, normalization: str = "B_unit",
                     locus_tol: float = LOCUS_TOL) -> CoefficientPair:
    """Coefficient ratios (A/B, C/D) read off the null space of a 4x4 matching matrix.

    The pinned amplitude is set to 1 and the other three are obtained by least
    squares on the remaining 4x3 system (columns, then rows, scaled to unit norm).
    """
    M = np.asarray(matrix, dtype=complex)
    if M.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {M.shape}")
    if normalization not in _PIN:
        raise ValueError(f"normalization must be one of {sorted(_PIN)}")
    Mb = balanced(M)
    d = abs(det4(Mb))
    if not d < locus_tol:
        raise NotOnDispersionLocus(f"normalized |det| = {d:.3e} exceeds {locus_tol:.1e}")
    sv = np.linalg.svd(Mb, compute_uv=False)
    if sv[2] < 1e-10 * sv[0]:
        raise RankDeficiencyTooHigh(f"rank < 3 (singular values {sv})")

    # row scaling after the columns leaves the null vector unchanged; without it
    # the derivative rows (larger by |kappa|) dominate and small amplitudes lose digits
    col = np.linalg.norm(M, axis=0)
    Ms = M / col
    Ms = Ms / np.linalg.norm(Ms, axis=1, keepdims=True)
    p = _PIN[normalization]
    others = [j for j in range(4) if j != p]
    sol, *_ = np.linalg.lstsq(Ms[:, others], -Ms[:, p], rcond=None)
    z = np.empty(4, dtype=complex)
    z[p] = 1.0
    z[others] = sol
    if np.linalg.norm(Ms @ z) > 1e-6 * np.linalg.norm(z):
        raise RankDeficiencyTooHigh(f"amplitude {normalization[0]} vanishes; cannot pin it to 1")
    v = z / col
    zn = np.abs(z) / np.linalg.norm(z)
    if zn[1] < 1e-13 or zn[3] < 1e-13:
        raise RankDeficiencyTooHigh("B or D vanishes; ratios A/B, C/D undefined")
    return CoefficientPair(complex(v[0] / v[1]), complex(v[2] / v[3]))
