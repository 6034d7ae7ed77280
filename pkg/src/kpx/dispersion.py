"""Generalized Kronig-Penney relations, their alpha-roots, and the
determinant oracle assembled directly from the matching conditions.

The closed-form right-hand sides are written with ``sin(xL)/x`` and
``sinh(xL)/x`` factored out so that vanishing wavenumbers (band edges at
E = 0, V, -V) are handled by their series limits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import EnergyOutOfBranch
from .model import (Branch, CellGeometry, ModelKind, ModelParams, Sign, check_branch,
                    wavenumbers)

SMALL_WAVENUMBER = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    n_scan: int = 512
    tol: float = 1e-12
    explicit_equal_mass: bool = True


@dataclass(frozen=True)
class DispersionPoint:
    E: float
    alpha: float
    residual: float


def sin_over(x, length):
    """sin(x*length)/x, equal to ``length`` for |x| below the small-wavenumber threshold."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SMALL_WAVENUMBER
    safe = np.where(small, 1.0, x)
    out = np.where(small, length, np.sin(safe * length) / safe)
    return out if out.ndim else float(out)


def sinh_over(x, length):
    """sinh(x*length)/x with the same small-argument limit as :func:`sin_over`."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SMALL_WAVENUMBER
    safe = np.where(small, 1.0, x)
    out = np.where(small, length, np.sinh(safe * length) / safe)
    return out if out.ndim else float(out)


def _check_energies(params, E, kind, lo, hi, lo_open=False, hi_open=False):
    if params.kind is not kind:
        raise EnergyOutOfBranch(f"this relation applies to the {kind.value} model")
    E = np.asarray(E, dtype=float)
    if not np.all(np.isfinite(E)):
        raise EnergyOutOfBranch("energy must be finite")
    bad = (E < lo) | (E > hi)
    if lo_open:
        bad |= E == lo
    if hi_open:
        bad |= E == hi
    if np.any(bad):
        raise EnergyOutOfBranch(f"energy outside [{lo!r}, {hi!r}]: {E[bad].ravel()[:3]!r}")
    return E


def rhs_barrier(params: ModelParams, E, alpha):
    """Right side for the barrier model (0 <= E <= V).

    ch(gamma b)cos(beta a) + [(1-y)^2 alpha^2 + y^2 gamma^2 - beta^2]/(2 y beta gamma)
    * sh(gamma b) sin(beta a); vectorized over E and alpha.
    """
    E = _check_energies(params, E, ModelKind.BARRIER, 0.0, params.V)
    alpha = np.asarray(alpha, dtype=float)
    a, b, y = params.a, params.b, params.y
    beta = np.sqrt(2.0 * params.m2 * E)
    gamma = np.sqrt(2.0 * params.m1 * np.maximum(params.V - E, 0.0))
    coef = ((1 - y) ** 2 * alpha ** 2 + y ** 2 * gamma ** 2 - beta ** 2) / (2 * y)
    out = np.cosh(gamma * b) * np.cos(beta * a) + coef * sinh_over(gamma, b) * sin_over(beta, a)
    return out if np.ndim(out) else float(out)


def rhs_well_positive(params: ModelParams, E, alpha):
    """Right side for the well model at E >= 0 (theta, phi real)."""
    E = _check_energies(params, E, ModelKind.WELL, 0.0, np.inf)
    alpha = np.asarray(alpha, dtype=float)
    a, b, y = params.a, params.b, params.y
    theta = np.sqrt(2.0 * params.m1 * E)
    phi = np.sqrt(2.0 * params.m2 * (E + params.V))
    coef = ((1 - y) ** 2 * alpha ** 2 - (y ** 2 * theta ** 2 + phi ** 2)) / (2 * y)
    out = np.cos(theta * a) * np.cos(phi * b) + coef * sin_over(theta, a) * sin_over(phi, b)
    return out if np.ndim(out) else float(out)


def rhs_well_negative(params: ModelParams, E, alpha):
    """Right side for the well model at -V <= E <= 0, with k^2 = -2 m1 E.

    The k^2 term enters as +y^2 k^2: this is the continuation theta = ik of
    the positive-energy relation, and it is the form whose zeros coincide
    with those of the matching determinant.
    """
    E = _check_energies(params, E, ModelKind.WELL, -params.V, 0.0)
    alpha = np.asarray(alpha, dtype=float)
    a, b, y = params.a, params.b, params.y
    k = np.sqrt(-2.0 * params.m1 * E)
    phi = np.sqrt(2.0 * params.m2 * (E + params.V))
    coef = ((1 - y) ** 2 * alpha ** 2 + y ** 2 * k ** 2 - phi ** 2) / (2 * y)
    out = np.cosh(k * a) * np.cos(phi * b) + coef * sinh_over(k, a) * sin_over(phi, b)
    return out if np.ndim(out) else float(out)


def rhs(params: ModelParams, E, alpha):
    """Branch-appropriate right side; well energies may straddle E = 0."""
    if params.kind is ModelKind.BARRIER:
        return rhs_barrier(params, E, alpha)
    E_arr = np.asarray(E, dtype=float)
    if E_arr.ndim == 0:
        if E_arr >= 0:
            return rhs_well_positive(params, E_arr, alpha)
        return rhs_well_negative(params, E_arr, alpha)
    _check_energies(params, E_arr, ModelKind.WELL, -params.V, np.inf)
    pos = rhs_well_positive(params, np.maximum(E_arr, 0.0), alpha)
    neg = rhs_well_negative(params, np.minimum(E_arr, 0.0), alpha)
    return np.where(E_arr >= 0, pos, neg)


def dispersion_residual(params: ModelParams, geometry: CellGeometry | None, E, alpha):
    """cos(alpha (a+b)) - RHS. The cell geometry never enters."""
    alpha_arr = np.asarray(alpha, dtype=float)
    out = np.cos(alpha_arr * params.period) - rhs(params, E, alpha_arr)
    return out if np.ndim(out) else float(out)


def residual_scale(params: ModelParams, E, alpha):
    """1 + summed magnitude of the two right-side terms.

    Rounding in the residual is of order eps times this; for tight-binding
    parameters (large gamma b) it can reach 1e10 and more, so locus tests
    compare |residual| against tol * residual_scale rather than tol alone.
    """
    E = np.asarray(E, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    a, b, y, m1, m2, V = params.a, params.b, params.y, params.m1, params.m2, params.V
    if params.kind is ModelKind.BARRIER:
        q1, w1, q2, w2 = 2 * m1 * (E - V), b, 2 * m2 * E, a
    else:
        q1, w1, q2, w2 = 2 * m1 * E, a, 2 * m2 * (E + V), b

    def parts(q, w):
        r = np.sqrt(np.abs(q))
        c = np.where(q >= 0, np.cos(r * w), np.cosh(r * w))
        s = np.where(q >= 0, sin_over(r, w), sinh_over(r, w))
        return np.abs(c), np.abs(s)

    c1, s1 = parts(q1, w1)
    c2, s2 = parts(q2, w2)
    coef = np.abs((1 - y) ** 2 * alpha ** 2 - y ** 2 * q1 - q2) / (2 * y)
    out = 1.0 + c1 * c2 + coef * s1 * s2
    return out if np.ndim(out) else float(out)


def on_locus(params: ModelParams, E, alpha, tol: float = 1e-9) -> bool:
    res = dispersion_residual(params, None, E, alpha)
    return bool(abs(res) <= tol * residual_scale(params, E, alpha))


# --- matching system -------------------------------------------------------

def _region_exponents(params, E, sign):
    wn = wavenumbers(params, E)
    if wn.branch is Branch.WELL_NEGATIVE and sign is None:
        sign = Sign.PLUS
    return wn.exponents(sign)


def matching_matrix(params: ModelParams, geometry: CellGeometry, E: float, alpha,
                    sign: Sign | None = None) -> np.ndarray:
    """4x4 matching system for the amplitudes (A, B, C, D).

    Rows: u_I(x2) = u_II(x2); y u_I'(x2) = u_II'(x2); and the same two
    conditions across the cell boundary (x3 -> x1 for KP1, x1 -> x3 for KP2).
    ``u`` is the periodic part, A/B multiply exp[(-i alpha +/- kappa_I) x] and
    C/D multiply exp[(-i alpha +/- kappa_II) x]. ``alpha`` may be an array,
    giving shape (..., 4, 4).
    """
    kI, kII = _region_exponents(params, E, sign)
    return _matrix(kI, kII, params.y, np.asarray(alpha, dtype=float), geometry)


def _matrix(kI, kII, y, alpha, geometry):
    alpha = np.asarray(alpha, dtype=float)[..., None]
    kI = np.asarray(kI, dtype=complex)[..., None]
    kII = np.asarray(kII, dtype=complex)[..., None]
    eI = np.concatenate(np.broadcast_arrays(-1j * alpha + kI, -1j * alpha - kI), axis=-1)
    eII = np.concatenate(np.broadcast_arrays(-1j * alpha + kII, -1j * alpha - kII), axis=-1)
    eI, eII = np.broadcast_arrays(eI, eII)
    x2 = geometry.x2
    xI, xII = geometry.boundary_points()
    M = np.empty(eI.shape[:-1] + (4, 4), dtype=complex)
    vI2, vII2 = np.exp(eI * x2), np.exp(eII * x2)
    vIb, vIIb = np.exp(eI * xI), np.exp(eII * xII)
    M[..., 0, :2], M[..., 0, 2:] = vI2, -vII2
    M[..., 1, :2], M[..., 1, 2:] = y * eI * vI2, -eII * vII2
    M[..., 2, :2], M[..., 2, 2:] = vIb, -vIIb
    M[..., 3, :2], M[..., 3, 2:] = y * eI * vIb, -eII * vIIb
    return M


def _exponents_array(params, E, sign):
    """Vectorized (kappa_I, kappa_II) over energies of a single branch."""
    E = np.asarray(E, dtype=float)
    m1, m2, V = params.m1, params.m2, params.V
    if params.kind is ModelKind.BARRIER:
        return np.sqrt(2 * m1 * (V - E)) + 0j, 1j * np.sqrt(2 * m2 * E)
    phi = 1j * np.sqrt(2 * m2 * (E + V))
    if np.all(E >= 0):
        return 1j * np.sqrt(2 * m1 * E), phi
    k = np.sqrt(-2 * m1 * E)
    return (-k if Sign(sign or Sign.PLUS) is Sign.PLUS else k) + 0j, phi


def det4(M: np.ndarray):
    """Exact 4x4 determinant by Laplace expansion over the first two rows.

    Works on stacks of shape (..., 4, 4).
    """
    M = np.asarray(M)
    r0, r1, r2, r3 = M[..., 0, :], M[..., 1, :], M[..., 2, :], M[..., 3, :]

    def m01(i, j):
        return r0[..., i] * r1[..., j] - r0[..., j] * r1[..., i]

    def m23(i, j):
        return r2[..., i] * r3[..., j] - r2[..., j] * r3[..., i]

    return (m01(0, 1) * m23(2, 3) - m01(0, 2) * m23(1, 3) + m01(0, 3) * m23(1, 2)
            + m01(1, 2) * m23(0, 3) - m01(1, 3) * m23(0, 2) + m01(2, 3) * m23(0, 1))


def det_oracle(params: ModelParams, geometry: CellGeometry, E: float, alpha,
               sign: Sign | None = None):
    d = det4(matching_matrix(params, geometry, E, alpha, sign))
    return d if np.ndim(d) else complex(d)


def balanced(M: np.ndarray) -> np.ndarray:
    """Scale columns, then rows, of M to unit 2-norm (real positive factors)."""
    M = M / np.linalg.norm(M, axis=-2, keepdims=True)
    return M / np.linalg.norm(M, axis=-1, keepdims=True)


def normalized_det(M: np.ndarray):
    """det of the balanced matrix; its modulus lies in [0, 1] and its phase
    equals that of det(M)."""
    d = det4(balanced(M))
    return d if np.ndim(d) else complex(d)


# --- root finding -----------------------------------------------------------

def solve_alpha(params: ModelParams, E: float, config: SolverConfig | None = None,
                branch: Branch | None = None) -> list[DispersionPoint]:
    """All alpha in [0, pi/(a+b)] on the dispersion locus at energy E."""
    config = config or SolverConfig()
    check_branch(params, E, branch)
    L = params.period
    zone = math.pi / L

    def g(al):
        return dispersion_residual(params, None, E, al)

    if params.m1 == params.m2 and config.explicit_equal_mass:
        r = rhs(params, E, 0.0)
        if abs(r) > 1.0:
            return []
        al = math.acos(r) / L
        return [DispersionPoint(float(E), al, g(al))]
    grid = np.linspace(0.0, zone, config.n_scan)
    vals = g(grid)
    roots = []
    for i, v in enumerate(vals):
        if v == 0.0:
            roots.append(float(grid[i]))
        elif i + 1 < len(vals) and v * vals[i + 1] < 0:
            roots.append(_bisect(g, grid[i], grid[i + 1], config.tol))
    return [DispersionPoint(float(E), al, g(al)) for al in roots]


def _bisect(f, lo, hi, tol):
    root = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(f(root)) > tol:
        # brentq stops on the bracket width; finish with plain bisection
        flo = f(lo)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if abs(fm) <= tol or mid in (lo, hi):
                return mid
            if (fm < 0) == (flo < 0):
                lo, flo = mid, fm
            else:
                hi = mid
        return 0.5 * (lo + hi)
    return root


def complex_zeros(f_vec, f_scalar, lo: float, hi: float, n: int = 512) -> list[float]:
    """Real zeros of a complex function of one real variable.

    Across a simple zero the value flips its phase by pi, so consecutive grid
    samples satisfy Re(d_i conj(d_{i+1})) < 0. Each flip is refined with
    brentq on Re(d(t) conj(d_i)) and accepted only if |d| actually collapses.
    """
    t = np.linspace(lo, hi, n)
    d = np.asarray(f_vec(t))
    zeros = []
    for i in range(n):
        if d[i] == 0:
            zeros.append(float(t[i]))
    flip = np.real(d[:-1] * np.conj(d[1:])) < 0
    for i in np.flatnonzero(flip):
        ref = np.conj(d[i])

        def r(s, ref=ref):
            return (f_scalar(s) * ref).real

        s = brentq(r, t[i], t[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        scale = min(abs(d[i]), abs(d[i + 1]))
        if abs(f_scalar(s)) <= 1e-6 * scale:
            zeros.append(float(s))
    zeros.sort()
    out = []
    for z in zeros:
        if not out or z - out[-1] > 1e-13 * max(1.0, abs(z)):
            out.append(z)
    return out


def oracle_alpha_roots(params: ModelParams, geometry: CellGeometry, E: float,
                       n_scan: int = 512, sign: Sign | None = None) -> list[float]:
    """alpha-roots in [0, pi/(a+b)] of the matching determinant alone."""
    check_branch(params, E)
    kI, kII = _region_exponents(params, E, sign)
    y = params.y

    def f_vec(al):
        return normalized_det(_matrix(kI, kII, y, al, geometry))

    def f_scalar(al):
        return complex(normalized_det(_matrix(kI, kII, y, np.asarray(al, dtype=float), geometry)))

    return complex_zeros(f_vec, f_scalar, 0.0, math.pi / params.period, n_scan)


def oracle_energy_roots(params: ModelParams, geometry: CellGeometry, alpha: float,
                        E_min: float, E_max: float, n_scan: int = 2000,
                        sign: Sign | None = None) -> list[float]:
    """E-roots of the matching determinant at fixed alpha in (E_min, E_max).

    The window must lie within one branch; branch endpoints themselves are
    excluded because the two region-I basis functions coincide there.
    """
    alpha = float(alpha)
    span = E_max - E_min
    lo, hi = E_min + 1e-9 * span, E_max - 1e-9 * span
    if check_branch(params, lo) is not check_branch(params, hi):
        raise EnergyOutOfBranch("energy window must lie within one branch")
    y = params.y

    def f_vec(Es):
        kI, kII = _exponents_array(params, Es, sign)
        return normalized_det(_matrix(kI, kII, y, alpha, geometry))

    def f_scalar(E):
        return complex(f_vec(np.asarray(float(E))))

    return complex_zeros(f_vec, f_scalar, lo, hi, n_scan)
