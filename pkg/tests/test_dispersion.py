import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from kpx.dispersion import (SMALL_WAVENUMBER, SolverConfig, det4, det_oracle,
                            dispersion_residual, matching_matrix, normalized_det,
                            oracle_alpha_roots, rhs, rhs_barrier, rhs_well_negative,
                            rhs_well_positive, sin_over, sinh_over, solve_alpha)
from kpx.errors import EnergyOutOfBranch
from kpx.model import ModelParams, Sign, make_geometry

from conftest import nearest_band_state

# 50-digit reference values, frozen
CLASSICAL_RHS_E5 = -11.830804599306903537
WELL_POS_RHS = -0.52873755129956834028
WELL_NEG_EDGE_RHS = -1.5514860205373635766

CLASSICAL = ModelParams("barrier", 1, 1, 10, 1, 1)
pos = st.floats(0.2, 5.0)
width = st.floats(0.1, 5.0)


@st.composite
def params_and_energy(draw):
    kind = draw(st.sampled_from(["barrier", "well"]))
    p = ModelParams(kind, draw(width), draw(width), draw(st.floats(0.5, 20)), draw(pos),
                    draw(pos))
    if kind == "barrier":
        E = draw(st.floats(0, 1)) * p.V
    else:
        E = draw(st.floats(-1, 3)) * p.V
    return p, E


def test_sin_over_limits():
    assert sin_over(0.0, 2.5) == 2.5
    assert sinh_over(0.0, 2.5) == 2.5
    np.testing.assert_allclose(sin_over(np.array([0.0, 1.0]), 2.0), [2.0, math.sin(2.0)])
    np.testing.assert_allclose(sinh_over(3.0, 0.5), math.sinh(1.5) / 3.0, rtol=1e-15)


@pytest.mark.parametrize("E", [0.5, 3.0, 9.5])
@pytest.mark.parametrize("alpha", [0.0, 0.7])
def test_barrier_without_barrier(E, alpha):
    p = ModelParams("barrier", 1.3, 0.0, 10, 1, 2.5)
    np.testing.assert_allclose(rhs_barrier(p, E, alpha), math.cos(math.sqrt(2 * 2.5 * E) * 1.3),
                               rtol=1e-14)


def test_classical_value_in_gap():
    for alpha in (0.0, 0.4, math.pi / 2):
        np.testing.assert_allclose(rhs_barrier(CLASSICAL, 5.0, alpha), CLASSICAL_RHS_E5,
                                   rtol=1e-13)


@pytest.mark.parametrize("E", [0.5, 3.0, 9.5])
def test_barrier_without_well(E):
    p = ModelParams("barrier", 0.0, 1.7, 10, 2, 1)
    np.testing.assert_allclose(rhs_barrier(p, E, 0.3),
                               math.cosh(math.sqrt(2 * 2 * (10 - E)) * 1.7), rtol=1e-14)


def test_well_positive_single_slab():
    p = ModelParams("well", 0.0, 1.5, 3, 1, 2)
    np.testing.assert_allclose(rhs_well_positive(p, 1.0, 0.2), math.cos(4.0 * 1.5), rtol=1e-14)
    p = ModelParams("well", 1.5, 0.0, 3, 1, 2)
    np.testing.assert_allclose(rhs_well_positive(p, 1.0, 0.2), math.cos(math.sqrt(2) * 1.5),
                               rtol=1e-14)


def test_well_positive_reference_value():
    p = ModelParams("well", 1, 1, 3, 1, 1)
    np.testing.assert_allclose(rhs_well_positive(p, 1.0, 0.0), WELL_POS_RHS, rtol=1e-14)


def test_well_positive_reference_roots_match_determinant():
    p = ModelParams("well", 1, 1, 3, 1, 1)
    for cell in ("kp1", "kp2"):
        closed = [d.alpha for d in solve_alpha(p, 1.0)]
        oracle = oracle_alpha_roots(p, make_geometry(p, cell), 1.0)
        np.testing.assert_allclose(closed, oracle, atol=1e-9)


def test_well_negative_single_slab():
    p = ModelParams("well", 0.0, 1.5, 3, 1, 2)
    np.testing.assert_allclose(rhs_well_negative(p, -1.0, 0.4),
                               math.cos(math.sqrt(2 * 2 * 2) * 1.5), rtol=1e-14)


def test_well_negative_zero_energy_limit():
    p = ModelParams("well", 1, 1, 3, 1, 1)
    np.testing.assert_allclose(rhs_well_negative(p, 0.0, 0.0), WELL_NEG_EDGE_RHS, rtol=1e-14)
    np.testing.assert_allclose(rhs_well_negative(p, -1e-8, 0.0), WELL_NEG_EDGE_RHS, rtol=1e-7)


def test_well_continuous_through_zero():
    p = ModelParams("well", 1.2, 0.8, 4, 1, 3)
    left = rhs_well_negative(p, -1e-14, 0.3)
    right = rhs_well_positive(p, 1e-14, 0.3)
    np.testing.assert_allclose(left, right, rtol=1e-10)


def test_equal_masses_remove_alpha_dependence():
    p = ModelParams("well", 1, 2, 5, 1.5, 1.5)
    for E in (-2.0, 3.0):
        assert rhs(p, E, 0.0) == rhs(p, E, 1.0)


def test_equal_mass_barrier_is_textbook_form():
    p = ModelParams("barrier", 1.3, 0.7, 8, 1.0, 1.0)
    E = np.linspace(0.1, 7.9, 40)
    beta, gamma = np.sqrt(2 * E), np.sqrt(2 * (8 - E))
    textbook = (np.cosh(gamma * 0.7) * np.cos(beta * 1.3)
                + (gamma ** 2 - beta ** 2) / (2 * beta * gamma)
                * np.sinh(gamma * 0.7) * np.sin(beta * 1.3))
    np.testing.assert_allclose(rhs_barrier(p, E, 0.5), textbook, rtol=1e-12)


def test_equal_mass_paths_agree():
    p = ModelParams("barrier", 1, 1, 10, 1, 1)
    explicit = SolverConfig(explicit_equal_mass=True)
    implicit = SolverConfig(explicit_equal_mass=False)
    for E in np.linspace(2.25, 2.34, 7):
        a = [d.alpha for d in solve_alpha(p, E, explicit)]
        b = [d.alpha for d in solve_alpha(p, E, implicit)]
        np.testing.assert_allclose(a, b, atol=1e-10)


@pytest.mark.parametrize("which", ["beta", "gamma", "theta", "phi", "k"])
def test_series_limit_at_small_wavenumber(which):
    q = SMALL_WAVENUMBER
    a, b, V = 1.1, 0.9, 4.0
    if which == "beta":
        p = ModelParams("barrier", a, b, V, 1, 2)
        E, f = q ** 2 / 4, rhs_barrier
    elif which == "gamma":
        p = ModelParams("barrier", a, b, V, 2, 1)
        E, f = V - q ** 2 / 4, rhs_barrier
    elif which == "theta":
        p = ModelParams("well", a, b, V, 2, 1)
        E, f = q ** 2 / 4, rhs_well_positive
    elif which == "phi":
        p = ModelParams("well", a, b, V, 1, 2)
        E, f = -V + q ** 2 / 4, rhs_well_negative
    else:
        p = ModelParams("well", a, b, V, 2, 1)
        E, f = -q ** 2 / 4, rhs_well_negative
    # the series evaluation: replace sin(xL)/x or sinh(xL)/x by L and cos/cosh by 1
    alpha = 0.3
    y = p.y
    if p.kind.value == "barrier":
        beta, gamma = math.sqrt(2 * p.m2 * E), math.sqrt(2 * p.m1 * (V - E))
        coef = ((1 - y) ** 2 * alpha ** 2 + y ** 2 * gamma ** 2 - beta ** 2) / (2 * y)
        if which == "beta":
            ref = math.cosh(gamma * b) + coef * math.sinh(gamma * b) / gamma * a
        else:
            ref = math.cos(beta * a) + coef * b * math.sin(beta * a) / beta
    elif which == "theta":
        phi = math.sqrt(2 * p.m2 * (E + V))
        coef = ((1 - y) ** 2 * alpha ** 2 - (y ** 2 * 2 * p.m1 * E + phi ** 2)) / (2 * y)
        ref = math.cos(phi * b) + coef * a * math.sin(phi * b) / phi
    elif which == "phi":
        k = math.sqrt(-2 * p.m1 * E)
        coef = ((1 - y) ** 2 * alpha ** 2 + y ** 2 * k ** 2) / (2 * y)
        ref = math.cosh(k * a) + coef * math.sinh(k * a) / k * b
    else:
        phi = math.sqrt(2 * p.m2 * (E + V))
        coef = ((1 - y) ** 2 * alpha ** 2 - phi ** 2) / (2 * y)
        ref = math.cos(phi * b) + coef * a * math.sin(phi * b) / phi
    np.testing.assert_allclose(f(p, E, alpha), ref, rtol=1e-8)


def test_barrier_zero_energy_forbidden():
    for p in (CLASSICAL, ModelParams("barrier", 2, 0.3, 1, 0.5, 3), ModelParams(
            "barrier", 0.2, 4, 15, 4, 0.2)):
        for alpha in (0.0, math.pi / p.period):
            assert rhs_barrier(p, 0.0, alpha) > 1
            assert solve_alpha(p, 0.0) == []


def test_free_particle_residual_vanishes():
    p = ModelParams("barrier", 1.7, 0.0, 10, 1, 1.5)
    E = 1.2
    beta = math.sqrt(2 * 1.5 * E)
    assert abs(dispersion_residual(p, None, E, beta)) < 1e-14


def test_classical_residual_value():
    np.testing.assert_allclose(dispersion_residual(CLASSICAL, None, 5.0, 0.0),
                               1 - CLASSICAL_RHS_E5, rtol=1e-13)


@settings(max_examples=300, deadline=None)
@given(pe=params_and_energy(), alpha=st.floats(-3, 3))
def test_residual_even_in_alpha(pe, alpha):
    p, E = pe
    assert dispersion_residual(p, None, E, alpha) == dispersion_residual(p, None, E, -alpha)


def test_residual_ignores_geometry():
    p = ModelParams("well", 1, 2, 3, 1, 2)
    g1, g2 = make_geometry(p, "kp1", 0.3), make_geometry(p, "kp2", -1.0)
    assert dispersion_residual(p, g1, 1.0, 0.2) == dispersion_residual(p, g2, 1.0, 0.2)


def test_energy_out_of_branch():
    with pytest.raises(EnergyOutOfBranch):
        rhs_barrier(CLASSICAL, 10.5, 0.0)
    with pytest.raises(EnergyOutOfBranch):
        rhs_well_positive(ModelParams("well", 1, 1, 3, 1, 1), -0.5, 0.0)
    with pytest.raises(EnergyOutOfBranch):
        rhs(ModelParams("well", 1, 1, 3, 1, 1), np.array([-4.0, 1.0]), 0.0)


# --- matching system -----------------------------------------------------------------

def test_det4_matches_numpy():
    rng = np.random.default_rng(3)
    for _ in range(50):
        M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        np.testing.assert_allclose(det4(M), np.linalg.det(M), rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(pe=params_and_energy(), alpha=st.floats(0, 3), x2=st.floats(-2, 2),
       cell=st.sampled_from(["kp1", "kp2"]))
def test_matrix_entries_finite(pe, alpha, x2, cell):
    p, E = pe
    M = matching_matrix(p, make_geometry(p, cell, x2), E, alpha, sign=Sign.PLUS)
    assert M.shape == (4, 4)
    assert np.all(np.isfinite(M))


def test_single_region_determinant_zeros():
    p = ModelParams("barrier", 1.5, 0.0, 10, 1, 1)
    E = 2.0
    beta = math.sqrt(2 * E)
    g = make_geometry(p, "kp1", 0.0)
    assert abs(normalized_det(matching_matrix(p, g, E, beta))) < 1e-12
    # a full reciprocal-lattice shift is the same Bloch state
    assert abs(normalized_det(matching_matrix(p, g, E, beta - 2 * math.pi / 1.5))) < 1e-12
    assert abs(normalized_det(matching_matrix(p, g, E, beta + 0.3))) > 1e-3


def test_determinant_vanishes_on_locus():
    p = ModelParams("barrier", 1, 1, 10, 1, 2)
    assert solve_alpha(p, 3.0) == []   # E = 3 is in a gap here; use the nearest band
    E, alpha = nearest_band_state(p, 3.0)
    for cell in ("kp1", "kp2"):
        M = matching_matrix(p, make_geometry(p, cell), E, alpha)
        assert abs(normalized_det(M)) < 1e-9
        assert abs(det_oracle(p, make_geometry(p, cell), E, alpha)) < 1e-9 * np.prod(
            np.abs(M).max(axis=1))
        shifted = matching_matrix(p, make_geometry(p, cell), E, alpha + 0.1)
        assert abs(normalized_det(shifted)) > 1e-4


def test_solve_alpha_free_particle():
    p = ModelParams("barrier", 2.0, 0.0, 10, 1, 1)
    E = 7.0
    beta = math.sqrt(2 * E)
    roots = solve_alpha(p, E)
    assert len(roots) == 1
    L = 2.0
    folded = abs((beta + math.pi / L) % (2 * math.pi / L) - math.pi / L)
    np.testing.assert_allclose(roots[0].alpha, folded, atol=1e-12)


def test_solve_alpha_in_gap():
    assert solve_alpha(CLASSICAL, 5.0) == []


def test_solve_alpha_first_band_closed_form():
    E = 0.5 * (2.2485 + 2.3427)
    roots = solve_alpha(CLASSICAL, E)
    assert len(roots) == 1
    np.testing.assert_allclose(roots[0].alpha, math.acos(rhs_barrier(CLASSICAL, E, 0.0)) / 2,
                               atol=1e-10)
    assert abs(roots[0].residual) < 1e-12


def test_roots_identical_across_cells():
    rng = np.random.default_rng(11)
    for _ in range(50):
        p = ModelParams(rng.choice(["barrier", "well"]), *rng.uniform(0.1, 5, 2),
                        rng.uniform(0.5, 20), *rng.uniform(0.2, 5, 2))
        E = rng.uniform(0, p.V)
        sign = Sign.MINUS
        r1 = oracle_alpha_roots(p, make_geometry(p, "kp1", 0.4), E, sign=sign)
        r2 = oracle_alpha_roots(p, make_geometry(p, "kp2", 0.4), E, sign=sign)
        closed = [d.alpha for d in solve_alpha(p, E)]
        assert len(r1) == len(r2) == len(closed)
        np.testing.assert_allclose(r1, closed, atol=1e-9)
        np.testing.assert_allclose(r2, closed, atol=1e-9)


def test_printed_negative_relation_misses_determinant_zeros():
    # the form with -y^2 k^2 has roots that are not zeros of the matching determinant
    p = ModelParams("well", 1.0, 1.0, 5.0, 1.0, 2.0)
    g = make_geometry(p, "kp1")
    y = p.y

    def printed(E, alpha):
        k, phi = math.sqrt(-2 * p.m1 * E), math.sqrt(2 * p.m2 * (E + p.V))
        coef = ((1 - y) ** 2 * alpha ** 2 - y ** 2 * k ** 2 - phi ** 2) / (2 * y)
        return (math.cos(alpha * 2.0) - math.cosh(k) * math.cos(phi)
                - coef * math.sinh(k) / k * math.sin(phi) / phi)

    mismatched = 0
    for E in np.linspace(-4.9, -0.1, 60):
        grid = np.linspace(0, math.pi / 2, 400)
        vals = np.array([printed(E, al) for al in grid])
        for i in np.flatnonzero(vals[:-1] * vals[1:] < 0):
            al = brentq(lambda t: printed(E, t), grid[i], grid[i + 1])
            oracle = oracle_alpha_roots(p, g, E, sign=Sign.PLUS)
            if not any(abs(al - o) < 1e-6 for o in oracle):
                mismatched += 1
    assert mismatched > 0
