"""Generalized Kronig-Penney superlattices with position-dependent effective mass.

Closed-form dispersion relations and Bloch coefficients for barrier and well
models in two unit-cell conventions, each checked against a direct solve of
the 4x4 matching system.
"""
from .bands import Band, BandStructure, allowed_bands, band_edges, band_structure
from .coefficients import (CoefficientPair, Reference, barrier_coefficients, coefficients,
                           nullspace_oracle, reference_coefficients, well_coefficients,
                           well_negative_coefficients)
from .dispersion import (DispersionPoint, SolverConfig, det_oracle, dispersion_residual,
                         matching_matrix, oracle_alpha_roots, rhs, solve_alpha)
from .errors import *  # noqa: F401,F403
from .model import (Branch, CellGeometry, CellType, ModelKind, ModelParams, Region, Sign,
                    make_geometry, validate_params, wavenumbers)
from .wavefunction import (BlochState, bloch_wave, build_state, matching_residuals,
                           normalize_l2, periodic_part, sample)

__version__ = "0.1.0"
