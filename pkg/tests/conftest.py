import numpy as np
import pytest

from kpx.bands import allowed_bands, default_window
from kpx.dispersion import solve_alpha
from kpx.model import ModelKind


def nearest_band_state(params, E_target):
    """(E, alpha) at the centre of the allowed band closest to E_target.

    Used where a quoted test energy sits in a gap for the quoted parameters.
    """
    if params.kind is ModelKind.WELL:
        window = (-params.V, 0.0) if E_target < 0 else (0.0, 3 * params.V)
    else:
        window = default_window(params)
    bands = allowed_bands(params, window)
    centres = [0.5 * (b.bottom + b.top) for b in bands]
    E = min(centres, key=lambda c: abs(c - E_target))
    return E, solve_alpha(params, E)[0].alpha


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
