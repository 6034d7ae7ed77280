"""Model parameters, unit-cell geometry and wavenumbers.

Units are dimensionless with hbar = 1, so every ``2m/hbar^2`` factor is
simply ``2m``.

Region I is the slab with mass ``m1`` (the barrier in the barrier model,
the zero-potential slab in the well model); region II carries ``m2``.
Widths follow the lattice layout: in the barrier model region II (the
well) has width ``a`` and region I width ``b``; in the well model region I
has width ``a`` and region II (the well) width ``b``.
"""
from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum

from .errors import EnergyOutOfBranch, NonFinite, NonPositiveParameter, ParameterError


class ModelKind(str, Enum):
    BARRIER = "barrier"
    WELL = "well"


class CellType(str, Enum):
    KP1 = "kp1"  # region II on [x1, x2], region I on [x2, x3]
    KP2 = "kp2"  # region I on [x1, x2], region II on [x2, x3]


class Branch(str, Enum):
    BARRIER_GAP = "barrier_gap"
    WELL_POSITIVE = "well_positive"
    WELL_NEGATIVE = "well_negative"


class Sign(str, Enum):
    PLUS = "plus"
    MINUS = "minus"


class Region(str, Enum):
    I = "I"
    II = "II"


@dataclass(frozen=True)
class ModelParams:
    kind: ModelKind
    a: float
    b: float
    V: float
    m1: float
    m2: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        for name in ("a", "b", "V", "m1", "m2"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ParameterError(f"parameter {name!r} is not a number: {value!r}") from None
            if not math.isfinite(value):
                raise NonFinite(name, value)
            object.__setattr__(self, name, value)
        # zero widths are allowed: they give the degenerate one-slab cell
        for name in ("a", "b"):
            if getattr(self, name) < 0:
                raise NonPositiveParameter(name, getattr(self, name))
        for name in ("V", "m1", "m2"):
            if getattr(self, name) <= 0:
                raise NonPositiveParameter(name, getattr(self, name))
        if self.a + self.b <= 0:
            raise NonPositiveParameter("a+b", self.a + self.b)

    @property
    def y(self) -> float:
        """Mass ratio m2/m1."""
        return self.m2 / self.m1

    @property
    def period(self) -> float:
        return self.a + self.b

    @property
    def width_I(self) -> float:
        return self.b if self.kind is ModelKind.BARRIER else self.a

    @property
    def width_II(self) -> float:
        return self.a if self.kind is ModelKind.BARRIER else self.b

    def potential(self, region: Region) -> float:
        if self.kind is ModelKind.BARRIER:
            return self.V if region is Region.I else 0.0
        return 0.0 if region is Region.I else -self.V

    def mass(self, region: Region) -> float:
        return self.m1 if region is Region.I else self.m2

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "a": self.a, "b": self.b, "V": self.V,
                "m1": self.m1, "m2": self.m2}


def validate_params(raw) -> ModelParams:
    """Build a validated :class:`ModelParams` from a mapping or keyword record.

    Raises NonPositiveParameter / NonFinite naming the offending field.
    """
    if isinstance(raw, ModelParams):
        return raw
    if not isinstance(raw, Mapping):
        raw = vars(raw)
    missing = [k for k in ("kind", "a", "b", "V", "m1", "m2") if k not in raw]
    if missing:
        raise ParameterError(f"missing parameters: {', '.join(missing)}")
    try:
        kind = ModelKind(str(raw["kind"]).lower())
    except ValueError:
        raise ParameterError(f"unknown model kind {raw['kind']!r}") from None
    return ModelParams(kind, raw["a"], raw["b"], raw["V"], raw["m1"], raw["m2"])


@dataclass(frozen=True)
class CellGeometry:
    cell_type: CellType
    x1: float
    x2: float
    x3: float

    @property
    def period(self) -> float:
        return self.x3 - self.x1

    def first_region(self) -> Region:
        return Region.II if self.cell_type is CellType.KP1 else Region.I

    def second_region(self) -> Region:
        return Region.I if self.cell_type is CellType.KP1 else Region.II

    def region_at(self, x: float) -> Region:
        """Region of a point already reduced into [x1, x3); x2 belongs to the second slab."""
        return self.first_region() if x < self.x2 else self.second_region()

    def boundary_points(self) -> tuple[float, float]:
        """(x_I, x_II): where the region-I and region-II periodic parts meet
        across the cell boundary (x3/x1 for KP1, x1/x3 for KP2)."""
        if self.cell_type is CellType.KP1:
            return self.x3, self.x1
        return self.x1, self.x3


def make_geometry(params: ModelParams, cell_type: CellType | str = CellType.KP1,
                  x2: float = 0.0) -> CellGeometry:
    """Unit cell anchored at the interior interface ``x2``.

    KP1 puts region II first, KP2 region I first; for the barrier model this
    is ``x1 = x2 - a, x3 = x2 + b`` (KP1) and ``x1 = x2 - b, x3 = x2 + a`` (KP2).
    """
    cell_type = CellType(cell_type)
    x2 = float(x2)
    if not math.isfinite(x2):
        raise NonFinite("x2", x2)
    if cell_type is CellType.KP1:
        first, second = params.width_II, params.width_I
    else:
        first, second = params.width_I, params.width_II
    return CellGeometry(cell_type, x2 - first, x2, x2 + second)


@dataclass(frozen=True)
class Wavenumbers:
    """Branch-tagged wavenumber pair.

    ``first`` is gamma (BARRIER_GAP), theta (WELL_POSITIVE) or k (WELL_NEGATIVE);
    ``second`` is beta (barrier) or phi (well).
    """
    branch: Branch
    first: float
    second: float
    endpoint: bool = False

    def exponents(self, sign: Sign | None = None) -> tuple[complex, complex]:
        """Exponents (kappa_I, kappa_II) of the basis exp[(-i alpha +/- kappa) x].

        The region-I amplitude A multiplies exp[(-i alpha + kappa_I) x]. On the
        negative well branch theta = +ik for PLUS and -ik for MINUS, hence
        kappa_I = i theta = -k (PLUS) or +k (MINUS).
        """
        if self.branch is Branch.BARRIER_GAP:
            return complex(self.first), 1j * self.second
        if self.branch is Branch.WELL_POSITIVE:
            return 1j * self.first, 1j * self.second
        if sign is None:
            raise ValueError("negative-energy well states need a sign (plus/minus)")
        k = self.first
        return (complex(-k) if Sign(sign) is Sign.PLUS else complex(k)), 1j * self.second


def default_branch(params: ModelParams, E: float) -> Branch:
    if params.kind is ModelKind.BARRIER:
        return Branch.BARRIER_GAP
    return Branch.WELL_POSITIVE if E >= 0 else Branch.WELL_NEGATIVE


def check_branch(params: ModelParams, E: float, branch: Branch | None = None) -> Branch:
    """Resolve and validate the energy branch for ``E``."""
    E = float(E)
    if not math.isfinite(E):
        raise EnergyOutOfBranch(f"energy must be finite, got {E!r}")
    natural = default_branch(params, E)
    if branch is not None and Branch(branch) is not natural:
        raise EnergyOutOfBranch(f"E={E!r} does not belong to branch {Branch(branch).value}")
    if params.kind is ModelKind.BARRIER and not 0.0 <= E <= params.V:
        raise EnergyOutOfBranch(f"barrier model requires 0 <= E <= V={params.V!r}, got E={E!r}")
    if params.kind is ModelKind.WELL and E < -params.V:
        raise EnergyOutOfBranch(f"well model requires E >= -V={-params.V!r}, got E={E!r}")
    return natural


def wavenumbers(params: ModelParams, E: float, branch: Branch | None = None) -> Wavenumbers:
    branch = check_branch(params, E, branch)
    V, m1, m2 = params.V, params.m1, params.m2
    if branch is Branch.BARRIER_GAP:
        beta = math.sqrt(2.0 * m2 * E)
        gamma = math.sqrt(2.0 * m1 * (V - E))
        return Wavenumbers(branch, gamma, beta, endpoint=E in (0.0, V))
    phi = math.sqrt(2.0 * m2 * (E + V))
    if branch is Branch.WELL_POSITIVE:
        return Wavenumbers(branch, math.sqrt(2.0 * m1 * E), phi, endpoint=E == 0.0)
    return Wavenumbers(branch, math.sqrt(-2.0 * m1 * E), phi, endpoint=E == -V)
