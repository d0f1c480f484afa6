"""Finsler volumes, Jacobians of semi-norms and masses of L^sigma currents."""
from .currents import (
    DeskCurrent,
    MassComparison,
    TestForm,
    classical_mass,
    compare_masses,
    evaluate as evaluate_current,
    mass_by_duality,
    mass_by_formula,
    pushforward,
    restrict,
)
from .density import Density, SimpleVector, check_semi_ellipticity, density, induced_density, wedge
from .ellipsoids import SolverError, john, lowner
from .finsler import Atlas, Chart, VolumeEstimate, chart_independence, finsler_volume, linear_chart
from .jacobians import (
    BUSEMANN,
    CIRCUMSCRIBED_RIEMANNIAN,
    HOLMES_THOMPSON,
    INSCRIBED_RIEMANNIAN,
    MASS_STAR,
    JacobianKind,
    JacobianResult,
    check_axioms,
    generic_sigma,
    jacobian,
    normalization_identity,
)
from .metric_diff import LipschitzMap, affine_map, area_formula_check, metric_differential
from .norms import (
    DegenerateNormError,
    Ellipsoidal,
    LinearMap,
    LpNorm,
    PolytopeFacets,
    PolytopeVertices,
    Pullback,
    SemiNorm,
    euclidean,
    evaluate,
    l1,
    linf,
    polar,
    pullback,
    unit_ball_volume,
)
from .quadrature import Ball, Box, BoxRegion

__version__ = "0.1.0"
