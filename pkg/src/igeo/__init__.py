"""Information geometry of Gaussian statistical models with macro-correlations.

Fisher-Rao metric, connection and curvature; geodesics in the original,
diagonalized and canonical charts; and the information geometric
complexity and entropy along those geodesics.
"""
from .complexity import (
    IgeReport,
    PowerLawFit,
    abcd,
    ige,
    ige_report,
    igc_closed,
    igc_quadrature,
    lambda1,
    lambda2,
    power_law_fit,
    sigma_fn,
    uncorrelated_baseline,
)
from .diagonal import block_eigen, diagonal_from_original, original_from_diagonal
from .errors import (
    AccuracyError,
    ArgumentError,
    ChartError,
    ConfigError,
    DataError,
    DomainError,
    IgeoError,
    IntegrationError,
    RangeError,
    SingularityError,
)
from .geodesic import (
    GeodesicState,
    GeodesicTrajectory,
    System,
    analytic_geodesic_canonical,
    analytic_state,
    hypothesis_check,
    integrate,
)
from .geometry import christoffel_analytic, christoffel_numeric, ricci_tensor, scalar_curvature
from .manifold import BlockMetric, Chart, DensityMode, Macrostate, ModelParams, metric_tensor

__version__ = "0.1.0"
