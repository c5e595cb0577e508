"""Finite metric spaces: quotients, retractions, extension operators and dimension estimates."""
from .core import (
    TOL,
    FinMetricSpace,
    MetricFamily,
    Neighborhoods,
    ScaleSet,
    ValidationReport,
    Violation,
    close,
    dist_to_set,
    is_separated,
    join_metrics,
    le,
    product_metric,
    require_metric,
    rho,
    scale_ceiling,
    separated_and_dense,
    set_neighborhoods,
    sup_distance,
    ultra_distance,
    validate_metric,
)
from .dimension import (
    adim_estimate,
    covering_number,
    packing_number,
    packing_slope_estimate,
    product_covering_check,
    scale_profile,
    sparse_ultrametric,
    ubdim_estimate,
)
from .errors import CapacityError, DomainError, MetricFactorError, StructuralError
from .factorize import (
    FactorizationContext,
    build_context,
    embed_phi,
    extend_l1,
    extend_linf,
    pullback,
    scale_valued_factor,
    truncate_factor,
)
from .gen import GenSpec, cantor, cantor_code, generate, grid, line, random_metric, random_ultra
from .quotient import QuotientSpace, check_quotient_laws, quotient
from .retraction import Retraction, retract_bdhm, retract_engelking, verify_retraction

__version__ = "0.1.0"
