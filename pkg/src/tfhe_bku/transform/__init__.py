"""Negacyclic polynomial multiplication backends."""

from .backend import (
    GATE_SCHEDULE,
    PRECISION_SCHEDULE,
    ApproximateBackend,
    Backend,
    FixedPointSchedule,
    ReferenceBackend,
    lagrange_pointwise_mul,
    make_backend,
)
from .cpfft import LagrangeRep, TransformCounters, forward_transform, inverse_transform, transform_cost
from .dyadic import DyadicCoefficient, lifting_rotate, quantize_dyadic
from .error import DEFAULT_BETAS, measure_error_db
from .reference import reference_forward, reference_inverse, reference_multiply
from .table import DyadicTwiddleTable, build_twiddle_table

__all__ = [
    "ApproximateBackend",
    "Backend",
    "DEFAULT_BETAS",
    "DyadicCoefficient",
    "DyadicTwiddleTable",
    "FixedPointSchedule",
    "GATE_SCHEDULE",
    "LagrangeRep",
    "PRECISION_SCHEDULE",
    "ReferenceBackend",
    "TransformCounters",
    "build_twiddle_table",
    "forward_transform",
    "inverse_transform",
    "lagrange_pointwise_mul",
    "lifting_rotate",
    "make_backend",
    "measure_error_db",
    "quantize_dyadic",
    "reference_forward",
    "reference_inverse",
    "reference_multiply",
    "transform_cost",
]
