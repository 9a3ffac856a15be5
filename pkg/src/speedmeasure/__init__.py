"""Natural-scale one-dimensional diffusions described by their speed measures."""
from ._kernels import DEFAULT_BACKEND, available_backends
from .green import GreenKind, expected_exit_time, green
from .measures import (
    Atom,
    DensityPiece,
    Interval,
    PiecewisePolynomial,
    SpeedMeasure,
    integrate,
    mass,
    validate,
    vague_distance,
)

__version__ = "0.1.0"
