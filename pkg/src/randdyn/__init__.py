"""Exact arithmetic dynamics of random sequences of rational maps.

Degrees, heights and orbits of compositions of maps drawn i.i.d. from a
weighted set S of self-maps of projective space over Q.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    EscapeImpossible,
    IndeterminatePoint,
    MathPreconditionError,
    RandDynError,
    ResourceLimitError,
    ZeroVarianceError,
)
from .heights import ProjPoint, apply, c_set, normalize, parse_point, weil_height  # noqa: F401
from .maps import RationalMap, Word, compose, parse_map, reduce_map, word_compose  # noqa: F401
from .random_model import FiniteMeasure, SequenceStream, family_measure  # noqa: F401
