"""mirrorforge: exact arithmetic for affine torus fibrations and their mirrors.

The package computes with formal series over the rationals with rational
exponents (Novikov scalars), integral affine polytopes and covers, the
degree-two obstruction attached to a fibration's monodromy primitives,
affinoid coordinate rings of mirror charts, twisted sheaves against the
resulting gerbe, and small Floer-theoretic demonstration complexes.

Everything is exact: coefficients and exponents are `fractions.Fraction`,
truncation cutoffs are tracked explicitly, and no floating point is used.
"""

from .errors import (
    ChartMismatchError,
    InvalidCoverError,
    InvalidFibrationError,
    InvalidPolytopeError,
    ManifestError,
    MirrorForgeError,
    PrecisionExhaustedError,
    UndecidableDescriptionError,
)
from .novikov import INF, NovikovMatrix, NovikovScalar

__version__ = "0.1.0"

__all__ = [
    "ChartMismatchError",
    "INF",
    "InvalidCoverError",
    "InvalidFibrationError",
    "InvalidPolytopeError",
    "ManifestError",
    "MirrorForgeError",
    "NovikovMatrix",
    "NovikovScalar",
    "PrecisionExhaustedError",
    "UndecidableDescriptionError",
    "__version__",
]
