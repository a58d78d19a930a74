"""(a,b)-continued fractions, the coding of geodesics on the modular surface and cusp excursions."""
from .arith import INF, MoebiusMap, Surd, TrackedReal, UpperHalfPoint, compare, moebius_apply, normalize, parse_number
from .cf import CFExpansion, CFParams, convergents, expand_ab, expand_classical
from .errors import CuspfreqError

__all__ = [
    "INF",
    "CFExpansion",
    "CFParams",
    "CuspfreqError",
    "MoebiusMap",
    "Surd",
    "TrackedReal",
    "UpperHalfPoint",
    "compare",
    "convergents",
    "expand_ab",
    "expand_classical",
    "moebius_apply",
    "normalize",
    "parse_number",
]
