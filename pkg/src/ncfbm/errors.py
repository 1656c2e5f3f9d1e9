"""Exception hierarchy shared by every module."""


class NCFBMError(Exception):
    """Base class for all errors raised by the package."""


class ParameterError(NCFBMError, ValueError):
    """An argument lies outside its admissible range."""


class SizeLimitError(NCFBMError, ValueError):
    """A combinatorial enumeration or expansion would exceed its cap."""


class GridError(NCFBMError, ValueError):
    """Times are not aligned with the dyadic grid an operation requires."""


class NumericError(NCFBMError, ArithmeticError):
    """A numerical procedure (factorization, iteration) failed."""


class RegimeError(NumericError):
    """A refinement that should be Cauchy is not (wrong Hurst regime)."""
