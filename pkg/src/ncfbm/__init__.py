"""Fractional semicircular processes and their matrix approximations.

Submodules
----------
combinat      pairings, crossings, Catalan numbers
kernel        covariance kernels and letters
moments       exact traces of words (non-crossing and q-deformed)
levy_exact    second moments of dyadic Levy-area differences
matrix_model  random symmetric matrix paths
ncalg         polynomial calculus on matrices
rough         Levy areas, Riemann sums and corrected sums
cli           the ``ncfbm`` command

Public names of the submodules are also reachable from the package itself;
they are imported on first access so that ``import ncfbm`` stays cheap.
"""

from importlib import import_module

from .errors import (GridError, NCFBMError, NumericError, ParameterError,
                     RegimeError, SizeLimitError)

__version__ = "0.1.0"

_SUBMODULES = ("combinat", "kernel", "moments", "levy_exact", "matrix_model",
               "ncalg", "rough")


def __getattr__(name):
    if name in _SUBMODULES:
        return import_module(f".{name}", __name__)
    for mod in _SUBMODULES:
        m = import_module(f".{mod}", __name__)
        if name in getattr(m, "__all__", ()):
            return getattr(m, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    names = set(globals())
    for mod in _SUBMODULES:
        names.update(getattr(import_module(f".{mod}", __name__), "__all__", ()))
    return sorted(names)
