"""Backend selection for the hot numeric kernels.

Every hot kernel in the package has two implementations: a numba-jitted one
and a pure numpy/scipy one. The active backend is chosen once at import time
from the ``SMOOTHWP_BACKEND`` environment variable:

  SMOOTHWP_BACKEND=numba   force the jitted kernels (error if numba missing)
  SMOOTHWP_BACKEND=numpy   force the pure-numpy fallback
  unset                    numba when importable, numpy otherwise

Both backends produce the same results to ~1e-13 relative (asserted in the
test suite); within one backend results are bit-reproducible run to run.
"""

import os

from .errors import InvalidSpecError

_ENV_VAR = "SMOOTHWP_BACKEND"

try:
    import numba  # noqa: F401

    _NUMBA_IMPORTABLE = True
except ImportError:
    _NUMBA_IMPORTABLE = False


def _resolve() -> str:
    requested = os.environ.get(_ENV_VAR, "").strip().lower()
    if requested == "":
        return "numba" if _NUMBA_IMPORTABLE else "numpy"
    if requested == "numba":
        if not _NUMBA_IMPORTABLE:
            raise InvalidSpecError(
                f"{_ENV_VAR}=numba requested but numba is not importable"
            )
        return "numba"
    if requested == "numpy":
        return "numpy"
    raise InvalidSpecError(
        f"unknown {_ENV_VAR}={requested!r}; expected 'numba' or 'numpy'"
    )


BACKEND = _resolve()


def use_numba() -> bool:
    return BACKEND == "numba"
