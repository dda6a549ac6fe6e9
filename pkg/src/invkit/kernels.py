"""Inner-loop kernels, compiled when available.

The Cython extension ``invkit._kernels`` is used if it was built; otherwise
the numpy versions in ``invkit._kernels_py`` are used. Setting the
environment variable ``INVKIT_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("INVKIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

dd_adjacent_pairs = _impl.dd_adjacent_pairs
fm_combine = _impl.fm_combine
locate_pieces = _impl.locate_pieces
simplex_second_moments = _impl.simplex_second_moments


def implementations():
    """Mapping of backend name to kernel module, for tests and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as compiled
    except ImportError:
        return out
    out["cython"] = compiled
    return out
