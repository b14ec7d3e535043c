"""Kernel backend selection.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
numpy/pure-Python versions in ``_kernels_py`` take over.  Setting
``LUBRICAV_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("LUBRICAV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py

locate_points_2d = _impl.locate_points_2d
locate_points_1d = _impl.locate_points_1d
triplets_to_csr = _impl.triplets_to_csr
csr_matvec = _impl.csr_matvec
ruiz_scale = _impl.ruiz_scale


def backends():
    """Return the available kernel modules keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:  # pragma: no cover
        pass
    return out
