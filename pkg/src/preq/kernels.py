"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting the environment
variable ``PREQ_PURE_PYTHON=1`` forces the numpy fallback.  ``BACKEND`` names
the active implementation.
"""
import os

from . import _pykernels

if os.environ.get("PREQ_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

iterate_affine = _impl.iterate_affine
rk4_affine = _impl.rk4_affine
rk4_normalized = _impl.rk4_normalized
em_block = _impl.em_block
