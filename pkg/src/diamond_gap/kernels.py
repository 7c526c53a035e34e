"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy fallback in ``_pykernels`` is used. Setting ``DIAMOND_GAP_PURE_PYTHON=1``
forces the fallback.
"""

import os

BACKEND = "python"

if os.environ.get("DIAMOND_GAP_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as _impl

schur_complement = _impl.schur_complement
constraint_inner = _impl.constraint_inner
constraint_combine = _impl.constraint_combine

__all__ = ["BACKEND", "schur_complement", "constraint_inner", "constraint_combine"]
