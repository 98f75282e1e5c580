"""Backend selection for the hot numerical kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Set ``CURSORWALK_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("CURSORWALK_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

jn_table = _impl.jn_table
jn = _impl.jn

MAX_ARGUMENT = _pykernels.MAX_ARGUMENT
MAX_ORDER = _pykernels.MAX_ORDER

__all__ = ["BACKEND", "jn", "jn_table", "MAX_ARGUMENT", "MAX_ORDER"]
