"""Pick the compiled kernels when available.

Set ``MUSICTRUNC_PURE_PYTHON=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os

from musictrunc import _kernels_py

if os.environ.get("MUSICTRUNC_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
else:
    try:
        from musictrunc import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        kernels = _kernels_py

BACKEND = "compiled" if kernels is not _kernels_py else "python"
