"""Backend selection for the canonicalisation kernel.

The compiled Cython extension is preferred when it imported successfully;
``FORESTHOPF_PURE=1`` in the environment forces the pure-Python fallback
(used by the benchmark and by the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _canonkern_py

canonical_order_py = _canonkern_py.canonical_order

if os.environ.get("FORESTHOPF_PURE") == "1":
    canonical_order = canonical_order_py
    BACKEND = "python"
else:
    try:
        from . import _canonkern  # type: ignore[attr-defined]

        canonical_order = _canonkern.canonical_order
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build environment
        canonical_order = canonical_order_py
        BACKEND = "python"
