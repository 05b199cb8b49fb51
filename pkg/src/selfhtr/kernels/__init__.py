"""Hot kernels with a compiled core and a pure numpy fallback.

The compiled backend (Cython) is used when available; set
``SELFHTR_PURE_KERNELS=1`` to force the fallback. ``BACKEND`` reports
which one is active. ``benchmarks/bench_kernels.py`` compares the two.
"""

import importlib
import os

from . import _purepy

__all__ = ["levenshtein", "warp_bilinear", "BACKEND"]

_impl = _purepy
BACKEND = "pure"
if os.environ.get("SELFHTR_PURE_KERNELS", "") != "1":
    try:
        _impl = importlib.import_module("selfhtr.kernels._fast")
        BACKEND = "compiled"
    except ImportError:
        pass

levenshtein = _impl.levenshtein
warp_bilinear = _impl.warp_bilinear
