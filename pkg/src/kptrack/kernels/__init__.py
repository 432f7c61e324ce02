"""Kernel backend selection.

The compiled extension is used when it imported cleanly; setting KPTRACK_PURE=1
in the environment forces the numpy fallback. `BACKEND` names the active one.
"""

import os

from . import _numpy

if os.environ.get("KPTRACK_PURE") == "1":
    _impl = _numpy
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _numpy

BACKEND = _impl.BACKEND
splat_bilinear = _impl.splat_bilinear
gather_bilinear = _impl.gather_bilinear
stratified_pick = _impl.stratified_pick

__all__ = ["BACKEND", "splat_bilinear", "gather_bilinear", "stratified_pick"]
