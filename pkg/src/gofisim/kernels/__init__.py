"""Hot-kernel backend selection.

Prefers the compiled extension; falls back to the pure-Python twin.  Set
GOFISIM_PURE_KERNELS=1 to force the fallback (parity tests, benchmarks).
"""

import os

from . import _pure

DONE = _pure.DONE
HORIZON = _pure.HORIZON
STALLED = _pure.STALLED

if os.environ.get("GOFISIM_PURE_KERNELS") == "1":
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

wrap_angle = _impl.wrap_angle
obb_overlap = _impl.obb_overlap
first_collision = _impl.first_collision
segment_hits_convex = _impl.segment_hits_convex
rollout = _impl.rollout
