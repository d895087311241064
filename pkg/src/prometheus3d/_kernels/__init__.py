"""Hot-kernel backend selection.

The compiled Cython core is preferred when present; the pure numpy
fallback implements the same operations with identical outputs. Set
PROMETHEUS_BACKEND=pure or =compiled to force one side (compiled raises
if the extension is missing).
"""

import os

from . import _pure

_requested = os.environ.get("PROMETHEUS_BACKEND", "").strip().lower()

if _requested == "pure":
    _impl = _pure
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = _pure

BACKEND = _impl.BACKEND_NAME
match_triplets = _impl.match_triplets
radius_edges = _impl.radius_edges
union_find_labels = _impl.union_find_labels
