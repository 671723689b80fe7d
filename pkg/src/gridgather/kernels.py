"""Backend selection for the geometry kernels.

The compiled extension ``_ckernels`` is used when it was built; otherwise
the pure-Python twin is imported.  Setting ``GRIDGATHER_PURE=1`` forces
the fallback, which the benchmark and the parity tests rely on.
"""

import os

from . import _purekernels as pure

compiled = None
if not os.environ.get("GRIDGATHER_PURE"):
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

impl = compiled if compiled is not None else pure
BACKEND = impl.NAME

connected = impl.connected
hole_free = impl.hole_free
cut_cells = impl.cut_cells
fixed_polyominoes = impl.fixed_polyominoes
lemma_scan = impl.lemma_scan
has_destructible = impl.has_destructible
