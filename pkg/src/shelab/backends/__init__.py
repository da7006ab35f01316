"""Backend selection for the hot stepping loops.

The compiled Cython module is used when it importable; otherwise the numpy
reference implementation takes over.  Both produce bit-identical output, so
the choice affects speed only.  Set SHELAB_BACKEND=python to force the
fallback (the benchmark uses this to time both sides).
"""

import os

from . import pyref

if os.environ.get("SHELAB_BACKEND", "").lower() in ("python", "py", "pyref"):
    _impl = pyref
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = pyref

NAME = _impl.NAME
propagate_span = _impl.propagate_span
heat_span = _impl.heat_span

__all__ = ["NAME", "propagate_span", "heat_span", "pyref"]
