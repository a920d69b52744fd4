"""Hot-path kernels with compiled/pure-python backend selection.

The compiled Cython backend is used when its extension module imported
cleanly; otherwise the numpy fallback takes over transparently.  Setting
the environment variable ``CORRINT_PURE_PYTHON=1`` forces the fallback
(useful for benchmarking and for debugging suspected kernel issues).
Both backends implement the same ``eval_amplitude`` contract and agree to
~1e-13 relative.
"""

from __future__ import annotations

import os

from . import _py

_FORCE_PY = os.environ.get("CORRINT_PURE_PYTHON", "") not in ("", "0")

if not _FORCE_PY:
    try:
        from . import _core  # compiled extension, absent on fallback installs
        _impl = _core
        BACKEND = "c"
    except ImportError:
        _impl = _py
        BACKEND = "python"
else:
    _impl = _py
    BACKEND = "python"

eval_amplitude = _impl.eval_amplitude


def get_backend() -> str:
    """Name of the active backend: 'c' or 'python'."""
    return BACKEND
