"""Backend selection for the path kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``SPEEDMEASURE_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the pure-Python twins are used.  Both backends produce
bit-identical output.
"""
from __future__ import annotations

import os

from . import _pykernels

ST_HORIZON = _pykernels.ST_HORIZON
ST_EXIT = _pykernels.ST_EXIT
ST_ABSORBED = _pykernels.ST_ABSORBED
ST_ESCAPED = _pykernels.ST_ESCAPED
EDGE_REFLECT = _pykernels.EDGE_REFLECT
EDGE_ABSORB = _pykernels.EDGE_ABSORB
EDGE_ESCAPE = _pykernels.EDGE_ESCAPE

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def _default() -> str:
    flag = os.environ.get("SPEEDMEASURE_PURE_PYTHON", "")
    if flag and flag != "0":
        return "python"
    return "compiled" if _ckernels is not None else "python"


DEFAULT_BACKEND = _default()


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None):
    """Kernel module for ``name`` (``"compiled"``, ``"python"``, or None for the default)."""
    name = DEFAULT_BACKEND if name is None else name
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}") from None
