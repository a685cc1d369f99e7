"""Update-loop kernels with import-time backend selection.

The compiled extension is used when present; otherwise the numpy
fallback takes over. Set ``DRIFTREG_PURE_PYTHON=1`` to force the fallback
even when the extension is built (used by the backend benchmark), or call
``set_backend`` at runtime. Backend switching is not thread safe; do it
before training starts.
"""
from __future__ import annotations

import os

from . import _pykernels

_BACKENDS = {"python": _pykernels}
try:
    from . import _speedups

    _BACKENDS["compiled"] = _speedups
except ImportError:
    _speedups = None

_FORCE_PYTHON = os.environ.get("DRIFTREG_PURE_PYTHON", "") not in ("", "0")

PENALTY_NONE = _pykernels.PENALTY_NONE
PENALTY_L1 = _pykernels.PENALTY_L1
PENALTY_L2 = _pykernels.PENALTY_L2
PA_UNCLIPPED = _pykernels.PA_UNCLIPPED
PA_CLIPPED = _pykernels.PA_CLIPPED
PA_SOFT = _pykernels.PA_SOFT

_active_name = "python"
gd_pass = _pykernels.gd_pass
pa_pass = _pykernels.pa_pass
rls_pass = _pykernels.rls_pass


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend_name() -> str:
    return _active_name


def get_backend(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; available: {available_backends()}"
        ) from None


def set_backend(name: str) -> None:
    global _active_name, gd_pass, pa_pass, rls_pass
    module = get_backend(name)
    _active_name = name
    gd_pass = module.gd_pass
    pa_pass = module.pa_pass
    rls_pass = module.rls_pass


set_backend("python" if (_FORCE_PYTHON or _speedups is None) else "compiled")
