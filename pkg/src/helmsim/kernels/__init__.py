"""Hot-loop kernels with selectable backend.

Two implementations of the CRC and the state integrator exist: a
compiled Cython extension (``_core``) and a pure Python fallback
(``_pure``).  The compiled one is preferred when importable; set
``HELMSIM_FORCE_PURE=1`` to force the fallback (used by the parity
tests and the benchmark).  Both expose:

    crc16(data, crc=0xffff) -> int
    hull_drag(speed, params) -> float
    deriv8(state, tl_cmd, tr_cmd, params) -> tuple
    rk4_step(state, tl_cmd, tr_cmd, dt, params) -> tuple
    BACKEND -> "compiled" | "pure"

See ``_pure`` for the parameter/state vector layout.
"""

import os

if os.environ.get("HELMSIM_FORCE_PURE") == "1":
    from . import _pure as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pure as _impl

BACKEND = _impl.BACKEND
crc16 = _impl.crc16
hull_drag = _impl.hull_drag
deriv8 = _impl.deriv8
rk4_step = _impl.rk4_step


def load_backend(name):
    """Return the named backend module ("pure" or "compiled").

    Used by the parity tests and the benchmark to compare both
    implementations inside one process regardless of which one the
    package selected at import.
    """
    if name == "pure":
        from . import _pure
        return _pure
    if name == "compiled":
        from . import _core  # raises ImportError when not built
        return _core
    raise ValueError(f"unknown kernel backend: {name!r}")
