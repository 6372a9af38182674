"""Kernel selection: compiled extension when available, numpy fallback otherwise.

Set CARLEARN_PURE to any non-empty value other than "0" to force the pure
path even when the extension is built (used by the benchmark and by tests
that cross-check the two implementations).
"""

import os

from . import pure

_force_pure = os.environ.get("CARLEARN_PURE", "") not in ("", "0")

if _force_pure:
    _impl = pure
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = pure

USING_COMPILED = _impl is not pure
IMPL_NAME = "compiled" if USING_COMPILED else "pure"

batch_lift = _impl.batch_lift
rk4_poly = _impl.rk4_poly
rk4_tug = _impl.rk4_tug
