"""Quantile-regression kernel backend selection.

Prefers the compiled Cython extension; falls back to the numpy
implementation when the extension was not built. Set PLANU_FORCE_PY_KERNELS=1
to force the fallback (used by the kernel parity tests and the benchmark).
"""

import os

from . import _qr_py

if os.environ.get("PLANU_FORCE_PY_KERNELS"):
    _impl = _qr_py
else:
    try:
        from . import _qr_c as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _qr_py

BACKEND = _impl.BACKEND
qr_loss = _impl.qr_loss
qr_gradient = _impl.qr_gradient

__all__ = ["BACKEND", "qr_loss", "qr_gradient"]
