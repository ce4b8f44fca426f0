"""Kernel backend selection.

Prefers the compiled Cython extension; falls back to the pure-numpy
implementation when the extension is unavailable.  Set RISRAY_KERNEL to
``python`` or ``compiled`` to force a backend (the benchmark and the
parity tests rely on this).
"""

from __future__ import annotations

import os

_forced = os.environ.get("RISRAY_KERNEL", "").strip().lower()

if _forced == "python":
    from risray.tracer import _kernel_py as _impl
elif _forced == "compiled":
    from risray.tracer import _kernel as _impl  # raises if not built
else:
    try:
        from risray.tracer import _kernel as _impl
    except ImportError:
        from risray.tracer import _kernel_py as _impl

BACKEND: str = _impl.BACKEND
prepare = _impl.prepare
nearest_hit = _impl.nearest_hit
occluded = _impl.occluded
sbr_candidates = _impl.sbr_candidates


def get_backend(name: str | None = None):
    """Return a specific kernel module ('python' or 'compiled')."""
    if name in (None, BACKEND):
        return _impl
    if name == "python":
        from risray.tracer import _kernel_py

        return _kernel_py
    if name == "compiled":
        from risray.tracer import _kernel

        return _kernel
    raise ValueError(f"unknown kernel backend {name!r}")
