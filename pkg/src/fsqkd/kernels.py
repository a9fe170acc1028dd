"""Hot-kernel backend selection.

Imports the compiled extension if it was built, otherwise the vectorized
NumPy fallback.  Both expose identical call signatures; ``BACKEND`` names
the active one ("compiled" or "python").  ``benchmarks/bench_kernels.py``
times the two side by side.
"""

from __future__ import annotations

from . import _kernels_py

try:
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

scaled_re_erf = _impl.scaled_re_erf
capture_interval = _impl.capture_interval
capture_segments = _impl.capture_segments
lg_radial_overlap = _impl.lg_radial_overlap


def backends():
    """Mapping of available backend name -> module."""
    out = {"python": _kernels_py}
    if BACKEND == "compiled":
        out["compiled"] = _impl
    return out


__all__ = [
    "BACKEND",
    "backends",
    "scaled_re_erf",
    "capture_interval",
    "capture_segments",
    "lg_radial_overlap",
]
