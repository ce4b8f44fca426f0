"""Propagation path search: SBR engine, image-method oracle, filters."""

from risray.tracer.paths import (
    DIFFRACTION,
    Interaction,
    PropagationPath,
    REFLECTION,
    TraceConfig,
    TraceError,
    canonical_sort,
    make_path,
)
from risray.tracer.sbr import filter_paths, trace, trace_many, refine_sequence
from risray.tracer.image import image_trace
from risray.tracer.kernel import BACKEND as KERNEL_BACKEND

__all__ = [
    "DIFFRACTION",
    "REFLECTION",
    "Interaction",
    "PropagationPath",
    "TraceConfig",
    "TraceError",
    "canonical_sort",
    "make_path",
    "filter_paths",
    "trace",
    "trace_many",
    "refine_sequence",
    "image_trace",
    "KERNEL_BACKEND",
]
