"""Path and configuration types shared across the tracer."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class TraceError(ValueError):
    """Invalid trace request (endpoint inside geometry, bad config...)."""


REFLECTION = "R"
DIFFRACTION = "D"


@dataclass(frozen=True)
class Interaction:
    kind: str          # "R" or "D"
    face: int          # face index for R, edge index for D

    def name(self, scene) -> str:
        if self.kind == REFLECTION:
            return f"R:{scene.faces[self.face].name}"
        return f"D:{scene.edges[self.face].name}"


@dataclass(frozen=True)
class PropagationPath:
    """Geometric path from source to destination.

    ``vertices`` has one row per point (source, interaction points,
    destination); ``interactions`` one entry per interior vertex.
    """

    vertices: np.ndarray
    interactions: tuple[Interaction, ...]
    length: float
    departure_dir: np.ndarray
    arrival_dir: np.ndarray

    @property
    def is_los(self) -> bool:
        return len(self.interactions) == 0

    def signature(self, scene) -> str:
        return "|".join(i.name(scene) for i in self.interactions)

    def seq_key(self) -> tuple:
        return tuple((i.kind, i.face) for i in self.interactions)


def make_path(vertices, interactions) -> PropagationPath:
    v = np.asarray(vertices, dtype=np.float64)
    segs = np.diff(v, axis=0)
    seg_len = np.linalg.norm(segs, axis=1)
    return PropagationPath(
        vertices=v,
        interactions=tuple(interactions),
        length=float(seg_len.sum()),
        departure_dir=segs[0] / seg_len[0],
        arrival_dir=segs[-1] / seg_len[-1],
    )


def canonical_sort(paths: list[PropagationPath]) -> list[PropagationPath]:
    """Deterministic path ordering: interaction count, length, sequence."""
    return sorted(paths, key=lambda p: (len(p.interactions), p.length, p.seq_key()))


@dataclass(frozen=True)
class TraceConfig:
    """Tracer bounds and resolution.

    ``angular_resolution`` is the SBR launch-grid spacing in radians;
    discovered candidates are refined to exact specular geometry, so the
    resolution affects which paths are found, never their accuracy.
    """

    max_reflections: int = 5
    max_diffractions: int = 0
    angular_resolution: float = math.radians(0.25)
    dedup_tolerance: float = 1e-3

    def __post_init__(self):
        if self.max_reflections < 0:
            raise TraceError("max_reflections must be >= 0")
        if self.max_diffractions not in (0, 1):
            raise TraceError("max_diffractions must be 0 or 1")
        if not 0 < self.angular_resolution <= math.radians(30):
            raise TraceError("angular_resolution out of range")
        if self.dedup_tolerance <= 0:
            raise TraceError("dedup_tolerance must be positive")
