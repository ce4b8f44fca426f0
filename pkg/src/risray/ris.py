"""RIS panel geometry, steering phases, coefficient policies and cascade.

A panel is a centered rectangular lattice of phase-only unit-amplitude
elements with a half-isotropic pattern: unit gain on the boresight
hemisphere, zero behind.  Per-element segment channels are built from
center-traced paths by steering-vector phase extrapolation across the
aperture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from risray import em


@dataclass(frozen=True)
class RisPanel:
    """Square or rectangular metaatom lattice.

    ``boresight_azimuth`` rotates the panel normal in the horizontal
    plane (0 = +x, pi/2 = +y); ``elevation_tilt`` tips it up (positive)
    or down (negative).  ``spacing`` is the element pitch in meters.
    """

    center: np.ndarray
    boresight_azimuth: float
    elevation_tilt: float
    rows: int
    cols: int
    spacing: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @property
    def normal(self) -> np.ndarray:
        ca, sa = math.cos(self.boresight_azimuth), math.sin(self.boresight_azimuth)
        ce, se = math.cos(self.elevation_tilt), math.sin(self.elevation_tilt)
        return np.array([ce * ca, ce * sa, se])

    @property
    def axis_right(self) -> np.ndarray:
        ca, sa = math.cos(self.boresight_azimuth), math.sin(self.boresight_azimuth)
        return np.array([-sa, ca, 0.0])

    @property
    def axis_up(self) -> np.ndarray:
        return np.cross(self.normal, self.axis_right)

    def element_offsets(self) -> np.ndarray:
        """(N, 3) element positions relative to the panel center."""
        r = (np.arange(self.rows) - (self.rows - 1) / 2.0) * self.spacing
        c = (np.arange(self.cols) - (self.cols - 1) / 2.0) * self.spacing
        rr, cc = np.meshgrid(r, c, indexing="ij")
        return (
            rr.reshape(-1, 1) * self.axis_up[None, :]
            + cc.reshape(-1, 1) * self.axis_right[None, :]
        )

    def element_grid_indices(self) -> np.ndarray:
        """(N, 2) array of (row, col) per element, matching element order."""
        rr, cc = np.meshgrid(np.arange(self.rows), np.arange(self.cols), indexing="ij")
        return np.column_stack([rr.ravel(), cc.ravel()])


def square_panel(center, boresight_azimuth, elevation_tilt, n_elements, freq_ghz) -> RisPanel:
    """Square panel with half-wavelength pitch at ``freq_ghz``."""
    side = math.isqrt(n_elements)
    if side * side != n_elements:
        raise ValueError(f"square arrangement needs a perfect square, got {n_elements}")
    return RisPanel(
        center=np.asarray(center, dtype=float),
        boresight_azimuth=boresight_azimuth,
        elevation_tilt=elevation_tilt,
        rows=side,
        cols=side,
        spacing=em.wavelength(freq_ghz) / 2.0,
    )


@dataclass(frozen=True)
class RisCoefficients:
    """Unit-magnitude phase configuration, phases wrapped to [-pi, pi)."""

    phases: np.ndarray
    policy: str

    def __post_init__(self):
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))

    @property
    def phasors(self) -> np.ndarray:
        return np.exp(1j * self.phases)


@dataclass(frozen=True)
class SegmentChannel:
    """Per-element complex channel of one RIS leg (to or from the panel)."""

    per_element: np.ndarray
    n_paths: int

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.per_element)


def steering_phase(panel: RisPanel, direction, freq_ghz: float) -> np.ndarray:
    """Per-element unit phasors for a plane wave along ``direction``.

    ``direction`` points away from the panel (toward the far endpoint of
    the leg); element n gets exp(+j k p_n . direction).
    """
    d = np.asarray(direction, dtype=float)
    k = 2.0 * math.pi / em.wavelength(freq_ghz)
    proj = panel.element_offsets() @ d
    return np.exp(1j * k * proj)


def element_pattern(panel: RisPanel, direction) -> float:
    """Half-isotropic gain: 1 on the boresight hemisphere, 0 behind."""
    return 1.0 if float(np.dot(direction, panel.normal)) > 0.0 else 0.0


def segment_channel(panel, paths, scene, freq_ghz, panel_at="dst") -> SegmentChannel:
    """Per-element channel from center-traced paths of one leg.

    ``panel_at`` says which end of the traced paths is the panel ("dst"
    for the inbound leg, "src" for the outbound leg).  Anti-normal
    arrivals or departures contribute nothing (half-isotropic elements).
    """
    per_element = np.zeros(panel.n_elements, dtype=complex)
    n_used = 0
    for path in paths:
        if panel_at == "dst":
            away = -np.asarray(path.arrival_dir, float)
        elif panel_at == "src":
            away = np.asarray(path.departure_dir, float)
        else:
            raise ValueError("panel_at must be 'src' or 'dst'")
        pat = element_pattern(panel, away)
        if pat == 0.0:
            continue
        gain = em.path_gain(path, scene, freq_ghz).amplitude
        per_element += gain * pat * steering_phase(panel, away, freq_ghz)
        n_used += 1
    return SegmentChannel(per_element=per_element, n_paths=n_used)


def _wrap(phases: np.ndarray) -> np.ndarray:
    return (phases + math.pi) % (2.0 * math.pi) - math.pi


def optimal_coeffs(ht: SegmentChannel, hr: SegmentChannel) -> RisCoefficients:
    """Phases that co-phase every element product term (capacity optimum)."""
    a = np.asarray(ht.per_element)
    b = np.asarray(hr.per_element)
    if a.shape != b.shape:
        raise ValueError("segment channel lengths differ")
    psi = _wrap(-(np.angle(a) + np.angle(b)))
    psi[(a == 0) | (b == 0)] = 0.0
    return RisCoefficients(phases=psi, policy="optimal")


def unit_coeffs(n: int) -> RisCoefficients:
    if n < 1:
        raise ValueError("n must be >= 1")
    return RisCoefficients(phases=np.zeros(n), policy="unit")


def random_coeffs(n: int, seed) -> RisCoefficients:
    """I.i.d. uniform phases from a deterministic seeded generator."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return RisCoefficients(phases=_wrap(rng.uniform(0.0, 2.0 * math.pi, n)), policy="random")


def cascade(ht: SegmentChannel, hr: SegmentChannel, coeffs: RisCoefficients) -> complex:
    """Sum over elements of hr_n * e^{j psi_n} * ht_n."""
    a = np.asarray(ht.per_element)
    b = np.asarray(hr.per_element)
    if a.shape != b.shape or a.shape != coeffs.phases.shape:
        raise ValueError("length mismatch between channels and coefficients")
    return complex(np.sum(b * coeffs.phasors * a))


def coefficients_table(panel: RisPanel, coeffs: RisCoefficients) -> list[tuple[int, int, int, float]]:
    """Rows of (element, row, col, phase_rad) for reproducibility dumps."""
    grid = panel.element_grid_indices()
    return [
        (i, int(grid[i, 0]), int(grid[i, 1]), float(coeffs.phases[i]))
        for i in range(panel.n_elements)
    ]
