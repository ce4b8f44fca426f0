"""Per-ray electromagnetic field computation.

Conventions, used consistently everywhere:

* time factor e^{+j omega t}, propagation phase e^{-j k d};
* complex permittivity eps = eps' - j eps'' with eps'' >= 0 for passive
  media;
* Fresnel coefficients in the standard right-handed ray bases: for each
  ray the parallel unit vector is e_par = e_perp x k_hat on both the
  incident and the reflected side.  At normal incidence (eps = 4) this
  yields gamma_perp = -1/3 and gamma_par = +1/3; at grazing both tend
  to -1.
* field amplitudes are dimensionless ratios relative to a unit isotropic
  transmitter, so a line-of-sight path of length d has amplitude
  lambda / (4 pi d).

The transmit field equally weights the two transverse components: the
launch Jones vector is (1, 1)/sqrt(2) in the departure frame, and the
receiver projects onto (1, 1)/sqrt(2) in the arrival frame.  The scalar
per-path gain is the average of this contraction evaluated along the
path and along its reverse, which makes path gain exactly reciprocal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from risray.geo import Scene, itu_permittivity

SPEED_OF_LIGHT = 299_792_458.0

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def wavelength(freq_ghz: float) -> float:
    return SPEED_OF_LIGHT / (freq_ghz * 1e9)


class FrameError(ValueError):
    """Degenerate propagation frame (ray parallel to a surface, etc.)."""


@dataclass(frozen=True)
class FresnelPair:
    """Reflection coefficients for perpendicular and parallel polarization."""

    gamma_perp: complex
    gamma_par: complex

    @property
    def mean(self) -> complex:
        """Equal-weight (Jones-averaged) scalar coefficient."""
        return 0.5 * (self.gamma_perp + self.gamma_par)


@dataclass
class JonesField:
    """Two complex transverse components in an explicit orthonormal basis.

    ``e1``/``e2`` are unit vectors orthogonal to the propagation direction
    ``k``; the triad (e1, e2, k) need not be right-handed after basis
    updates, only orthonormal.
    """

    components: np.ndarray  # (2,) complex
    e1: np.ndarray
    e2: np.ndarray
    k: np.ndarray

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.components))


def fresnel(eps: complex, incidence_angle: float) -> FresnelPair:
    """Fresnel reflection coefficients at ``incidence_angle`` from the normal.

    The square-root branch of sqrt(eps - sin^2 theta) is the principal
    branch, which under the e^{+j omega t} convention makes the transmitted
    wave decay into a lossy medium.
    """
    if not 0.0 <= incidence_angle < math.pi / 2:
        raise ValueError("incidence angle must be in [0, pi/2)")
    ct = math.cos(incidence_angle)
    st2 = math.sin(incidence_angle) ** 2
    root = np.sqrt(complex(eps) - st2)
    g_perp = (ct - root) / (ct + root)
    g_par = (eps * ct - root) / (eps * ct + root)
    return FresnelPair(complex(g_perp), complex(g_par))


def free_space_gain(distance: float, freq_ghz: float) -> complex:
    """Complex amplitude lambda/(4 pi d) * e^{-j 2 pi d / lambda}."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    lam = wavelength(freq_ghz)
    phase = -2.0 * math.pi * distance / lam
    return lam / (4.0 * math.pi * distance) * complex(math.cos(phase), math.sin(phase))


def transverse_frame(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic transverse basis (e1 horizontal-ish, e2 = k x e1)."""
    k = np.asarray(k, dtype=float)
    h = np.array([-k[1], k[0], 0.0])  # z x k
    norm = np.linalg.norm(h)
    if norm < 1e-12:
        e1 = np.array([1.0, 0.0, 0.0])
    else:
        e1 = h / norm
    e2 = np.cross(k, e1)
    return e1, e2 / np.linalg.norm(e2)


def launch_field(k: np.ndarray) -> JonesField:
    """Equal-weight transmit field in the departure frame of direction k."""
    e1, e2 = transverse_frame(k)
    return JonesField(np.array([_INV_SQRT2, _INV_SQRT2], dtype=complex), e1, e2, np.asarray(k, float))


def apply_reflection(field: JonesField, pair: FresnelPair, normal: np.ndarray) -> JonesField:
    """Reflect ``field`` off a face with outward ``normal``.

    Rotates the field into the incidence (perp, par) basis, scales the
    components by the Fresnel pair, and re-expresses the result in the
    right-handed basis of the reflected direction.
    """
    k_in = field.k
    normal = np.asarray(normal, dtype=float)
    cos_i = -float(np.dot(k_in, normal))
    if abs(cos_i) < 1e-12:
        raise FrameError("propagation parallel to surface")
    k_out = k_in + 2.0 * cos_i * normal
    k_out /= np.linalg.norm(k_out)

    perp = np.cross(k_in, normal)
    pnorm = np.linalg.norm(perp)
    if pnorm < 1e-12:
        # Normal incidence: the plane of incidence is degenerate, any
        # transverse direction serves as the perpendicular axis.
        perp = field.e1
    else:
        perp = perp / pnorm
    par_in = np.cross(perp, k_in)
    par_out = np.cross(perp, k_out)

    c_in = np.array(
        [
            field.components[0] * np.dot(field.e1, perp) + field.components[1] * np.dot(field.e2, perp),
            field.components[0] * np.dot(field.e1, par_in) + field.components[1] * np.dot(field.e2, par_in),
        ]
    )
    c_out = np.array([c_in[0] * pair.gamma_perp, c_in[1] * pair.gamma_par])
    return JonesField(c_out, perp, par_out, k_out)


def realign(field: JonesField, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    """Components of ``field`` in the (e1, e2) basis of the same k."""
    return np.array(
        [
            field.components[0] * np.dot(field.e1, e1) + field.components[1] * np.dot(field.e2, e1),
            field.components[0] * np.dot(field.e1, e2) + field.components[1] * np.dot(field.e2, e2),
        ]
    )


@dataclass(frozen=True)
class PathGain:
    """Complex amplitude (unit-transmit field ratio) and propagation delay."""

    amplitude: complex
    delay: float
    spreading: complex = 0.0    # free-space term lambda/(4 pi L) e^{-jkL}
    jones_scalar: complex = 1.0  # product of interaction effects
    diffraction_scalar: complex = 1.0


def _segment_dirs(vertices: np.ndarray) -> np.ndarray:
    d = np.diff(vertices, axis=0)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _jones_contraction(vertices, pairs) -> complex:
    """Equal-weight Jones contraction along one traversal direction.

    ``pairs`` holds one FresnelPair (or None for a diffraction vertex,
    which is polarization-neutral here) per interior vertex.
    """
    dirs = _segment_dirs(vertices)
    field = launch_field(dirs[0])
    for i, pair in enumerate(pairs):
        if pair is None:
            # Diffraction acts as a scalar factor outside the Jones
            # transport; carry the basis across the bend by the minimal
            # rotation taking the old direction into the new one.
            field = _bend_transport(field, dirs[i + 1])
        else:
            v_in = dirs[i]
            v_out = dirs[i + 1]
            n = _mirror_normal(v_in, v_out)
            field = apply_reflection(field, pair, n)
    e1, e2 = transverse_frame(dirs[-1])
    comps = realign(field, e1, e2)
    return complex((comps[0] + comps[1]) * _INV_SQRT2)


def _bend_transport(field: JonesField, k_new: np.ndarray) -> JonesField:
    """Parallel-transport the field frame from field.k to ``k_new``."""
    k_old = field.k
    axis = np.cross(k_old, k_new)
    s = np.linalg.norm(axis)
    c = float(np.dot(k_old, k_new))
    if s < 1e-14:
        return JonesField(field.components.copy(), field.e1, field.e2, np.asarray(k_new, float))
    axis = axis / s

    def rot(v):
        return v * c + np.cross(axis, v) * s + axis * np.dot(axis, v) * (1.0 - c)

    return JonesField(field.components.copy(), rot(field.e1), rot(field.e2), np.asarray(k_new, float))


def _mirror_normal(v_in: np.ndarray, v_out: np.ndarray) -> np.ndarray:
    """Unit normal of the plane that reflects v_in into v_out."""
    n = v_out - v_in
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise FrameError("degenerate reflection (directions equal)")
    return n / norm


def path_jones_scalar(vertices: np.ndarray, pairs) -> complex:
    """Reciprocity-symmetrized equal-weight scalar of the Jones transport.

    Average of the forward contraction and of the contraction along the
    geometrically reversed path; the two coincide whenever no
    cross-polarization mixing occurs.
    """
    fwd = _jones_contraction(vertices, pairs)
    rev = _jones_contraction(vertices[::-1], list(reversed(pairs)))
    return 0.5 * (fwd + rev)


def path_gain(path, scene: Scene, freq_ghz: float) -> PathGain:
    """Coherent complex gain of one propagation path.

    Spreading and carrier phase come from the unfolded total length; each
    reflection applies its Fresnel pair through the Jones transport; each
    diffraction contributes the scalar wedge factor (coefficient times
    edge-spreading correction).
    """
    from risray import utd  # local import: utd depends on em

    vertices = np.asarray(path.vertices, dtype=float)
    length = float(path.length)
    lam = wavelength(freq_ghz)
    spreading = free_space_gain(length, freq_ghz)

    pairs = []
    diff_scalar = complex(1.0)
    seg_len = np.linalg.norm(np.diff(vertices, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    for i, inter in enumerate(path.interactions):
        if inter.kind == "R":
            face = scene.faces[inter.face]
            eps = itu_permittivity(face.material, freq_ghz)
            v_in = (vertices[i + 1] - vertices[i]) / seg_len[i]
            cos_i = abs(float(np.dot(v_in, face.normal)))
            theta = math.acos(min(1.0, cos_i))
            pairs.append(fresnel(eps, theta))
        else:  # diffraction
            edge = scene.edges[inter.face]
            s_before = float(cum[i + 1])
            s_after = length - s_before
            v_in = (vertices[i + 1] - vertices[i]) / seg_len[i]
            v_out = (vertices[i + 2] - vertices[i + 1]) / seg_len[i + 1]
            diff_scalar *= utd.wedge_factor(
                scene, edge, vertices[i + 1], v_in, v_out, s_before, s_after, freq_ghz
            )
            pairs.append(None)

    jones = path_jones_scalar(vertices, pairs)
    amplitude = spreading * jones * diff_scalar
    return PathGain(
        amplitude=complex(amplitude),
        delay=length / SPEED_OF_LIGHT,
        spreading=complex(spreading),
        jones_scalar=complex(jones),
        diffraction_scalar=complex(diff_scalar),
    )
