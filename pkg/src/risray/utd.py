"""Uniform-theory-of-diffraction wedge coefficients.

Kouyoumjian-Pathak first-order coefficients with the standard transition
function, extended to dielectric wedges with heuristic face reflection
coefficients.  Angles follow the usual convention: phi' (incidence) and
phi (diffraction) are measured from the o-face through the wedge exterior,
which spans [0, n*pi].

Time convention e^{+j omega t}, fields e^{-j k s}; the transition function
is F(x) = 2j sqrt(x) e^{jx} * integral_{sqrt(x)}^inf e^{-j t^2} dt,
evaluated with scipy's modified negative Fresnel integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import modfresnelm

from risray import em
from risray.geo import itu_permittivity

_SING_TOL = 1e-7


def transition(x: float) -> complex:
    """Kouyoumjian transition function F(x) for x > 0."""
    sx = math.sqrt(x)
    fm = modfresnelm(sx)[0]
    return 2j * sx * complex(math.cos(x), math.sin(x)) * fm


def _wrap_n(beta: float, n: float, sign: int) -> int:
    """Integer N minimizing |2 pi n N - (beta + sign*pi)|."""
    return round((beta + sign * math.pi) / (2.0 * math.pi * n))


def _cot_f_term(k: float, n: float, L: float, beta: float, sign: int) -> complex:
    """cot((pi + sign*beta)/(2n)) * F(k L a(beta)).

    The product is finite across the cotangent pole (the transition
    function vanishes there at a matching rate); arguments closer to the
    pole than _SING_TOL are nudged onto it, which is accurate to ~1e-7
    relative and keeps the correct one-sided limit.
    """
    N = _wrap_n(beta, n, sign)
    eps = beta + sign * math.pi - 2.0 * math.pi * n * N
    if abs(eps) < _SING_TOL:
        nudge = _SING_TOL if eps >= 0 else -_SING_TOL
        beta = beta + (nudge - eps)
    a = 2.0 * math.cos((2.0 * math.pi * n * N - beta) / 2.0) ** 2
    cot = 1.0 / math.tan((math.pi + sign * beta) / (2.0 * n))
    return cot * transition(k * L * a)


def wedge_coefficient(
    k: float,
    n: float,
    beta0: float,
    phi: float,
    phi_p: float,
    L: float,
    r_o: complex,
    r_n: complex,
) -> complex:
    """Scalar UTD diffraction coefficient D.

    ``r_o``/``r_n`` are the face reflection coefficients multiplying the
    reflection-boundary terms (set both to -1 for a soft perfect
    conductor, +1 for hard).
    """
    common = -_CEXP_M4 / (2.0 * n * math.sqrt(2.0 * math.pi * k) * math.sin(beta0))
    d1 = _cot_f_term(k, n, L, phi - phi_p, +1)
    d2 = _cot_f_term(k, n, L, phi - phi_p, -1)
    d3 = _cot_f_term(k, n, L, phi + phi_p, +1)
    d4 = _cot_f_term(k, n, L, phi + phi_p, -1)
    return common * (d1 + d2 + r_o * d4 + r_n * d3)


_CEXP_M4 = complex(math.cos(math.pi / 4), -math.sin(math.pi / 4))  # e^{-j pi/4}


@dataclass(frozen=True)
class WedgeBasis:
    tangent: np.ndarray   # unit edge direction
    t_o: np.ndarray       # in o-face, away from the edge
    n_o: np.ndarray       # o-face outward normal


def wedge_basis(scene, edge) -> WedgeBasis:
    f_o = scene.faces[edge.face_o]
    e = edge.p1 - edge.p0
    e = e / np.linalg.norm(e)
    centroid = _face_centroid(f_o)
    mid = 0.5 * (edge.p0 + edge.p1)
    t = centroid - mid
    t = t - np.dot(t, e) * e
    norm = np.linalg.norm(t)
    if norm < 1e-12:
        raise ValueError(f"degenerate wedge basis on edge {edge.name}")
    return WedgeBasis(e, t / norm, f_o.normal)


def _face_centroid(face) -> np.ndarray:
    if face.poly2d is None:
        return face.origin
    uv = face.poly2d.mean(axis=0)
    return face.origin + uv[0] * face.axis_u + uv[1] * face.axis_v


def face_angle(basis: WedgeBasis, v) -> float:
    """Angle of direction v from the o-face, measured through the exterior."""
    v = np.asarray(v, float)
    v = v - np.dot(v, basis.tangent) * basis.tangent
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        return math.nan
    v = v / norm
    ang = math.atan2(float(np.dot(v, basis.n_o)), float(np.dot(v, basis.t_o)))
    if ang < 0:
        ang += 2.0 * math.pi
    return ang


def _heuristic_reflection(eps: complex, grazing: float) -> complex:
    """Equal-weight Fresnel coefficient at a clipped grazing angle."""
    psi = min(max(grazing, 1e-6), math.pi / 2 - 1e-12)
    return em.fresnel(eps, math.pi / 2 - psi).mean


def utd_diffraction(
    n_param: float,
    beta0: float,
    phi: float,
    phi_p: float,
    s_in: float,
    s_out: float,
    freq_ghz: float,
    r_o: complex | None = None,
    r_n: complex | None = None,
    eps_o: complex | None = None,
    eps_n: complex | None = None,
) -> complex:
    """Complex diffraction factor including the edge spreading correction.

    The factor converts a free-space amplitude over the total length
    s_in + s_out into the edge-diffracted amplitude:
    factor = D * sqrt((s_in + s_out) / (s_in * s_out)).

    Face coefficients may be given directly (``r_o``/``r_n``) or derived
    from face permittivities via the heuristic clipped-angle Fresnel rule.
    """
    if s_in <= 0 or s_out <= 0:
        raise ValueError("distances must be positive")
    k = 2.0 * math.pi / em.wavelength(freq_ghz)
    L = s_in * s_out / (s_in + s_out) * math.sin(beta0) ** 2
    if r_o is None:
        r_o = _heuristic_reflection(eps_o, min(phi_p, math.pi / 2)) if eps_o is not None else -1.0
    if r_n is None:
        r_n = (
            _heuristic_reflection(eps_n, min(n_param * math.pi - phi, math.pi / 2))
            if eps_n is not None
            else -1.0
        )
    d = wedge_coefficient(k, n_param, beta0, phi, phi_p, L, r_o, r_n)
    return d * math.sqrt((s_in + s_out) / (s_in * s_out))


def wedge_factor(scene, edge, q, v_in, v_out, s_before, s_after, freq_ghz) -> complex:
    """Diffraction factor for a traced path crossing ``edge`` at q."""
    basis = wedge_basis(scene, edge)
    phi_p = face_angle(basis, -np.asarray(v_in, float))
    phi = face_angle(basis, np.asarray(v_out, float))
    sin_b = float(np.linalg.norm(np.cross(v_in, basis.tangent)))
    beta0 = math.asin(min(1.0, max(sin_b, 1e-9)))
    eps_o = itu_permittivity(scene.faces[edge.face_o].material, freq_ghz)
    eps_n = itu_permittivity(scene.faces[edge.face_n].material, freq_ghz)
    return utd_diffraction(
        edge.n_param,
        beta0,
        phi,
        phi_p,
        s_before,
        s_after,
        freq_ghz,
        eps_o=eps_o,
        eps_n=eps_n,
    )
