"""Single-diffraction path finding on wedge edges.

For every candidate edge the Keller-cone point is solved in closed form
(the point on the edge line minimizing source-to-observer distance, which
enforces equal angles with the edge).  Reflections are allowed before and
after the diffraction by mirroring the endpoints, capped at one bounce on
each side; the total reflection budget of the TraceConfig still applies.
"""

from __future__ import annotations

import math

import numpy as np

from risray.tracer import kernel
from risray.tracer.paths import DIFFRACTION, Interaction, REFLECTION, make_path

# At most this many reflections on each side of the diffraction point.
# The traversal-order bookkeeping below assumes <= 1 per side.
MAX_SIDE_REFLECTIONS = 1

_T_TOL = 1e-9


def keller_point(p0, edge_dir, edge_len, a, b):
    """Point on the edge segment with equal ray angles to a and b.

    Returns the parameter t along the edge, or None when either endpoint
    sits on the edge line or the stationary point falls outside the
    segment.
    """
    ua = float(np.dot(a - p0, edge_dir))
    ub = float(np.dot(b - p0, edge_dir))
    ra = float(np.linalg.norm(a - p0 - ua * edge_dir))
    rb = float(np.linalg.norm(b - p0 - ub * edge_dir))
    if ra < 1e-9 or rb < 1e-9:
        return None
    t = (ua * rb + ub * ra) / (ra + rb)
    if not _T_TOL * edge_len < t < edge_len * (1.0 - _T_TOL):
        return None
    return t


def _exterior_angles(scene, edge, q, v_in, v_out):
    """Wedge angles (phi_incident, phi_diffracted, beta0) or None.

    Angles are measured from the o-face through the exterior region;
    directions outside [0, n*pi] are inside the wedge material.
    """
    from risray import utd

    basis = utd.wedge_basis(scene, edge)
    phi_p = utd.face_angle(basis, -np.asarray(v_in, float))
    phi = utd.face_angle(basis, np.asarray(v_out, float))
    n_pi = edge.n_param * math.pi
    if not -1e-9 <= phi_p <= n_pi + 1e-9:
        return None
    if not -1e-9 <= phi <= n_pi + 1e-9:
        return None
    sin_b = float(np.linalg.norm(np.cross(v_in, basis.tangent)))
    if sin_b < 1e-6:
        return None  # ray along the edge
    return phi_p, phi, math.asin(min(1.0, sin_b))


def _mirror_chain(scene, start, faces):
    """Successive mirror images of ``start``; None when a face rejects."""
    imgs = [np.asarray(start, float)]
    for f in faces:
        h = float(np.dot(imgs[-1] - f.origin, f.normal))
        if h <= 1e-9:
            return None
        imgs.append(imgs[-1] - 2.0 * h * f.normal)
    return imgs


def _walk_back(scene, from_point, imgs, faces):
    """Reflection points between ``from_point`` and the mirrored endpoint."""
    from risray.tracer.sbr import point_in_face

    pts = []
    cur = np.asarray(from_point, float)
    for k in range(len(faces) - 1, -1, -1):
        f = faces[k]
        seg = imgs[k + 1] - cur
        denom = float(np.dot(seg, f.normal))
        if abs(denom) < 1e-12:
            return None
        t = float(np.dot(f.origin - cur, f.normal)) / denom
        if not 1e-9 < t < 1 - 1e-9:
            return None
        p = cur + t * seg
        if not point_in_face(f, p):
            return None
        pts.append(p)
        cur = p
    pts.reverse()
    return pts


def diffraction_paths(scene, src, dst, cfg):
    """All valid single-diffraction paths from src to dst."""
    from risray.tracer.sbr import scene_kernel

    if not scene.edges:
        return []
    geom = scene_kernel(scene)
    src = np.asarray(src, float)
    dst = np.asarray(dst, float)

    pre_orders = _side_sequences(scene, src, cfg)
    post_orders = _side_sequences(scene, dst, cfg)

    out = []
    for edge in scene.edges:
        p0 = edge.p0
        edge_vec = edge.p1 - edge.p0
        edge_len = float(np.linalg.norm(edge_vec))
        e_dir = edge_vec / edge_len
        for pre_faces, src_img in pre_orders:
            for post_faces, dst_img in post_orders:
                if len(pre_faces) + len(post_faces) > cfg.max_reflections:
                    continue
                t = keller_point(p0, e_dir, edge_len, src_img[-1], dst_img[-1])
                if t is None:
                    continue
                q = p0 + t * e_dir
                v_in = q - src_img[-1]
                v_in = v_in / np.linalg.norm(v_in)
                v_out = dst_img[-1] - q
                v_out = v_out / np.linalg.norm(v_out)
                if _exterior_angles(scene, edge, q, v_in, v_out) is None:
                    continue
                pre_pts = _walk_back(scene, q, src_img, pre_faces)
                if pre_pts is None:
                    continue
                post_pts = _walk_back(scene, q, dst_img, post_faces)
                if post_pts is None:
                    continue
                vertices = np.vstack([src] + pre_pts + [q] + post_pts[::-1] + [dst])
                segs = np.diff(vertices, axis=0)
                lens = np.linalg.norm(segs, axis=1)
                if np.any(lens < 1e-9):
                    continue
                ok = True
                for k, f in enumerate(pre_faces):
                    if np.dot(segs[k] / lens[k], f.normal) >= 0:
                        ok = False
                if ok:
                    for k, f in enumerate(post_faces):
                        # post sequence runs dst -> ... -> q in mirror order
                        seg_i = len(vertices) - 2 - k
                        if np.dot(-segs[seg_i] / lens[seg_i], f.normal) >= 0:
                            ok = False
                if not ok:
                    continue
                if np.any(kernel.occluded(geom, scene.tri_face, vertices[:-1], vertices[1:])):
                    continue
                inter = (
                    [Interaction(REFLECTION, f.index) for f in pre_faces]
                    + [Interaction(DIFFRACTION, edge.index)]
                    + [Interaction(REFLECTION, f.index) for f in reversed(post_faces)]
                )
                out.append(make_path(vertices, inter))
    return out


def _side_sequences(scene, endpoint, cfg):
    """Mirror sequences of order 0..cap around one endpoint."""
    cap = min(MAX_SIDE_REFLECTIONS, cfg.max_reflections)
    seqs = [([], [np.asarray(endpoint, float)])]
    if cap >= 1:
        for f in scene.faces:
            imgs = _mirror_chain(scene, endpoint, [f])
            if imgs is not None:
                seqs.append(([f], imgs))
    return seqs
