"""Exhaustive image-method path solver.

Independent oracle for the SBR tracer: enumerates every face sequence up
to the requested reflection order, solves the mirror construction
directly, and validates visibility with its own numpy ray casting.  It
deliberately shares no geometry code with the SBR path (discovery,
refinement and occlusion are all reimplemented here) so that the
equivalence tests compare two independent routes.
"""

from __future__ import annotations

import math

import numpy as np

from risray.tracer.paths import (
    Interaction,
    PropagationPath,
    REFLECTION,
    TraceError,
    canonical_sort,
    make_path,
)

_MAX_ORDER = 3


def _segment_blocked(scene, a, b, shrink=1e-6) -> bool:
    """Any scene geometry strictly between a and b (numpy ray cast)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    d = b - a
    length = float(np.linalg.norm(d))
    if length <= 2 * shrink:
        return False
    u = d / length
    o = a + u * shrink
    span = length - 2 * shrink

    # ground plane
    if abs(u[2]) > 1e-12:
        tg = -o[2] / u[2]
        if 0.0 < tg < span:
            return True

    tris = scene.triangles
    if len(tris) == 0:
        return False
    v0 = tris[:, 0, :]
    e1 = tris[:, 1, :] - v0
    e2 = tris[:, 2, :] - v0
    pvec = np.cross(u, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > 1e-12
    inv = np.zeros_like(det)
    inv[ok] = 1.0 / det[ok]
    tvec = o - v0
    uu = np.einsum("ij,ij->i", tvec, pvec) * inv
    qvec = np.cross(tvec, e1)
    vv = qvec @ u * inv
    tt = np.einsum("ij,ij->i", e2, qvec) * inv
    hit = ok & (uu >= -1e-9) & (vv >= -1e-9) & (uu + vv <= 1 + 1e-9) & (tt > 0) & (tt < span)
    return bool(hit.any())


def _inside_face(face, p) -> bool:
    if face.poly2d is None:
        return True
    rel = np.asarray(p, float) - face.origin
    x = float(np.dot(rel, face.axis_u))
    y = float(np.dot(rel, face.axis_v))
    poly = face.poly2d
    n = len(poly)
    inside = False
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        L2 = dx * dx + dy * dy
        if L2 > 0:
            t = max(0.0, min(1.0, ((x - x1) * dx + (y - y1) * dy) / L2))
            if (x - x1 - t * dx) ** 2 + (y - y1 - t * dy) ** 2 < 1e-14:
                return True
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xi:
                inside = not inside
    return inside


def _solve_sequence(scene, src, dst, face_seq) -> PropagationPath | None:
    faces = [scene.faces[i] for i in face_seq]
    img = np.asarray(src, float)
    images = []
    for f in faces:
        h = float(np.dot(img - f.origin, f.normal))
        if h <= 1e-9:
            return None
        img = img - 2.0 * h * f.normal
        images.append(img)

    hits = []
    point = np.asarray(dst, float)
    for k in range(len(faces) - 1, -1, -1):
        f = faces[k]
        toward = images[k] - point
        denom = float(np.dot(toward, f.normal))
        if abs(denom) < 1e-12:
            return None
        t = float(np.dot(f.origin - point, f.normal)) / denom
        if not 1e-9 < t < 1 - 1e-9:
            return None
        point = point + t * toward
        if not _inside_face(f, point):
            return None
        hits.append(point)
    hits.reverse()

    vertices = np.vstack([np.asarray(src, float)] + hits + [np.asarray(dst, float)])
    segs = np.diff(vertices, axis=0)
    lens = np.linalg.norm(segs, axis=1)
    if np.any(lens < 1e-9):
        return None
    for k, f in enumerate(faces):
        if np.dot(segs[k] / lens[k], f.normal) >= 0:
            return None
    for k in range(len(vertices) - 1):
        if _segment_blocked(scene, vertices[k], vertices[k + 1]):
            return None
    return make_path(vertices, [Interaction(REFLECTION, f.index) for f in faces])


def image_trace(scene, src, dst, max_reflections: int) -> list[PropagationPath]:
    """All paths up to ``max_reflections`` bounces, exact by construction."""
    if max_reflections > _MAX_ORDER:
        raise TraceError(f"image_trace supports at most {_MAX_ORDER} reflections")
    if max_reflections < 0:
        raise TraceError("max_reflections must be >= 0")
    src = np.asarray(src, float)
    dst = np.asarray(dst, float)
    if src[2] <= 0 or dst[2] <= 0:
        raise TraceError("endpoints must be above ground")
    if scene.contains_point(src) or scene.contains_point(dst):
        raise TraceError("endpoint inside a building")

    paths: list[PropagationPath] = []
    if not _segment_blocked(scene, src, dst):
        paths.append(make_path(np.vstack([src, dst]), []))

    n_faces = len(scene.faces)
    stack: list[tuple[int, ...]] = [(i,) for i in range(n_faces)]
    while stack:
        seq = stack.pop()
        if len(seq) <= max_reflections:
            p = _solve_sequence(scene, src, dst, seq)
            if p is not None:
                paths.append(p)
            if len(seq) < max_reflections:
                stack.extend(seq + (j,) for j in range(n_faces) if j != seq[-1])
    return canonical_sort(paths)
