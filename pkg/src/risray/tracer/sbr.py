"""Shooting-and-bouncing-rays path search with exact image refinement.

Rays are launched on a subdivided-icosahedron grid.  A ray passing within
the growing reception sphere of a receiver nominates its reflection
sequence as a candidate; each candidate is then solved exactly with the
mirror-image construction, so the launch resolution only controls path
discovery, never path accuracy.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from risray.tracer import kernel
from risray.tracer.paths import (
    Interaction,
    PropagationPath,
    REFLECTION,
    TraceError,
    canonical_sort,
    make_path,
)

_ICO_EDGE_ARC = 1.1071487177940904  # icosahedron edge arc, ~63.43 deg
_CAPTURE_BASE = 0.05                # meters
# Capture radius grows as slack * grid spacing * unfolded length.  The
# slack covers near-grazing bounces, where half of a direction's grid
# neighborhood never reaches the reflector and the effective angular
# error doubles.
_CAPTURE_SLACK = 1.5


@functools.lru_cache(maxsize=8)
def icosphere_directions(level: int) -> np.ndarray:
    """Unit vectors of a subdivided icosahedron (10*4^level + 2 points)."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    cache: dict[tuple[int, int], int] = {}

    def midpoint(a: int, b: int) -> int:
        key = (min(a, b), max(a, b))
        if key not in cache:
            m = verts[a] + verts[b]
            verts.append(m / np.linalg.norm(m))
            cache[key] = len(verts) - 1
        return cache[key]

    for _ in range(level):
        new_faces = []
        for (a, b, c) in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.ascontiguousarray(np.vstack(verts))


def launch_grid(angular_resolution: float) -> tuple[np.ndarray, float]:
    """Direction grid plus its worst-case angular spacing (radians)."""
    level = max(0, math.ceil(math.log2(_ICO_EDGE_ARC / angular_resolution)))
    dirs = icosphere_directions(level)
    return dirs, _ICO_EDGE_ARC / 2**level


def scene_kernel(scene):
    """Prepared kernel geometry for a scene, cached on the scene object."""
    cached = getattr(scene, "_kernel_geom", None)
    if cached is None:
        cached = kernel.prepare(scene.triangles)
        object.__setattr__(scene, "_kernel_geom", cached)
    return cached


def point_in_face(face, p, tol=1e-7) -> bool:
    """Is the 3D point p (already on the face plane) within the face?"""
    if face.poly2d is None:
        return True  # infinite ground plane
    rel = np.asarray(p, float) - face.origin
    u = float(np.dot(rel, face.axis_u))
    v = float(np.dot(rel, face.axis_v))
    return _point_in_poly2d(u, v, face.poly2d, tol)


def _point_in_poly2d(x, y, poly, tol) -> bool:
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        # boundary proximity counts as inside
        dx, dy = x2 - x1, y2 - y1
        L2 = dx * dx + dy * dy
        if L2 > 0:
            t = max(0.0, min(1.0, ((x - x1) * dx + (y - y1) * dy) / L2))
            if (x - x1 - t * dx) ** 2 + (y - y1 - t * dy) ** 2 < tol * tol:
                return True
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xi:
                inside = not inside
    return inside


def mirror_point(p: np.ndarray, face) -> np.ndarray:
    d = float(np.dot(p - face.origin, face.normal))
    return p - 2.0 * d * face.normal


def refine_sequence(scene, src, dst, seq) -> PropagationPath | None:
    """Exact specular path for a face sequence, or None if invalid.

    Mirrors the source through the face planes, walks back from the
    destination, and validates in-face reflection points, front-side
    incidence and segment visibility.
    """
    geom = scene_kernel(scene)
    faces = [scene.faces[int(f)] for f in seq]

    imgs = [np.asarray(src, dtype=float)]
    for f in faces:
        if float(np.dot(imgs[-1] - f.origin, f.normal)) <= 1e-9:
            return None  # source image behind the face: no specular solution
        imgs.append(mirror_point(imgs[-1], f))

    pts_rev = [np.asarray(dst, dtype=float)]
    cur = pts_rev[0]
    for k in reversed(range(len(faces))):
        f = faces[k]
        img = imgs[k + 1]
        seg = img - cur
        denom = float(np.dot(seg, f.normal))
        if abs(denom) < 1e-12:
            return None
        t = float(np.dot(f.origin - cur, f.normal)) / denom
        if not 1e-9 < t < 1.0 - 1e-9:
            return None
        p = cur + t * seg
        if not point_in_face(f, p):
            return None
        pts_rev.append(p)
        cur = p

    vertices = [np.asarray(src, dtype=float)] + pts_rev[1:][::-1] + [pts_rev[0]]
    v = np.asarray(vertices)
    segs = np.diff(v, axis=0)
    seg_len = np.linalg.norm(segs, axis=1)
    if np.any(seg_len < 1e-9):
        return None
    dirs = segs / seg_len[:, None]
    for k, f in enumerate(faces):
        if float(np.dot(dirs[k], f.normal)) >= 0:
            return None  # must hit the face front side
    if np.any(kernel.occluded(geom, scene.tri_face, v[:-1], v[1:])):
        return None
    return make_path(v, [Interaction(REFLECTION, f.index) for f in faces])


def los_path(scene, src, dst) -> PropagationPath | None:
    geom = scene_kernel(scene)
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if bool(kernel.occluded(geom, scene.tri_face, src[None], dst[None])[0]):
        return None
    return make_path(np.vstack([src, dst]), [])


def _validate_endpoint(scene, p, label):
    p = np.asarray(p, dtype=float)
    if p[2] <= 0:
        raise TraceError(f"{label} must be above ground (z > 0)")
    if scene.contains_point(p):
        raise TraceError(f"{label} lies inside a building")
    return p


def trace_many(scene, src, dsts, cfg) -> list[list[PropagationPath]]:
    """Propagation paths from one source to each destination.

    One launch pass is shared by all destinations; candidates are refined
    per destination and returned in canonical order.
    """
    from risray.tracer import diffraction

    src = _validate_endpoint(scene, src, "source")
    dsts = [np.asarray(d, dtype=float) for d in dsts]
    for d in dsts:
        _validate_endpoint(scene, d, "destination")
        if np.linalg.norm(d - src) < 1e-9:
            raise TraceError("source and destination coincide")

    results: list[list[PropagationPath]] = [[] for _ in dsts]
    for i, d in enumerate(dsts):
        p = los_path(scene, src, d)
        if p is not None:
            results[i].append(p)

    if cfg.max_reflections >= 1:
        geom = scene_kernel(scene)
        dirs, spacing = launch_grid(cfg.angular_resolution)
        rx = np.vstack(dsts)
        cand_rx, cand_len, cand_seq = kernel.sbr_candidates(
            geom,
            scene.tri_face,
            src,
            dirs,
            cfg.max_reflections,
            rx,
            _CAPTURE_BASE,
            _CAPTURE_SLACK * spacing,
        )
        if len(cand_rx):
            table = np.column_stack([cand_rx.astype(np.int64), cand_seq.astype(np.int64)])
            uniq = np.unique(table, axis=0)
            for row in uniq:
                ri = int(row[0])
                seq = [int(f) for f in row[1:] if f >= 0]
                if not seq:
                    continue
                path = refine_sequence(scene, src, dsts[ri], seq)
                if path is not None:
                    results[ri].append(path)

    if cfg.max_diffractions >= 1:
        for i, d in enumerate(dsts):
            results[i].extend(diffraction.diffraction_paths(scene, src, d, cfg))

    return [_dedup(canonical_sort(r), cfg.dedup_tolerance) for r in results]


def _dedup(paths, tol):
    out = []
    seen = {}
    for p in paths:
        key = p.seq_key()
        prev = seen.get(key)
        if prev is not None and abs(prev - p.length) <= tol:
            continue
        seen[key] = p.length
        out.append(p)
    return out


def trace(scene, src, dst, cfg) -> list[PropagationPath]:
    """Paths between two points; see ``trace_many``."""
    return trace_many(scene, src, [dst], cfg)[0]


def filter_paths(paths, pattern) -> list[PropagationPath]:
    """Order-preserving selection by interaction pattern.

    ``pattern`` is a callable predicate or one of: ``all``, ``los``,
    ``two_ray`` (line of sight plus single ground bounce),
    ``ground_only`` (every interaction a ground reflection),
    ``exclude_los``, ``reflections_only``.
    """
    if callable(pattern):
        pred = pattern
    else:
        try:
            pred = _NAMED_FILTERS[pattern]
        except KeyError:
            raise ValueError(f"unknown path filter {pattern!r}") from None
    return [p for p in paths if pred(p)]


def _is_ground_refl(i: Interaction) -> bool:
    return i.kind == REFLECTION and i.face == 0


_NAMED_FILTERS = {
    "all": lambda p: True,
    "los": lambda p: p.is_los,
    "two_ray": lambda p: p.is_los
    or (len(p.interactions) == 1 and _is_ground_refl(p.interactions[0])),
    "ground_only": lambda p: all(_is_ground_refl(i) for i in p.interactions),
    "exclude_los": lambda p: not p.is_los,
    "reflections_only": lambda p: all(i.kind == REFLECTION for i in p.interactions),
}
