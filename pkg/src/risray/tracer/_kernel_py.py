"""Pure-numpy ray-geometry kernel.

Fallback implementation of the hot loops; mirrors the API of the compiled
Cython kernel exactly.  The scene is a triangle soup plus the implicit
ground plane z = 0 (logical face index 0).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_EPS_PARALLEL = 1e-12
_CHUNK = 16384


def prepare(triangles: np.ndarray):
    """Precompute Moller-Trumbore data: (v0, edge1, edge2, normals)."""
    tris = np.asarray(triangles, dtype=np.float64).reshape(-1, 3, 3)
    v0 = np.ascontiguousarray(tris[:, 0, :])
    e1 = np.ascontiguousarray(tris[:, 1, :] - tris[:, 0, :])
    e2 = np.ascontiguousarray(tris[:, 2, :] - tris[:, 0, :])
    n = np.cross(e1, e2)
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    norm[norm == 0] = 1.0
    return v0, e1, e2, n / norm


def _hit_block(v0, e1, e2, origins, dirs, t_min):
    """Nearest triangle hit per ray of one block. Returns (t, tri_idx)."""
    D = origins.shape[0]
    T = v0.shape[0]
    if T == 0:
        return np.full(D, np.inf), np.full(D, -1, dtype=np.int64)
    pvec = np.cross(dirs[:, None, :], e2[None, :, :])
    det = np.einsum("tk,dtk->dt", e1, pvec)
    inv_det = np.where(np.abs(det) > _EPS_PARALLEL, 1.0 / np.where(det == 0, 1.0, det), 0.0)
    tvec = origins[:, None, :] - v0[None, :, :]
    u = np.einsum("dtk,dtk->dt", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1[None, :, :])
    v = np.einsum("dk,dtk->dt", dirs, qvec) * inv_det
    t = np.einsum("tk,dtk->dt", e2, qvec) * inv_det
    valid = (
        (np.abs(det) > _EPS_PARALLEL)
        & (u >= -1e-9)
        & (v >= -1e-9)
        & (u + v <= 1.0 + 1e-9)
        & (t > t_min)
    )
    t = np.where(valid, t, np.inf)
    idx = np.argmin(t, axis=1)
    best_t = t[np.arange(D), idx]
    best_i = np.where(np.isfinite(best_t), idx, -1)
    return best_t, best_i


def nearest_hit(geom, tri_face, origins, dirs, t_min=1e-6):
    """Nearest hit per ray, including the ground plane.

    Returns (t, logical_face, normal); face -1 and t = inf for a miss.
    """
    v0, e1, e2, normals = geom
    origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    if origins.shape[0] == 1 and dirs.shape[0] > 1:
        origins = np.broadcast_to(origins, dirs.shape)
    D = dirs.shape[0]
    out_t = np.full(D, np.inf)
    out_face = np.full(D, -1, dtype=np.int32)
    out_n = np.zeros((D, 3))
    for s in range(0, D, _CHUNK):
        sl = slice(s, min(s + _CHUNK, D))
        t, ti = _hit_block(v0, e1, e2, origins[sl], dirs[sl], t_min)
        out_t[sl] = t
        hit = ti >= 0
        face_view = out_face[sl]
        face_view[hit] = tri_face[ti[hit]]
        n_view = out_n[sl]
        n_view[hit] = normals[ti[hit]]
    # Ground plane z = 0
    dz = dirs[:, 2]
    oz = origins[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        tg = np.where(np.abs(dz) > _EPS_PARALLEL, -oz / dz, np.inf)
    gvalid = (tg > t_min) & (tg < out_t)
    out_t = np.where(gvalid, tg, out_t)
    out_face = np.where(gvalid, np.int32(0), out_face)
    out_n[gvalid] = (0.0, 0.0, 1.0)
    return out_t, out_face, out_n


def occluded(geom, tri_face, p, q, shrink=1e-6):
    """True per segment if scene geometry blocks the open segment p->q."""
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if p.shape[0] == 1 and q.shape[0] > 1:
        p = np.broadcast_to(p, q.shape)
    if q.shape[0] == 1 and p.shape[0] > 1:
        q = np.broadcast_to(q, p.shape)
    d = q - p
    lengths = np.linalg.norm(d, axis=1)
    safe = np.where(lengths > 0, lengths, 1.0)
    dirs = d / safe[:, None]
    t, _, _ = nearest_hit(geom, tri_face, p + dirs * shrink, dirs, t_min=0.0)
    return t < lengths - 2.0 * shrink


def sbr_candidates(geom, tri_face, src, dirs, max_bounce, rx, r0, alpha):
    """Shoot rays, bounce specularly, record reception-sphere crossings.

    Returns (cand_rx, cand_len, cand_seq): per candidate the receiver
    index, the reflection count and the logical-face sequence (padded
    with -1).  Crossings on the zeroth segment (direct rays) are not
    reported; line of sight is handled analytically by the caller.
    """
    if max_bounce < 1:
        raise ValueError("sbr_candidates requires max_bounce >= 1")
    src = np.asarray(src, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    rx = np.atleast_2d(np.asarray(rx, dtype=np.float64))
    D = dirs.shape[0]

    pos = np.broadcast_to(src, (D, 3)).copy()
    vel = dirs.copy()
    acc = np.zeros(D)
    seq = np.full((D, max_bounce), -1, dtype=np.int32)
    alive = np.ones(D, dtype=bool)

    cand_rx: list[np.ndarray] = []
    cand_len: list[np.ndarray] = []
    cand_seq: list[np.ndarray] = []

    centroid = rx.mean(axis=0)
    cluster_r = float(np.max(np.linalg.norm(rx - centroid, axis=1))) if len(rx) else 0.0

    for bounce in range(max_bounce + 1):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        t_hit, face, nrm = nearest_hit(geom, tri_face, pos[idx], vel[idx], t_min=1e-6)
        seg_end = np.where(np.isfinite(t_hit), t_hit, 1e12)

        if bounce >= 1:
            rel_c = centroid[None, :] - pos[idx]
            tau_c = np.clip(np.einsum("ij,ij->i", rel_c, vel[idx]), 0.0, seg_end)
            d_c = np.linalg.norm(rel_c - tau_c[:, None] * vel[idx], axis=1)
            rmax = r0 + alpha * (acc[idx] + tau_c + cluster_r) + cluster_r
            near = np.nonzero(d_c <= rmax)[0]
            if near.size:
                gi = idx[near]
                rel = rx[None, :, :] - pos[gi][:, None, :]          # (G, R, 3)
                proj = np.einsum("grk,gk->gr", rel, vel[gi])
                tau = np.clip(proj, 0.0, seg_end[near][:, None])
                miss = rel - tau[..., None] * vel[gi][:, None, :]
                dist = np.linalg.norm(miss, axis=2)
                rcap = r0 + alpha * (acc[gi][:, None] + tau)
                hit_g, hit_r = np.nonzero(dist <= rcap)
                if hit_g.size:
                    cand_rx.append(hit_r.astype(np.int32))
                    cand_len.append(np.full(hit_g.size, bounce, dtype=np.int32))
                    cand_seq.append(seq[gi[hit_g]])

        if bounce == max_bounce:
            break
        hit = np.isfinite(t_hit) & (face >= 0)
        alive[idx[~hit]] = False
        hidx = idx[hit]
        if hidx.size == 0:
            break
        pos[hidx] = pos[hidx] + t_hit[hit, None] * vel[hidx]
        n = nrm[hit]
        vdot = np.einsum("ij,ij->i", vel[hidx], n)
        vel[hidx] = vel[hidx] - 2.0 * vdot[:, None] * n
        acc[hidx] += t_hit[hit]
        seq[hidx, bounce] = face[hit]

    if not cand_rx:
        return (
            np.zeros(0, dtype=np.int32),
            np.zeros(0, dtype=np.int32),
            np.zeros((0, max_bounce), dtype=np.int32),
        )
    return np.concatenate(cand_rx), np.concatenate(cand_len), np.vstack(cand_seq)
