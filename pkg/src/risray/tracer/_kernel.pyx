# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled ray-geometry kernel (hot loops of the SBR tracer)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt, INFINITY

cnp.import_array()

BACKEND = "compiled"

cdef double EPS_PARALLEL = 1e-12


def prepare(triangles):
    """Precompute Moller-Trumbore data: (v0, edge1, edge2, normals)."""
    tris = np.asarray(triangles, dtype=np.float64).reshape(-1, 3, 3)
    v0 = np.ascontiguousarray(tris[:, 0, :])
    e1 = np.ascontiguousarray(tris[:, 1, :] - tris[:, 0, :])
    e2 = np.ascontiguousarray(tris[:, 2, :] - tris[:, 0, :])
    n = np.cross(e1, e2)
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    norm[norm == 0] = 1.0
    return v0, e1, e2, np.ascontiguousarray(n / norm)


cdef inline int _nearest(
    const double* v0, const double* e1, const double* e2, Py_ssize_t T,
    const double* o, const double* d, double t_min,
    double* t_out,
) noexcept nogil:
    """Nearest triangle (index) or -1; ground handled by callers."""
    cdef Py_ssize_t i, best = -1
    cdef double best_t = INFINITY
    cdef double px, py, pz, det, inv, tx, ty, tz, u, qx, qy, qz, v, t
    for i in range(T):
        # p = d x e2
        px = d[1] * e2[3 * i + 2] - d[2] * e2[3 * i + 1]
        py = d[2] * e2[3 * i + 0] - d[0] * e2[3 * i + 2]
        pz = d[0] * e2[3 * i + 1] - d[1] * e2[3 * i + 0]
        det = e1[3 * i] * px + e1[3 * i + 1] * py + e1[3 * i + 2] * pz
        if fabs(det) <= EPS_PARALLEL:
            continue
        inv = 1.0 / det
        tx = o[0] - v0[3 * i]
        ty = o[1] - v0[3 * i + 1]
        tz = o[2] - v0[3 * i + 2]
        u = (tx * px + ty * py + tz * pz) * inv
        if u < -1e-9 or u > 1.0 + 1e-9:
            continue
        # q = t x e1
        qx = ty * e1[3 * i + 2] - tz * e1[3 * i + 1]
        qy = tz * e1[3 * i + 0] - tx * e1[3 * i + 2]
        qz = tx * e1[3 * i + 1] - ty * e1[3 * i + 0]
        v = (d[0] * qx + d[1] * qy + d[2] * qz) * inv
        if v < -1e-9 or u + v > 1.0 + 1e-9:
            continue
        t = (e2[3 * i] * qx + e2[3 * i + 1] * qy + e2[3 * i + 2] * qz) * inv
        if t > t_min and t < best_t:
            best_t = t
            best = i
    t_out[0] = best_t
    return <int>best


def nearest_hit(geom, tri_face, origins, dirs, double t_min=1e-6):
    """Nearest hit per ray, including the ground plane.

    Returns (t, logical_face, normal); face -1 and t = inf for a miss.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v0 = geom[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] e1 = geom[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] e2 = geom[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] normals = geom[3]
    cdef cnp.ndarray[cnp.int32_t, ndim=1] faces = np.ascontiguousarray(tri_face, dtype=np.int32)

    o_arr = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    d_arr = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    if o_arr.shape[0] == 1 and d_arr.shape[0] > 1:
        o_arr = np.broadcast_to(o_arr, d_arr.shape)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] O = np.ascontiguousarray(o_arr)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Dd = np.ascontiguousarray(d_arr)

    cdef Py_ssize_t D = Dd.shape[0]
    cdef Py_ssize_t T = v0.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_t = np.full(D, np.inf)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] out_face = np.full(D, -1, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_n = np.zeros((D, 3))

    cdef const double* pv0 = <const double*>cnp.PyArray_DATA(v0)
    cdef const double* pe1 = <const double*>cnp.PyArray_DATA(e1)
    cdef const double* pe2 = <const double*>cnp.PyArray_DATA(e2)

    cdef Py_ssize_t i
    cdef int ti
    cdef double t, tg, dz
    with nogil:
        for i in range(D):
            ti = _nearest(pv0, pe1, pe2, T, &O[i, 0], &Dd[i, 0], t_min, &t)
            if ti >= 0:
                out_t[i] = t
                out_face[i] = faces[ti]
                out_n[i, 0] = normals[ti, 0]
                out_n[i, 1] = normals[ti, 1]
                out_n[i, 2] = normals[ti, 2]
            dz = Dd[i, 2]
            if fabs(dz) > EPS_PARALLEL:
                tg = -O[i, 2] / dz
                if tg > t_min and tg < out_t[i]:
                    out_t[i] = tg
                    out_face[i] = 0
                    out_n[i, 0] = 0.0
                    out_n[i, 1] = 0.0
                    out_n[i, 2] = 1.0
    return out_t, out_face, out_n


def occluded(geom, tri_face, p, q, double shrink=1e-6):
    """True per segment if scene geometry blocks the open segment p->q."""
    p_arr = np.atleast_2d(np.asarray(p, dtype=np.float64))
    q_arr = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if p_arr.shape[0] == 1 and q_arr.shape[0] > 1:
        p_arr = np.broadcast_to(p_arr, q_arr.shape)
    if q_arr.shape[0] == 1 and p_arr.shape[0] > 1:
        q_arr = np.broadcast_to(q_arr, p_arr.shape)
    d = q_arr - p_arr
    lengths = np.linalg.norm(d, axis=1)
    safe = np.where(lengths > 0, lengths, 1.0)
    dirs = d / safe[:, None]
    t, _, _ = nearest_hit(geom, tri_face, p_arr + dirs * shrink, dirs, t_min=0.0)
    return t < lengths - 2.0 * shrink


def sbr_candidates(geom, tri_face, src, dirs, int max_bounce, rx, double r0, double alpha):
    """Shoot rays, bounce specularly, record reception-sphere crossings.

    Returns (cand_rx, cand_len, cand_seq); see the python kernel for the
    contract.  Crossings on the zeroth (direct) segment are not reported.
    """
    if max_bounce < 1:
        raise ValueError("sbr_candidates requires max_bounce >= 1")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v0 = geom[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] e1 = geom[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] e2 = geom[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] normals = geom[3]
    cdef cnp.ndarray[cnp.int32_t, ndim=1] faces = np.ascontiguousarray(tri_face, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] S = np.ascontiguousarray(np.asarray(src, dtype=np.float64))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Dirs = np.ascontiguousarray(np.asarray(dirs, dtype=np.float64))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] RX = np.ascontiguousarray(np.atleast_2d(np.asarray(rx, dtype=np.float64)))

    cdef Py_ssize_t D = Dirs.shape[0]
    cdef Py_ssize_t T = v0.shape[0]
    cdef Py_ssize_t R = RX.shape[0]

    centroid = RX.mean(axis=0)
    cdef double cx = centroid[0], cy = centroid[1], cz = centroid[2]
    cdef double cluster_r = 0.0
    cdef Py_ssize_t r
    for r in range(R):
        cluster_r = max(cluster_r, sqrt((RX[r, 0] - cx) ** 2 + (RX[r, 1] - cy) ** 2 + (RX[r, 2] - cz) ** 2))

    # Chunked growable output
    out_rx: list = []
    out_len: list = []
    out_seq: list = []
    cdef Py_ssize_t cap = 65536
    cdef cnp.ndarray[cnp.int32_t, ndim=1] buf_rx = np.empty(cap, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] buf_len = np.empty(cap, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=2] buf_seq = np.empty((cap, max_bounce), dtype=np.int32)
    cdef Py_ssize_t n_out = 0

    cdef double ox, oy, oz, dx, dy, dz, acc, t_hit, seg_end
    cdef double nx, ny, nz, vdot, tg
    cdef double relx, rely, relz, tau, missx, missy, missz, dist, rcap, dc
    cdef double[3] o_loc
    cdef double[3] d_loc
    cdef int[32] seq
    cdef int nseq, ti, face, b, k
    cdef Py_ssize_t i
    cdef const double* pv0 = <const double*>cnp.PyArray_DATA(v0)
    cdef const double* pe1 = <const double*>cnp.PyArray_DATA(e1)
    cdef const double* pe2 = <const double*>cnp.PyArray_DATA(e2)

    if max_bounce > 32:
        raise ValueError("max_bounce > 32 unsupported")

    for i in range(D):
        ox = S[0]; oy = S[1]; oz = S[2]
        dx = Dirs[i, 0]; dy = Dirs[i, 1]; dz = Dirs[i, 2]
        acc = 0.0
        nseq = 0
        for b in range(max_bounce + 1):
            o_loc[0] = ox; o_loc[1] = oy; o_loc[2] = oz
            d_loc[0] = dx; d_loc[1] = dy; d_loc[2] = dz
            ti = _nearest(pv0, pe1, pe2, T,
                          o_loc, d_loc, 1e-6, &t_hit)
            face = faces[ti] if ti >= 0 else -1
            if ti >= 0:
                nx = normals[ti, 0]; ny = normals[ti, 1]; nz = normals[ti, 2]
            # ground plane
            if fabs(dz) > EPS_PARALLEL:
                tg = -oz / dz
                if tg > 1e-6 and tg < t_hit:
                    t_hit = tg
                    face = 0
                    nx = 0.0; ny = 0.0; nz = 1.0
            seg_end = t_hit if t_hit < INFINITY else 1e12

            if b >= 1:
                # cluster pre-test
                relx = cx - ox; rely = cy - oy; relz = cz - oz
                tau = relx * dx + rely * dy + relz * dz
                if tau < 0.0:
                    tau = 0.0
                elif tau > seg_end:
                    tau = seg_end
                missx = relx - tau * dx; missy = rely - tau * dy; missz = relz - tau * dz
                dc = sqrt(missx * missx + missy * missy + missz * missz)
                if dc <= r0 + alpha * (acc + tau + cluster_r) + cluster_r:
                    for r in range(R):
                        relx = RX[r, 0] - ox; rely = RX[r, 1] - oy; relz = RX[r, 2] - oz
                        tau = relx * dx + rely * dy + relz * dz
                        if tau < 0.0:
                            tau = 0.0
                        elif tau > seg_end:
                            tau = seg_end
                        missx = relx - tau * dx; missy = rely - tau * dy; missz = relz - tau * dz
                        dist = sqrt(missx * missx + missy * missy + missz * missz)
                        rcap = r0 + alpha * (acc + tau)
                        if dist <= rcap:
                            buf_rx[n_out] = <int>r
                            buf_len[n_out] = b
                            for k in range(max_bounce):
                                buf_seq[n_out, k] = seq[k] if k < nseq else -1
                            n_out += 1
                            if n_out == cap:
                                out_rx.append(buf_rx.copy())
                                out_len.append(buf_len.copy())
                                out_seq.append(buf_seq.copy())
                                n_out = 0

            if b == max_bounce or face < 0:
                break
            ox += t_hit * dx; oy += t_hit * dy; oz += t_hit * dz
            vdot = dx * nx + dy * ny + dz * nz
            dx -= 2.0 * vdot * nx
            dy -= 2.0 * vdot * ny
            dz -= 2.0 * vdot * nz
            acc += t_hit
            seq[nseq] = face
            nseq += 1

    out_rx.append(buf_rx[:n_out].copy())
    out_len.append(buf_len[:n_out].copy())
    out_seq.append(buf_seq[:n_out].copy())
    return np.concatenate(out_rx), np.concatenate(out_len), np.vstack(out_seq)
