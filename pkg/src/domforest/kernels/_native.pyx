# Compiled twins of the numpy fallback kernels.  Accumulation order and
# expression order deliberately mirror _fallback.py so both backends give
# bit-identical results (built with -ffp-contract=off).

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor, sqrt

cnp.import_array()


def raster_triangles(cnp.float64_t[::1] px, cnp.float64_t[::1] py,
                     cnp.float64_t[::1] z, cnp.int32_t[:, ::1] tris,
                     int width, int height):
    depth_arr = np.full((height, width), np.inf, dtype=np.float64)
    cdef cnp.float64_t[:, ::1] depth = depth_arr
    cdef Py_ssize_t nv = z.shape[0]
    zinv_arr = np.empty(nv, dtype=np.float64)
    cdef cnp.float64_t[::1] zinv = zinv_arr
    cdef Py_ssize_t i
    for i in range(nv):
        zinv[i] = 1.0 / z[i]

    cdef Py_ssize_t t, i0, i1, i2
    cdef double x0, y0, x1, y1, x2, y2, area
    cdef double minx, maxx, miny, maxy
    cdef int cmin, cmax, rmin, rmax, r, c
    cdef double sx, sy, w0, w1, w2, l0, l1, l2, frag
    cdef bint inside
    for t in range(tris.shape[0]):
        i0 = tris[t, 0]
        i1 = tris[t, 1]
        i2 = tris[t, 2]
        x0 = px[i0]; y0 = py[i0]
        x1 = px[i1]; y1 = py[i1]
        x2 = px[i2]; y2 = py[i2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        minx = min(x0, min(x1, x2)); maxx = max(x0, max(x1, x2))
        miny = min(y0, min(y1, y2)); maxy = max(y0, max(y1, y2))
        cmin = <int>floor(minx - 0.5)
        cmax = <int>ceil(maxx - 0.5)
        rmin = <int>floor(miny - 0.5)
        rmax = <int>ceil(maxy - 0.5)
        if cmin < 0: cmin = 0
        if rmin < 0: rmin = 0
        if cmax > width - 1: cmax = width - 1
        if rmax > height - 1: rmax = height - 1
        if cmin > cmax or rmin > rmax:
            continue
        for r in range(rmin, rmax + 1):
            sy = r + 0.5
            for c in range(cmin, cmax + 1):
                sx = c + 0.5
                w0 = (x2 - x1) * (sy - y1) - (y2 - y1) * (sx - x1)
                w1 = (x0 - x2) * (sy - y2) - (y0 - y2) * (sx - x2)
                w2 = (x1 - x0) * (sy - y0) - (y1 - y0) * (sx - x0)
                if area > 0.0:
                    inside = w0 >= 0.0 and w1 >= 0.0 and w2 >= 0.0
                else:
                    inside = w0 <= 0.0 and w1 <= 0.0 and w2 <= 0.0
                if not inside:
                    continue
                l0 = w0 / area
                l1 = w1 / area
                l2 = w2 / area
                frag = 1.0 / (l0 * zinv[i0] + l1 * zinv[i1] + l2 * zinv[i2])
                if frag < depth[r, c]:
                    depth[r, c] = frag
    return depth_arr


def split_histograms(cnp.float64_t[:, ::1] X, cnp.int64_t[::1] rows,
                     cnp.int64_t[::1] labels, cnp.int64_t[::1] feats,
                     cnp.float64_t[::1] thrs, int n_labels):
    cdef Py_ssize_t C = feats.shape[0]
    cdef Py_ssize_t m = rows.shape[0]
    hists_arr = np.zeros((C, n_labels), dtype=np.int64)
    counts_arr = np.zeros(C, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] hists = hists_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef Py_ssize_t c, t
    cdef cnp.int64_t f
    cdef double thr
    for c in range(C):
        f = feats[c]
        thr = thrs[c]
        for t in range(m):
            if X[rows[t], f] < thr:
                hists[c, labels[t]] += 1
                counts[c] += 1
    return hists_arr, counts_arr


def spring_forces(cnp.float64_t[:, ::1] pos, cnp.int64_t[::1] si,
                  cnp.int64_t[::1] sj, cnp.float64_t[::1] rest,
                  cnp.float64_t[::1] k):
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t s = si.shape[0]
    out_arr = np.zeros((n, 3), dtype=np.float64)
    fvec_arr = np.empty((s, 3), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef cnp.float64_t[:, ::1] fvec = fvec_arr
    cdef Py_ssize_t a
    cdef double dx, dy, dz, length, fmag
    for a in range(s):
        dx = pos[sj[a], 0] - pos[si[a], 0]
        dy = pos[sj[a], 1] - pos[si[a], 1]
        dz = pos[sj[a], 2] - pos[si[a], 2]
        length = sqrt(dx * dx + dy * dy + dz * dz)
        if length < 1e-12:
            length = 1e-12
        fmag = k[a] * (length - rest[a]) / length
        fvec[a, 0] = dx * fmag
        fvec[a, 1] = dy * fmag
        fvec[a, 2] = dz * fmag
    # two passes to match the fallback's np.add.at accumulation order
    for a in range(s):
        out[si[a], 0] += fvec[a, 0]
        out[si[a], 1] += fvec[a, 1]
        out[si[a], 2] += fvec[a, 2]
    for a in range(s):
        out[sj[a], 0] -= fvec[a, 0]
        out[sj[a], 1] -= fvec[a, 1]
        out[sj[a], 2] -= fvec[a, 2]
    return out_arr


def strain_limit(cnp.float64_t[:, ::1] pos, cnp.int64_t[::1] si,
                 cnp.int64_t[::1] sj, cnp.float64_t[::1] rest,
                 double max_stretch, cnp.uint8_t[::1] free,
                 cnp.int64_t[::1] group_starts, int max_sweeps, double tol):
    # colored Gauss-Seidel: springs within a group share no vertices, so a
    # sequential walk over the group equals the fallback's vectorized form
    cdef Py_ssize_t a, sweep, g
    cdef Py_ssize_t ngroups = group_starts.shape[0] - 1
    cdef cnp.int64_t vi, vj
    cdef double dx, dy, dz, length, limit, excess, share, wi, wj, ux, uy, uz
    cdef bint any_over
    for sweep in range(max_sweeps):
        any_over = False
        for g in range(ngroups):
            for a in range(group_starts[g], group_starts[g + 1]):
                vi = si[a]
                vj = sj[a]
                wi = free[vi]
                wj = free[vj]
                if wi + wj == 0.0:
                    continue
                dx = pos[vj, 0] - pos[vi, 0]
                dy = pos[vj, 1] - pos[vi, 1]
                dz = pos[vj, 2] - pos[vi, 2]
                length = sqrt(dx * dx + dy * dy + dz * dz)
                limit = max_stretch * rest[a]
                if length <= limit + tol:
                    continue
                any_over = True
                excess = length - limit
                share = excess / (wi + wj)
                ux = dx / length
                uy = dy / length
                uz = dz / length
                pos[vi, 0] += ux * (share * wi)
                pos[vi, 1] += uy * (share * wi)
                pos[vi, 2] += uz * (share * wi)
                pos[vj, 0] -= ux * (share * wj)
                pos[vj, 1] -= uy * (share * wj)
                pos[vj, 2] -= uz * (share * wj)
        if not any_over:
            return sweep
    return max_sweeps


def route_rows(cnp.float64_t[:, ::1] X, cnp.int64_t[::1] feat,
               cnp.float64_t[::1] thr, cnp.int64_t[::1] left,
               cnp.int64_t[::1] right):
    cdef Py_ssize_t n = X.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t r
    cdef cnp.int64_t node
    for r in range(n):
        node = 0
        while feat[node] >= 0:
            if X[r, feat[node]] < thr[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out_arr
