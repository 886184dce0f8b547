"""Pure-numpy implementations of the hot kernels.

Float expressions are written component-wise in the same order as the
compiled kernels so that both backends return bit-identical arrays
(the extension is compiled with -ffp-contract=off for the same reason).
"""

import numpy as np


def raster_triangles(px, py, z, tris, width, height):
    """Z-buffer rasterization of triangles given in screen space.

    px, py: per-vertex pixel coordinates; z: per-vertex view depth (> 0).
    Pixel centers sit at integer + 0.5.  Returns (height, width) float64
    filled with +inf where nothing was drawn.  Depth is interpolated
    perspective-correctly (linear in 1/z).
    """
    depth = np.full((height, width), np.inf, dtype=np.float64)
    zinv = 1.0 / z
    for t in range(tris.shape[0]):
        i0, i1, i2 = tris[t]
        x0, y0 = px[i0], py[i0]
        x1, y1 = px[i1], py[i1]
        x2, y2 = px[i2], py[i2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        cmin = max(int(np.floor(min(x0, x1, x2) - 0.5)), 0)
        cmax = min(int(np.ceil(max(x0, x1, x2) - 0.5)), width - 1)
        rmin = max(int(np.floor(min(y0, y1, y2) - 0.5)), 0)
        rmax = min(int(np.ceil(max(y0, y1, y2) - 0.5)), height - 1)
        if cmin > cmax or rmin > rmax:
            continue
        cs = np.arange(cmin, cmax + 1, dtype=np.float64) + 0.5
        rs = np.arange(rmin, rmax + 1, dtype=np.float64) + 0.5
        sx, sy = np.meshgrid(cs, rs)
        w0 = (x2 - x1) * (sy - y1) - (y2 - y1) * (sx - x1)
        w1 = (x0 - x2) * (sy - y2) - (y0 - y2) * (sx - x2)
        w2 = (x1 - x0) * (sy - y0) - (y1 - y0) * (sx - x0)
        if area > 0.0:
            inside = (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)
        else:
            inside = (w0 <= 0.0) & (w1 <= 0.0) & (w2 <= 0.0)
        if not inside.any():
            continue
        l0 = w0 / area
        l1 = w1 / area
        l2 = w2 / area
        frag = 1.0 / (l0 * zinv[i0] + l1 * zinv[i1] + l2 * zinv[i2])
        tile = depth[rmin : rmax + 1, cmin : cmax + 1]
        upd = inside & (frag < tile)
        tile[upd] = frag[upd]
    return depth


def split_histograms(X, rows, labels, feats, thrs, n_labels):
    """Left-child label histograms for a batch of candidate splits.

    X: (n, d) float64 feature matrix; rows: (m,) int64 row indices of the
    node's samples; labels: (m,) int64 compact labels in [0, n_labels);
    feats/thrs: (C,) candidate feature indices and thresholds.
    A sample goes left when X[row, feat] < thr.  Returns
    (hists (C, n_labels) int64, left counts (C,) int64).
    """
    C = feats.shape[0]
    vals = X[rows[:, None], feats[None, :]]  # (m, C)
    left = vals < thrs[None, :]
    keys = (np.arange(C, dtype=np.int64)[None, :] * n_labels + labels[:, None])
    hists = np.bincount(keys[left], minlength=C * n_labels).reshape(C, n_labels)
    return hists.astype(np.int64), left.sum(axis=0).astype(np.int64)


def spring_forces(pos, si, sj, rest, k):
    """Hookean spring forces accumulated per vertex.

    pos: (n, 3); si, sj: (s,) endpoint indices; rest, k: (s,) rest lengths
    and stiffnesses.  Returns (n, 3) force array.
    """
    d = pos[sj] - pos[si]
    dx, dy, dz = d[:, 0], d[:, 1], d[:, 2]
    length = np.sqrt(dx * dx + dy * dy + dz * dz)
    length = np.maximum(length, 1e-12)
    fmag = k * (length - rest) / length
    fvec = d * fmag[:, None]
    out = np.zeros_like(pos)
    np.add.at(out, si, fvec)
    np.add.at(out, sj, -fvec)
    return out


def strain_limit(pos, si, sj, rest, max_stretch, free, group_starts, max_sweeps, tol):
    """Colored Gauss-Seidel projection: spring length <= max_stretch * rest.

    pos is modified in place.  free: (n,) uint8 mask, 0 marks pinned
    vertices.  Springs are pre-sorted into color groups delimited by
    group_starts (no two springs in a group share a vertex), so the exact
    per-spring correction can be applied to each group simultaneously.
    Sweeps stop once no spring is more than tol meters over its limit, or
    after max_sweeps.  Returns the number of sweeps applied.
    """
    limit = max_stretch * rest
    w = free.astype(np.float64)
    for sweep in range(max_sweeps):
        any_over = False
        for g in range(group_starts.shape[0] - 1):
            sl = slice(group_starts[g], group_starts[g + 1])
            i = si[sl]
            j = sj[sl]
            d = pos[j] - pos[i]
            dx, dy, dz = d[:, 0], d[:, 1], d[:, 2]
            length = np.sqrt(dx * dx + dy * dy + dz * dz)
            wi = w[i]
            wj = w[j]
            over = (length > limit[sl] + tol) & (wi + wj > 0.0)
            if not over.any():
                continue
            any_over = True
            excess = length[over] - limit[sl][over]
            unit = d[over] / length[over][:, None]
            share = excess / (wi[over] + wj[over])
            pos[i[over]] += unit * (share * wi[over])[:, None]
            pos[j[over]] -= unit * (share * wj[over])[:, None]
        if not any_over:
            return sweep
    return max_sweeps


def route_rows(X, feat, thr, left, right):
    """Route every row of X down a flattened decision tree.

    feat/thr/left/right describe the tree nodes; feat[n] < 0 marks a leaf.
    Returns (rows,) int64 array of leaf node ids.
    """
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    active = feat[node] >= 0
    while active.any():
        ids = node[active]
        rows = np.nonzero(active)[0]
        go_left = X[rows, feat[ids]] < thr[ids]
        node[rows] = np.where(go_left, left[ids], right[ids])
        active = feat[node] >= 0
    return node
