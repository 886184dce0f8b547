"""Flat-kernel mean-shift clustering of expert actions.

Turning continuous 6-D actions into discrete labels makes entropy-based
tree construction well defined.  Every point is shifted to the mean of its
neighbors within the bandwidth until the step is below 1e-6 (or 200
iterations); converged modes closer than bandwidth/2 are merged.  Cluster
ids are assigned by lexicographic order of the merged modes, which makes
the labeling invariant to input permutation.
"""

from dataclasses import dataclass

import numpy as np

SHIFT_TOL = 1e-6
MAX_ITERS = 200


@dataclass(frozen=True)
class ActionLabel:
    cluster: int
    mode: np.ndarray


def mean_shift(actions, bandwidth: float):
    """Cluster 6-vectors; returns (labels per input point, modes by cluster id)."""
    pts = np.asarray(actions, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("actions must be a non-empty (n, d) array")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")

    n = pts.shape[0]
    modes = pts.copy()
    active = np.ones(n, dtype=bool)
    pts_sq = np.sum(pts * pts, axis=1)
    for _ in range(MAX_ITERS):
        if not active.any():
            break
        cur = modes[active]
        cur_sq = np.sum(cur * cur, axis=1)
        d2 = cur_sq[:, None] + pts_sq[None, :] - 2.0 * (cur @ pts.T)
        within = d2 <= bandwidth * bandwidth
        counts = within.sum(axis=1)
        sums = within.astype(np.float64) @ pts
        new = sums / counts[:, None]
        moved = np.linalg.norm(new - cur, axis=1)
        modes[active] = new
        still = moved >= SHIFT_TOL
        idx = np.nonzero(active)[0]
        active[idx[~still]] = False

    # canonical merge: sort candidate modes lexicographically, then greedily
    # absorb any later mode within bandwidth/2 of an accepted one
    order = np.lexsort(modes.T[::-1])
    centers = np.empty((0, pts.shape[1]))   # anchors in lexicographic order
    members = []                            # point indices per cluster
    half = bandwidth / 2.0
    for i in order:
        if centers.shape[0]:
            dist = np.linalg.norm(centers - modes[i], axis=1)
            c = int(np.argmin(dist))
            if dist[c] <= half:
                members[c].append(i)
                continue
        centers = np.vstack([centers, modes[i]])
        members.append([i])

    final_modes = []
    labels_arr = np.empty(n, dtype=np.int64)
    for c, idxs in enumerate(members):
        mode = modes[idxs].mean(axis=0)
        final_modes.append(mode)
        labels_arr[idxs] = c

    labels = [ActionLabel(int(labels_arr[i]), final_modes[labels_arr[i]])
              for i in range(n)]
    return labels, final_modes


def label_ids(actions, bandwidth: float) -> np.ndarray:
    """Just the integer cluster ids, as an array."""
    labels, _ = mean_shift(actions, bandwidth)
    return np.array([l.cluster for l in labels], dtype=np.int64)
