"""Hot numeric kernels with a compiled core and a pure-numpy fallback.

The compiled extension (`domforest.kernels._native`, built from Cython) is
preferred at import time; if it is missing, or if the environment variable
``DOMFOREST_PURE`` is set to a non-empty value, the numpy fallback is used.
Both backends implement the same five functions with bit-identical results:

    raster_triangles(px, py, z, tris, width, height) -> depth image
    split_histograms(X, rows, labels, feats, thrs, n_labels) -> (hists, counts)
    spring_forces(pos, si, sj, rest, k) -> forces
    strain_limit(pos, si, sj, rest, max_stretch, free, groups, sweeps, tol)
    route_rows(X, feat, thr, left, right) -> leaf node ids
"""

import os

from . import _fallback

if os.environ.get("DOMFOREST_PURE"):
    _impl = _fallback
    BACKEND = "numpy"
else:
    try:
        from . import _native as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "numpy"

raster_triangles = _impl.raster_triangles
split_histograms = _impl.split_histograms
spring_forces = _impl.spring_forces
strain_limit = _impl.strain_limit
route_rows = _impl.route_rows


def get_backend() -> str:
    """Name of the active kernel backend ('compiled' or 'numpy')."""
    return BACKEND
