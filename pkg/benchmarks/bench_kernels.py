#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Run:  python benchmarks/bench_kernels.py [--repeat 50]

Covers the three hot paths (depth rasterization, split-candidate
histograms, cloth stepping) plus the end-to-end sample pipeline, printing
one row per kernel with both timings and the speedup.
"""

import argparse
import time

import numpy as np

from domforest import cloth
from domforest.features import GaborBank, extract
from domforest.kernels import _fallback
from domforest.observation import default_camera, render_depth

try:
    from domforest.kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_raster(backend):
    mesh, state = cloth.make_cloth(21, 24)
    cam = default_camera()
    from domforest.observation import project_vertices

    px, py, zc = project_vertices(state.positions, cam)
    tris = np.ascontiguousarray(mesh.triangles, dtype=np.int32)

    def run():
        backend.raster_triangles(px, py, zc, tris, cam.width, cam.height)

    return run


def bench_split(backend):
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 1, (2000, 768))
    rows = np.arange(2000, dtype=np.int64)
    labels = rng.integers(0, 200, 2000).astype(np.int64)
    feats = rng.integers(0, 768, 64).astype(np.int64)
    thrs = rng.uniform(0, 1, 64)

    def run():
        backend.split_histograms(X, rows, labels, feats, thrs, 200)

    return run


def bench_step(backend):
    import domforest.cloth as C

    mesh, state = cloth.make_cloth(21, 24)
    params = cloth.SimParams()
    p0 = state.positions
    robot = np.concatenate([p0[mesh.corners[0]], p0[mesh.corners[1]]])
    human = (p0[mesh.corners[2]].copy(), p0[mesh.corners[3]].copy())
    # settle so the strain limiter is engaged (the expensive regime)
    for _ in range(60):
        state = C.step(state, mesh, params, robot, human)

    def run():
        saved = C.kernels
        C.kernels = backend
        try:
            C.step(state, mesh, params, robot, human)
        finally:
            C.kernels = saved

    return run


def bench_sample(backend):
    """Full per-sample pipeline: 10 sim steps + render + features."""
    import domforest.cloth as C

    mesh, state = cloth.make_cloth(21, 24)
    params = cloth.SimParams()
    cam = default_camera()
    bank = GaborBank.default()
    p0 = state.positions
    robot = np.concatenate([p0[mesh.corners[0]], p0[mesh.corners[1]]])
    human = (p0[mesh.corners[2]].copy(), p0[mesh.corners[3]].copy())

    def run():
        nonlocal state
        saved = C.kernels
        C.kernels = backend
        import domforest.observation as O

        saved_obs = O.kernels
        O.kernels = backend
        try:
            for _ in range(10):
                state = C.step(state, mesh, params, robot, human)
            img = render_depth(state, mesh, cam)
            extract(img, bank)
        finally:
            C.kernels = saved
            O.kernels = saved_obs

    return run


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=30)
    args = parser.parse_args()

    benches = [
        ("raster 160x120 (920 tris)", bench_raster),
        ("split hists (2000x64 cand)", bench_split),
        ("sim step 21x24", bench_step),
        ("sample pipeline", bench_sample),
    ]
    print(f"{'kernel':<28} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for name, factory in benches:
        t_np = timeit(factory(_fallback), args.repeat)
        if _native is not None:
            t_c = timeit(factory(_native), args.repeat)
            print(f"{name:<28} {t_np * 1e3:>8.2f}ms {t_c * 1e3:>8.2f}ms "
                  f"{t_np / t_c:>7.1f}x")
        else:
            print(f"{name:<28} {t_np * 1e3:>8.2f}ms {'n/a':>10} {'':>8}")
    if _native is None:
        print("\ncompiled extension not available; showing fallback only")


if __name__ == "__main__":
    main()
