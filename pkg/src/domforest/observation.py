"""Single-view depth observation: software rasterizer and noise injection.

Depth values are the view-axis distance from the camera in meters.  Pixels
not covered by any surface carry the background sentinel (+inf in memory,
1e9 in the binary file format).
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cloth import ClothMesh, ClothState

SENTINEL_FILE_VALUE = 1.0e9
_MAGIC = b"DIMG"


@dataclass(frozen=True)
class CameraModel:
    position: tuple
    look_at: tuple
    up: tuple = (0.0, 1.0, 0.0)
    fov_y: float = np.deg2rad(60.0)   # radians, vertical
    near: float = 0.2
    far: float = 2.0
    width: int = 160
    height: int = 120

    def __post_init__(self):
        if not (0.0 < self.fov_y < np.pi):
            raise ValueError("fov must be in (0, pi)")
        if not self.near < self.far:
            raise ValueError("near plane must be closer than far plane")
        p = np.asarray(self.position, dtype=float)
        t = np.asarray(self.look_at, dtype=float)
        if np.allclose(p, t):
            raise ValueError("degenerate camera: position equals look-at")

    def basis(self):
        p = np.asarray(self.position, dtype=np.float64)
        fwd = np.asarray(self.look_at, dtype=np.float64) - p
        fwd = fwd / np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(self.up, dtype=np.float64))
        nr = np.linalg.norm(right)
        if nr < 1e-12:
            raise ValueError("camera up vector is parallel to view direction")
        right = right / nr
        upv = np.cross(right, fwd)
        return p, right, upv, fwd


def default_camera(width: int = 160, height: int = 120,
                   distance: float = 0.8) -> CameraModel:
    """Camera above the cloth centroid looking straight down."""
    center = (0.15, 0.175, 0.0)
    return CameraModel(position=(center[0], center[1], distance),
                       look_at=center, up=(0.0, 1.0, 0.0),
                       width=width, height=height)


@dataclass
class DepthImage:
    depth: np.ndarray               # (height, width) float64, meters
    background_sentinel: float = np.inf

    def __post_init__(self):
        if self.depth.ndim != 2:
            raise ValueError("depth grid must be 2-D")
        if self.width < 8 or self.height < 8:
            raise ValueError("image must be at least 8x8 pixels")

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    def foreground(self) -> np.ndarray:
        return np.isfinite(self.depth)


@dataclass(frozen=True)
class NoiseSpec:
    depth_sigma: float = 0.0          # m, gaussian on foreground pixels
    occluder_count: int = 0           # opaque rectangles at near depth
    occluder_size_range: tuple = (5, 30)  # pixels, inclusive
    dropout_prob: float = 0.0         # per-pixel sentinel probability

    def __post_init__(self):
        if self.depth_sigma < 0 or self.occluder_count < 0:
            raise ValueError("noise magnitudes must be >= 0")
        if not (0.0 <= self.dropout_prob <= 1.0):
            raise ValueError("dropout_prob must be in [0, 1]")
        lo, hi = self.occluder_size_range
        if lo < 0 or hi < lo:
            raise ValueError("bad occluder size range")

    def is_zero(self) -> bool:
        return (self.depth_sigma == 0.0 and self.occluder_count == 0
                and self.dropout_prob == 0.0)


def project_vertices(positions: np.ndarray, cam: CameraModel):
    """World positions -> (pixel x, pixel y, view depth)."""
    p, right, upv, fwd = cam.basis()
    rel = positions - p
    xc = rel @ right
    yc = rel @ upv
    zc = rel @ fwd
    tan_y = np.tan(cam.fov_y / 2.0)
    aspect = cam.width / cam.height
    safe_z = np.where(zc > 1e-9, zc, 1e-9)
    ndc_x = xc / (safe_z * tan_y * aspect)
    ndc_y = yc / (safe_z * tan_y)
    px = (ndc_x + 1.0) * 0.5 * cam.width
    py = (1.0 - ndc_y) * 0.5 * cam.height
    return px, py, zc


def render_triangles(positions: np.ndarray, triangles: np.ndarray,
                     cam: CameraModel) -> DepthImage:
    """Z-buffered perspective rasterization of a triangle soup."""
    px, py, zc = project_vertices(positions, cam)
    ok = zc > 1e-9
    if triangles.size:
        keep = ok[triangles].all(axis=1)
        tris = np.ascontiguousarray(triangles[keep], dtype=np.int32)
    else:
        tris = np.zeros((0, 3), dtype=np.int32)
    depth = kernels.raster_triangles(px, py, np.maximum(zc, 1e-9), tris,
                                     cam.width, cam.height)
    # clip strictly to (near, far); anything outside is background
    bad = np.isfinite(depth) & ((depth <= cam.near) | (depth >= cam.far))
    depth[bad] = np.inf
    return DepthImage(depth)


def render_depth(state: ClothState, mesh: ClothMesh, cam: CameraModel) -> DepthImage:
    """Observation of the cloth: two triangles per grid cell, z-buffered."""
    return render_triangles(state.positions, mesh.triangles, cam)


def apply_noise(img: DepthImage, spec: NoiseSpec, seed: int) -> DepthImage:
    """Gaussian depth noise, occluding rectangles, then pixel dropout.

    Deterministic for a given seed; the input image is left untouched.
    """
    rng = np.random.default_rng(seed)
    depth = img.depth.copy()
    h, w = depth.shape
    fg = np.isfinite(depth)

    if spec.depth_sigma > 0.0:
        noise = rng.normal(0.0, spec.depth_sigma, size=depth.shape)
        depth[fg] += noise[fg]

    if spec.occluder_count > 0:
        finite = depth[np.isfinite(depth)]
        base = float(finite.min()) if finite.size else 1.0
        lo, hi = spec.occluder_size_range
        hi = max(hi, lo)
        for _ in range(spec.occluder_count):
            ow = int(rng.integers(lo, hi + 1))
            oh = int(rng.integers(lo, hi + 1))
            ow = min(max(ow, 1), w)
            oh = min(max(oh, 1), h)
            c0 = int(rng.integers(0, w - ow + 1))
            r0 = int(rng.integers(0, h - oh + 1))
            od = base * rng.uniform(0.5, 0.9)
            depth[r0 : r0 + oh, c0 : c0 + ow] = od

    if spec.dropout_prob > 0.0:
        drop = rng.random(size=depth.shape) < spec.dropout_prob
        depth[drop] = np.inf

    return DepthImage(depth)


def save_dimg(img: DepthImage, path) -> None:
    """Binary format: magic 'DIMG', u32 width, u32 height, f32 pixels (LE)."""
    data = img.depth.astype(np.float32)
    data = np.where(np.isfinite(data), data, np.float32(SENTINEL_FILE_VALUE))
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", img.width, img.height))
        fh.write(data.astype("<f4").tobytes())


def load_dimg(path) -> DepthImage:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not a depth image file: bad magic {magic!r}")
        w, h = struct.unpack("<II", fh.read(8))
        raw = np.frombuffer(fh.read(4 * w * h), dtype="<f4").reshape(h, w)
    depth = raw.astype(np.float64)
    depth[depth >= SENTINEL_FILE_VALUE] = np.inf
    return DepthImage(depth)


def save_text(img: DepthImage, path) -> None:
    """PGM-style plain-text export, lossless (repr'd float64 values)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("PF2\n")
        fh.write(f"{img.width} {img.height}\n")
        for row in img.depth:
            fh.write(" ".join("inf" if not np.isfinite(v) else repr(float(v))
                              for v in row) + "\n")


def load_text(path) -> DepthImage:
    with open(path, "r", encoding="utf-8") as fh:
        if fh.readline().strip() != "PF2":
            raise ValueError("not a PF2 text depth image")
        w, h = (int(t) for t in fh.readline().split())
        rows = [[float(t) for t in fh.readline().split()] for _ in range(h)]
    depth = np.array(rows, dtype=np.float64).reshape(h, w)
    return DepthImage(depth)
