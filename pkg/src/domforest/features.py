"""Depth-image feature pipeline: foreground mask, alignment, Gabor features.

The observation is reduced to a 768-dimensional vector in three steps:
extract the foreground with the depth channel, translate and scale the
foreground bounding box to a canonical canvas, then record the mean Gabor
response magnitude of 12 filters (4 orientations x 3 wavelengths) over an
8x8 grid of patches: 64 * 12 = 768 values.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.ndimage import map_coordinates

from .observation import DepthImage

FEATURE_DIM = 768
PATCH_GRID = 8
ORIENTATIONS = (0.0, 45.0, 90.0, 135.0)   # degrees
WAVELENGTHS = (4.0, 8.0, 16.0)            # pixels
SIGMA_RATIO = 0.56
ASPECT = 0.5
CANVAS_FILL = 0.8


class AlignmentError(ValueError):
    """Raised when there is no foreground to align (caller skips the sample)."""


def foreground_mask(img: DepthImage, far_threshold: float = math.inf) -> np.ndarray:
    """Boolean mask: finite depth closer than far_threshold."""
    return np.isfinite(img.depth) & (img.depth < far_threshold)


def gabor_kernel(wavelength: float, theta_deg: float) -> np.ndarray:
    """Even (cosine) Gabor kernel, zero-mean, sized to the next odd >= 6 sigma."""
    sigma = SIGMA_RATIO * wavelength
    size = int(math.ceil(6.0 * sigma))
    if size % 2 == 0:
        size += 1
    half = size // 2
    ax = np.arange(-half, half + 1, dtype=np.float64)
    x, y = np.meshgrid(ax, ax)
    theta = math.radians(theta_deg)
    xr = x * math.cos(theta) + y * math.sin(theta)
    yr = -x * math.sin(theta) + y * math.cos(theta)
    envelope = np.exp(-(xr * xr + (ASPECT * ASPECT) * (yr * yr)) / (2.0 * sigma * sigma))
    kern = envelope * np.cos(2.0 * math.pi * xr / wavelength)
    kern -= kern.mean()
    assert kern.shape == (size, size)
    return kern


@dataclass
class GaborBank:
    """12 precomputed kernels, orientation-major (o0w0, o0w1, ... o3w2)."""
    kernels: list = field(default_factory=list)

    @classmethod
    def default(cls) -> "GaborBank":
        kerns = [gabor_kernel(w, o) for o in ORIENTATIONS for w in WAVELENGTHS]
        return cls(kernels=kerns)

    def __len__(self) -> int:
        return len(self.kernels)


def align(img: DepthImage, mask: np.ndarray, size: int = 128) -> np.ndarray:
    """Center, scale and normalize the foreground onto a size x size canvas.

    The foreground bounding box is moved to the canvas center and scaled so
    its longer side spans CANVAS_FILL of the canvas; depths are min-max
    normalized over the foreground (a constant foreground maps to 0.5) and
    the background is zero.
    """
    if size % PATCH_GRID != 0:
        raise ValueError(f"canvas size must be divisible by {PATCH_GRID}")
    if not mask.any():
        raise AlignmentError("empty foreground; nothing to align")

    rows = np.nonzero(mask.any(axis=1))[0]
    cols = np.nonzero(mask.any(axis=0))[0]
    r0, r1 = int(rows[0]), int(rows[-1])
    c0, c1 = int(cols[0]), int(cols[-1])
    box_h = r1 - r0 + 1
    box_w = c1 - c0 + 1

    vals = img.depth[mask]
    dmin = float(vals.min())
    dmax = float(vals.max())
    norm = np.zeros(img.depth.shape, dtype=np.float64)
    if dmax - dmin < 1e-12:
        norm[mask] = 0.5
    else:
        norm[mask] = (img.depth[mask] - dmin) / (dmax - dmin)

    scale = CANVAS_FILL * size / max(box_w, box_h)
    out_center = (size - 1) / 2.0
    src_rc = (r0 + r1) / 2.0
    src_cc = (c0 + c1) / 2.0
    grid = np.arange(size, dtype=np.float64)
    src_r = src_rc + (grid[:, None] - out_center) / scale
    src_c = src_cc + (grid[None, :] - out_center) / scale
    coords = np.broadcast_arrays(src_r, src_c)
    canvas = map_coordinates(norm, np.stack(coords), order=1,
                             mode="constant", cval=0.0)
    return canvas


class _BankFFT:
    """Shared-spectrum convolution plan, cached per (bank id, canvas shape).

    The image is edge-replicate padded once by the largest kernel half
    (replicate padding keeps DC-free kernels exactly silent on constant
    images) and transformed once; each kernel then costs one spectrum
    multiply and one inverse transform at an FFT-friendly size.
    """

    def __init__(self):
        self._cache = {}

    def get(self, bank: GaborBank, shape: tuple):
        key = (id(bank), shape)
        if key not in self._cache:
            pad = max(k.shape[0] // 2 for k in bank.kernels)
            biggest = max(k.shape[0] for k in bank.kernels)
            fft_shape = (sfft.next_fast_len(shape[0] + 2 * pad + biggest - 1),
                         sfft.next_fast_len(shape[1] + 2 * pad + biggest - 1))
            spectra = np.stack([sfft.rfft2(k, fft_shape) for k in bank.kernels])
            halves = [k.shape[0] // 2 for k in bank.kernels]
            self._cache[key] = (pad, fft_shape, spectra, halves)
        return self._cache[key]

    def convolve_all(self, img: np.ndarray, bank: GaborBank):
        """'same'-mode convolution of img with every kernel in the bank."""
        pad, fft_shape, spectra, halves = self.get(bank, img.shape)
        padded = np.pad(img, pad, mode="edge")
        f = sfft.rfft2(padded, fft_shape)
        h, w = img.shape
        out = []
        for i, kh in enumerate(halves):
            full = sfft.irfft2(f * spectra[i], fft_shape)
            out.append(full[pad + kh : pad + kh + h, pad + kh : pad + kh + w])
        return out


_bank_ffts = _BankFFT()


def how_features(aligned: np.ndarray, bank: GaborBank) -> np.ndarray:
    """Patch-major concatenation of mean filter-response magnitudes.

    Output ordering: for each of the 64 patches (row-major), the 12 filter
    responses in bank order.
    """
    size = aligned.shape[0]
    if aligned.shape != (size, size) or size % PATCH_GRID != 0:
        raise ValueError("aligned image must be square with side divisible by 8")
    patch = size // PATCH_GRID
    per_filter = []
    for resp in _bank_ffts.convolve_all(aligned, bank):
        mag = np.abs(resp)
        means = mag.reshape(PATCH_GRID, patch, PATCH_GRID, patch).mean(axis=(1, 3))
        per_filter.append(means.reshape(-1))
    stacked = np.stack(per_filter, axis=1)   # (64, 12)
    return stacked.reshape(-1)


def extract(img: DepthImage, bank: GaborBank, size: int = 128) -> np.ndarray:
    """Full pipeline: mask -> align -> features.  Raises AlignmentError."""
    mask = foreground_mask(img)
    return how_features(align(img, mask, size=size), bank)
