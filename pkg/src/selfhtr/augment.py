"""Weak and strong augmentation of word images.

Weak: Gaussian blur or noise plus a global affine perturbation (shear,
rotation, rescale). Strong: the weak pipeline followed by grid
distortion, which jitters the vertices of a control mesh and warps the
image by piecewise bilinear interpolation, perturbing individual
character shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from . import kernels
from .errors import ConfigError
from .render import WordImage

AUGMENT_KINDS = ("identity", "weak", "strong")


@dataclass(frozen=True)
class AugmentationPolicy:
    kind: str = "weak"
    blur_sigma: tuple[float, float] = (0.0, 1.0)
    noise_std: tuple[float, float] = (0.0, 0.05)
    shear: tuple[float, float] = (-8.0, 8.0)
    rotation: tuple[float, float] = (-3.0, 3.0)
    rescale: tuple[float, float] = (0.9, 1.1)
    grid_cell: int = 16
    grid_jitter_std: float = 1.5

    def __post_init__(self):
        if self.kind not in AUGMENT_KINDS:
            raise ConfigError(f"augmentation kind {self.kind!r} invalid")
        for name in ("blur_sigma", "noise_std", "shear", "rotation", "rescale"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"augmentation range {name} has min > max")
        if self.kind == "strong" and self.grid_cell < 2:
            raise ConfigError("grid_cell must be >= 2 for strong augmentation")

    @classmethod
    def identity(cls) -> "AugmentationPolicy":
        return cls(kind="identity")

    @classmethod
    def weak(cls, **kw) -> "AugmentationPolicy":
        return cls(kind="weak", **kw)

    @classmethod
    def strong(cls, **kw) -> "AugmentationPolicy":
        return cls(kind="strong", **kw)


def _affine(pixels: np.ndarray, shear_deg: float, rot_deg: float, scale: float,
            fill: float) -> np.ndarray:
    """Affine perturbation about the image center on a fixed canvas."""
    if shear_deg == 0.0 and rot_deg == 0.0 and scale == 1.0:
        return pixels
    h, w = pixels.shape
    shear = math.tan(math.radians(shear_deg))
    th = math.radians(rot_deg)
    cos_t, sin_t = math.cos(th), math.sin(th)
    m_fwd = np.array([[cos_t, -sin_t], [sin_t, cos_t]]) @ \
        np.array([[1.0, -shear], [0.0, 1.0]]) * scale
    m_inv = np.linalg.inv(m_fwd)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    oy, ox = np.mgrid[0:h, 0:w]
    vx = ox - cx
    vy = oy - cy
    sx = m_inv[0, 0] * vx + m_inv[0, 1] * vy + cx
    sy = m_inv[1, 0] * vx + m_inv[1, 1] * vy + cy
    return kernels.warp_bilinear(pixels, sy, sx, fill=fill, edge_clamp=False)


def grid_distort(pixels: np.ndarray, cell_size: int, jitter_std: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Warp by a jittered control mesh; border vertices stay fixed."""
    if cell_size < 2:
        raise ConfigError("cell_size must be >= 2")
    h, w = pixels.shape
    ny = max(2, int(math.ceil(h / cell_size)) + 1)
    nx = max(2, int(math.ceil(w / cell_size)) + 1)
    dy = rng.normal(0.0, 1.0, size=(ny, nx)) * jitter_std
    dx = rng.normal(0.0, 1.0, size=(ny, nx)) * jitter_std
    dy[0, :] = dy[-1, :] = 0.0
    dy[:, 0] = dy[:, -1] = 0.0
    dx[0, :] = dx[-1, :] = 0.0
    dx[:, 0] = dx[:, -1] = 0.0
    if jitter_std == 0.0:
        return pixels.copy()

    # dense displacement field: sample the vertex grid bilinearly
    oy, ox = np.mgrid[0:h, 0:w]
    gy = oy * ((ny - 1) / max(1, h - 1))
    gx = ox * ((nx - 1) / max(1, w - 1))
    field_y = kernels.warp_bilinear(dy, gy, gx, edge_clamp=True)
    field_x = kernels.warp_bilinear(dx, gy, gx, edge_clamp=True)
    return kernels.warp_bilinear(pixels, oy + field_y, ox + field_x, edge_clamp=True)


def apply(policy: AugmentationPolicy, image: WordImage,
          rng: np.random.Generator) -> WordImage:
    """Augment one image; transcription and provenance are preserved."""
    if policy.kind == "identity":
        return image

    def u(lo_hi):
        lo, hi = lo_hi
        return float(lo + (hi - lo) * rng.random())

    pixels = np.asarray(image.pixels, dtype=np.float64)
    fill = image.background_estimate()

    shear = u(policy.shear)
    rot = u(policy.rotation)
    scale = u(policy.rescale)
    blur = u(policy.blur_sigma)
    noise = u(policy.noise_std)

    pixels = _affine(pixels, shear, rot, scale, fill)
    if blur > 0:
        pixels = gaussian_filter(pixels, sigma=blur)
    if noise > 0:
        pixels = pixels + rng.normal(0.0, noise, size=pixels.shape)

    if policy.kind == "strong":
        pixels = grid_distort(pixels, policy.grid_cell, policy.grid_jitter_std, rng)

    pixels = np.clip(pixels, 0.0, 1.0).astype(np.float32)
    return WordImage(pixels=pixels, transcription=image.transcription,
                     provenance=image.provenance)
