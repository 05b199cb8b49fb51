"""Synthetic word-image rendering and dataset loading.

A word is laid out glyph by glyph, sheared by the slant angle, rotated
by the skew angle, drawn as foreground intensity over background, then
Gaussian-smoothed and height-normalized. All appearance parameters are
sampled uniformly from configurable ranges.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from . import kernels
from .charset import Charset
from .errors import DataError, RenderError
from .glyphs import PROCEDURAL_ID, GlyphSource

DEFAULT_HEIGHT = 64


@dataclass(frozen=True)
class RenderParams:
    glyph_source_id: str
    stroke_width: float  # px at glyph-box scale
    char_spacing: float  # px between glyph boxes, may be negative
    skew_angle: float  # rotation, degrees
    slant_angle: float  # horizontal shear, degrees
    fg_intensity: float
    bg_intensity: float
    smoothing_sigma: float

    def contrast(self) -> float:
        return abs(self.fg_intensity - self.bg_intensity)


@dataclass(frozen=True)
class RenderRanges:
    """Uniform sampling ranges for RenderParams, plus layout geometry."""

    stroke_width: tuple[float, float] = (1.0, 4.0)
    char_spacing: tuple[float, float] = (-2.0, 6.0)
    skew_angle: tuple[float, float] = (-5.0, 5.0)
    slant_angle: tuple[float, float] = (-30.0, 30.0)
    fg_intensity: tuple[float, float] = (0.0, 1.0)
    bg_intensity: tuple[float, float] = (0.0, 1.0)
    smoothing_sigma: tuple[float, float] = (0.0, 1.5)
    min_contrast: float = 0.3
    glyph_ids: tuple[str, ...] = (PROCEDURAL_ID,)
    height: int = DEFAULT_HEIGHT
    glyph_box: int = 52  # glyph box height in px before normalization
    margin: int = 6

    def validate(self) -> None:
        for name in ("stroke_width", "char_spacing", "skew_angle", "slant_angle",
                     "fg_intensity", "bg_intensity", "smoothing_sigma"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise RenderError(f"range {name} has min > max")
        lo_f, hi_f = self.fg_intensity
        lo_b, hi_b = self.bg_intensity
        if max(abs(hi_f - lo_b), abs(hi_b - lo_f)) < self.min_contrast:
            raise RenderError("contrast constraint unsatisfiable for given ranges")
        if self.smoothing_sigma[0] < 0:
            raise RenderError("smoothing_sigma must be >= 0")


@dataclass
class WordImage:
    """Grayscale word raster: fixed height, variable width, values in [0,1]."""

    pixels: np.ndarray
    transcription: str | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def validate(self, height: int | None = None) -> None:
        if self.pixels.ndim != 2 or self.pixels.shape[1] < 1:
            raise DataError("word image must be 2-D with width >= 1")
        if height is not None and self.pixels.shape[0] != height:
            raise DataError(f"expected height {height}, got {self.pixels.shape[0]}")
        lo, hi = float(self.pixels.min()), float(self.pixels.max())
        if lo < -1e-6 or hi > 1 + 1e-6:
            raise DataError(f"pixel values outside [0,1]: [{lo}, {hi}]")

    def background_estimate(self) -> float:
        """Median border intensity; used as pad/fill value."""
        border = np.concatenate([
            self.pixels[0, :], self.pixels[-1, :],
            self.pixels[:, 0], self.pixels[:, -1],
        ])
        return float(np.median(border))


@dataclass
class Dataset:
    images: list[WordImage]
    charset: Charset
    split: str = "train"

    def __post_init__(self):
        if not self.images:
            raise DataError("dataset must be nonempty")

    def __len__(self) -> int:
        return len(self.images)

    def __iter__(self):
        return iter(self.images)

    def __getitem__(self, i):
        return self.images[i]

    @property
    def labeled(self) -> bool:
        return all(im.transcription is not None for im in self.images)

    def transcriptions(self) -> list[str | None]:
        return [im.transcription for im in self.images]

    def validate(self) -> None:
        for i, im in enumerate(self.images):
            im.validate()
            if im.transcription is not None:
                try:
                    self.charset.validate(im.transcription)
                except Exception as e:
                    raise DataError(f"sample {i}: {e}") from e


def sample_render_params(ranges: RenderRanges, rng: np.random.Generator) -> RenderParams:
    """One uniform draw per field; fg/bg redrawn until the contrast holds."""
    ranges.validate()

    def u(lo_hi):
        lo, hi = lo_hi
        return float(lo + (hi - lo) * rng.random())

    gid = ranges.glyph_ids[int(rng.integers(0, len(ranges.glyph_ids)))]
    stroke = u(ranges.stroke_width)
    spacing = u(ranges.char_spacing)
    skew = u(ranges.skew_angle)
    slant = u(ranges.slant_angle)
    sigma = u(ranges.smoothing_sigma)
    for _ in range(10000):
        fg = u(ranges.fg_intensity)
        bg = u(ranges.bg_intensity)
        if abs(fg - bg) >= ranges.min_contrast:
            break
    else:  # pragma: no cover - validate() rules this out
        raise RenderError("could not satisfy contrast constraint")
    return RenderParams(
        glyph_source_id=gid, stroke_width=stroke, char_spacing=spacing,
        skew_angle=skew, slant_angle=slant, fg_intensity=fg, bg_intensity=bg,
        smoothing_sigma=sigma,
    )


def rasterize_word_mask(
    text: str, params: RenderParams, glyphs: GlyphSource, ranges: RenderRanges
) -> np.ndarray:
    """Compose per-glyph rasters left to right into one ink mask.

    Canvas height is glyph_box + 2*margin; spacing (possibly negative)
    separates consecutive glyph boxes. No geometric transforms yet.
    """
    if not text:
        raise RenderError("cannot render an empty string")
    box = ranges.glyph_box
    margin = ranges.margin
    stroke = max(1, int(round(params.stroke_width)))
    spacing = int(round(params.char_spacing))

    rasters = [glyphs.raster(params.glyph_source_id, ch, box, stroke) for ch in text]
    xs = [margin]
    for r in rasters[:-1]:
        xs.append(max(0, xs[-1] + r.shape[1] + spacing))
    width = xs[-1] + rasters[-1].shape[1] + margin
    canvas = np.zeros((box + 2 * margin, width), dtype=np.float64)
    for x, r in zip(xs, rasters):
        h, w = r.shape
        region = canvas[margin:margin + h, x:x + w]
        np.maximum(region, r, out=region)
    return canvas


def _warp_rect(mask: np.ndarray, slant_deg: float, skew_deg: float) -> np.ndarray:
    """Shear then rotate about the center; output covers the warped rectangle.

    Identity angles reproduce the input exactly (integer sampling grid).
    """
    if slant_deg == 0.0 and skew_deg == 0.0:
        return mask
    h, w = mask.shape
    shear = math.tan(math.radians(slant_deg))
    th = math.radians(skew_deg)
    cos_t, sin_t = math.cos(th), math.sin(th)
    # forward map: shear (x += shear * (cy - y)) then rotation about center
    # y grows downward so a positive slant leans the top rightward
    m_fwd = np.array([
        [cos_t, -sin_t],
        [sin_t, cos_t],
    ]) @ np.array([
        [1.0, -shear],
        [0.0, 1.0],
    ])
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    corners = np.array([[x - cx, y - cy] for x, y in
                        ((0, 0), (w - 1, 0), (0, h - 1), (w - 1, h - 1))])
    warped = corners @ m_fwd.T
    x_lo, y_lo = warped.min(axis=0)
    x_hi, y_hi = warped.max(axis=0)
    out_w = int(math.ceil(x_hi - x_lo)) + 1
    out_h = int(math.ceil(y_hi - y_lo)) + 1
    m_inv = np.linalg.inv(m_fwd)
    oy, ox = np.mgrid[0:out_h, 0:out_w]
    vx = ox + x_lo
    vy = oy + y_lo
    sx = m_inv[0, 0] * vx + m_inv[0, 1] * vy + cx
    sy = m_inv[1, 0] * vx + m_inv[1, 1] * vy + cy
    return kernels.warp_bilinear(mask, sy, sx, fill=0.0, edge_clamp=False)


def resize_to_height(img: np.ndarray, height: int) -> np.ndarray:
    """Bilinear rescale to the target height, preserving aspect ratio."""
    h, w = img.shape
    if h == height:
        return img.copy()
    scale = height / h
    new_w = max(1, int(round(w * scale)))
    oy, ox = np.mgrid[0:height, 0:new_w]
    sy = (oy + 0.5) * (h / height) - 0.5
    sx = (ox + 0.5) * (w / new_w) - 0.5
    return kernels.warp_bilinear(img, sy, sx, edge_clamp=True)


def render_word(
    text: str,
    params: RenderParams,
    glyphs: GlyphSource,
    ranges: RenderRanges | None = None,
) -> WordImage:
    """Deterministic rendering of one word under fixed parameters."""
    ranges = ranges or RenderRanges()
    mask = rasterize_word_mask(text, params, glyphs, ranges)
    mask = _warp_rect(mask, params.slant_angle, params.skew_angle)

    # horizontal crop to ink, keeping the configured margin
    cols = np.where(mask.max(axis=0) > 1e-3)[0]
    if cols.size:
        lo = max(0, cols[0] - ranges.margin)
        hi = min(mask.shape[1], cols[-1] + 1 + ranges.margin)
        mask = mask[:, lo:hi]

    mask = np.clip(mask, 0.0, 1.0)
    pixels = params.bg_intensity + (params.fg_intensity - params.bg_intensity) * mask
    if params.smoothing_sigma > 0:
        pixels = gaussian_filter(pixels, sigma=params.smoothing_sigma)
    pixels = resize_to_height(pixels, ranges.height)
    pixels = np.clip(pixels, 0.0, 1.0).astype(np.float32)
    return WordImage(
        pixels=pixels,
        transcription=text,
        provenance={"kind": "synthetic", "params": params},
    )


def build_synthetic_dataset(
    strings: list[str],
    ranges: RenderRanges,
    glyphs: GlyphSource,
    seed: int,
    charset: Charset | None = None,
    split: str = "synthetic",
) -> Dataset:
    """One image per string, each with independently sampled parameters.

    Per-item seeds derive from (seed, index) so the result is order-stable
    however the loop is executed.
    """
    if not strings:
        raise RenderError("no strings to render")
    images = []
    for i, text in enumerate(strings):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        params = sample_render_params(ranges, rng)
        try:
            images.append(render_word(text, params, glyphs, ranges))
        except RenderError as e:
            raise RenderError(f"string {i} ({text!r}): {e}") from e
    return Dataset(images=images, charset=charset or Charset.default(), split=split)


def load_image_grayscale(path: str) -> np.ndarray:
    """Load any common raster format as luminance in [0,1]."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0


def load_manifest_dataset(
    manifest_path: str,
    image_root: str,
    charset: Charset,
    height: int = DEFAULT_HEIGHT,
    split: str = "external",
) -> Dataset:
    """Load a tab-separated manifest: path[<TAB>transcription] per row.

    Comment lines starting with '#' are ignored. A missing transcription
    column yields unlabeled samples.
    """
    images = []
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as e:
        raise DataError(f"cannot read manifest {manifest_path!r}: {e}") from e

    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) > 2 or not parts[0].strip():
            raise DataError(f"{manifest_path}:{lineno}: malformed row {line!r}")
        rel = parts[0].strip()
        transcription = parts[1] if len(parts) == 2 else None
        if transcription is not None:
            try:
                charset.validate(transcription)
            except Exception as e:
                raise DataError(f"{manifest_path}:{lineno}: {e}") from e
        path = os.path.join(image_root, rel)
        if not os.path.isfile(path):
            raise DataError(f"{manifest_path}:{lineno}: missing image file {path!r}")
        pixels = resize_to_height(load_image_grayscale(path), height)
        images.append(WordImage(
            pixels=np.clip(pixels, 0.0, 1.0).astype(np.float32),
            transcription=transcription,
            provenance={"kind": "external", "row": lineno, "path": rel},
        ))
    if not images:
        raise DataError(f"manifest {manifest_path!r} has no samples")
    return Dataset(images=images, charset=charset, split=split)


def save_dataset(dataset: Dataset, out_dir: str, manifest_name: str = "manifest.tsv") -> str:
    """Write PNG files plus a manifest; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    img_dir = os.path.join(out_dir, "images")
    os.makedirs(img_dir, exist_ok=True)
    rows = []
    for i, im in enumerate(dataset.images):
        name = f"{i:06d}.png"
        arr = np.clip(np.rint(im.pixels * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(arr, mode="L").save(os.path.join(img_dir, name))
        if im.transcription is not None:
            rows.append(f"images/{name}\t{im.transcription}")
        else:
            rows.append(f"images/{name}")
    manifest = os.path.join(out_dir, manifest_name)
    with open(manifest, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    return manifest
