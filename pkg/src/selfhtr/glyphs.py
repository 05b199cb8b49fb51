"""Glyph sources: procedural stroke letterforms and true-type fonts.

The procedural source ships in-repo so nothing depends on licensed font
collections: every symbol is a set of polylines in a unit box (x right,
y down, 1.0 = glyph box height) drawn with a configurable stroke width.
Vertical landmarks: ascender/cap top 0.08, x-height top 0.38, baseline
0.78, descender bottom 0.96.
"""

from __future__ import annotations

import math
import os
from functools import lru_cache

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .charset import Charset
from .errors import RenderError

ASC = 0.08
XH = 0.38
BL = 0.78
DESC = 0.96

_XC = (XH + BL) / 2.0  # x-height band center
_XR = (BL - XH) / 2.0  # x-height band radius


def _arc(cx, cy, r, a0, a1, n=14):
    """Polyline along a circular arc; angles in degrees, y axis points down."""
    pts = []
    for k in range(n + 1):
        a = math.radians(a0 + (a1 - a0) * k / n)
        pts.append((cx + r * math.cos(a), cy + r * math.sin(a)))
    return pts


def _circle(cx, cy, r, n=20):
    return _arc(cx, cy, r, 0, 360, n)


def _dot(cx, cy):
    # marker expanded to a filled disc at raster time
    return [("dot", cx, cy)]


# (advance width relative to box height, list of polylines)
_G = {}

_G["a"] = (0.62, [_circle(0.30, _XC, _XR), [(0.50, XH), (0.50, BL)]])
_G["b"] = (0.62, [[(0.12, ASC), (0.12, BL)], _circle(0.32, _XC, _XR)])
_G["c"] = (0.58, [_arc(0.34, _XC, _XR, 300, 60, 18)])
_G["d"] = (0.62, [[(0.50, ASC), (0.50, BL)], _circle(0.30, _XC, _XR)])
_G["e"] = (0.60, [[(0.12, _XC), (0.52, _XC)], _arc(0.32, _XC, _XR, 360, 75, 18)])
_G["f"] = (0.48, [[(0.50, 0.14), (0.38, ASC), (0.30, 0.20), (0.30, BL)],
                  [(0.12, XH), (0.48, XH)]])
_G["g"] = (0.62, [_circle(0.30, _XC, _XR), [(0.50, XH), (0.50, 0.84)],
                  _arc(0.30, 0.84, 0.20, 0, 140, 10)])
_G["h"] = (0.62, [[(0.12, ASC), (0.12, BL)], _arc(0.31, _XC, 0.19, 180, 360, 12),
                  [(0.50, _XC), (0.50, BL)]])
_G["i"] = (0.28, [[(0.14, XH), (0.14, BL)], _dot(0.14, 0.24)])
_G["j"] = (0.36, [[(0.24, XH), (0.24, 0.82)], _arc(0.08, 0.82, 0.16, 0, 120, 8),
                  _dot(0.24, 0.24)])
_G["k"] = (0.58, [[(0.12, ASC), (0.12, BL)], [(0.50, XH), (0.12, 0.60)],
                  [(0.20, 0.54), (0.52, BL)]])
_G["l"] = (0.28, [[(0.14, ASC), (0.14, BL)]])
_G["m"] = (0.86, [[(0.10, XH), (0.10, BL)], _arc(0.25, 0.54, 0.15, 180, 360, 10),
                  [(0.40, 0.54), (0.40, BL)], _arc(0.55, 0.54, 0.15, 180, 360, 10),
                  [(0.70, 0.54), (0.70, BL)]])
_G["n"] = (0.62, [[(0.12, XH), (0.12, BL)], _arc(0.31, _XC, 0.19, 180, 360, 12),
                  [(0.50, _XC), (0.50, BL)]])
_G["o"] = (0.62, [_circle(0.31, _XC, _XR)])
_G["p"] = (0.62, [[(0.12, XH), (0.12, DESC)], _circle(0.32, _XC, _XR)])
_G["q"] = (0.62, [_circle(0.30, _XC, _XR), [(0.50, XH), (0.50, DESC)]])
_G["r"] = (0.46, [[(0.12, XH), (0.12, BL)], _arc(0.28, 0.56, 0.16, 180, 320, 10)])
_G["s"] = (0.56, [[(0.48, 0.44), (0.40, XH), (0.22, XH), (0.14, 0.47),
                   (0.22, 0.56), (0.40, 0.60), (0.47, 0.69), (0.40, BL),
                   (0.20, BL), (0.12, 0.71)]])
_G["t"] = (0.48, [[(0.28, 0.16), (0.28, 0.70), (0.36, BL), (0.48, 0.74)],
                  [(0.10, XH), (0.46, XH)]])
_G["u"] = (0.62, [[(0.12, XH), (0.12, 0.60)], _arc(0.31, 0.59, 0.19, 180, 0, 12),
                  [(0.50, XH), (0.50, BL)]])
_G["v"] = (0.56, [[(0.10, XH), (0.28, BL), (0.46, XH)]])
_G["w"] = (0.78, [[(0.08, XH), (0.21, BL), (0.34, 0.50), (0.47, BL), (0.60, XH)]])
_G["x"] = (0.56, [[(0.10, XH), (0.46, BL)], [(0.46, XH), (0.10, BL)]])
_G["y"] = (0.58, [[(0.10, XH), (0.28, BL)], [(0.48, XH), (0.20, DESC)]])
_G["z"] = (0.56, [[(0.10, XH), (0.46, XH), (0.10, BL), (0.48, BL)]])

_G["A"] = (0.66, [[(0.08, BL), (0.32, ASC), (0.56, BL)], [(0.18, 0.52), (0.46, 0.52)]])
_G["B"] = (0.62, [[(0.12, ASC), (0.12, BL)], [(0.12, ASC), (0.38, ASC)],
                  _arc(0.38, 0.245, 0.165, 270, 450, 10), [(0.12, 0.41), (0.38, 0.41)],
                  _arc(0.38, 0.595, 0.185, 270, 450, 10), [(0.12, BL), (0.38, BL)]])
_G["C"] = (0.66, [_arc(0.38, 0.43, 0.33, 315, 45, 20)])
_G["D"] = (0.66, [[(0.12, ASC), (0.12, BL)], [(0.12, ASC), (0.28, ASC)],
                  _arc(0.28, 0.43, 0.35, 270, 450, 16), [(0.12, BL), (0.28, BL)]])
_G["E"] = (0.58, [[(0.50, ASC), (0.12, ASC), (0.12, BL), (0.50, BL)],
                  [(0.12, 0.43), (0.42, 0.43)]])
_G["F"] = (0.56, [[(0.50, ASC), (0.12, ASC), (0.12, BL)], [(0.12, 0.43), (0.42, 0.43)]])
_G["G"] = (0.68, [_arc(0.36, 0.43, 0.32, 315, 60, 20), [(0.62, 0.55), (0.40, 0.55)]])
_G["H"] = (0.66, [[(0.12, ASC), (0.12, BL)], [(0.54, ASC), (0.54, BL)],
                  [(0.12, 0.43), (0.54, 0.43)]])
_G["I"] = (0.42, [[(0.08, ASC), (0.34, ASC)], [(0.21, ASC), (0.21, BL)],
                  [(0.08, BL), (0.34, BL)]])
_G["J"] = (0.56, [[(0.46, ASC), (0.46, 0.60)], _arc(0.30, 0.60, 0.16, 0, 180, 10)])
_G["K"] = (0.62, [[(0.12, ASC), (0.12, BL)], [(0.52, ASC), (0.12, 0.46)],
                  [(0.24, 0.36), (0.54, BL)]])
_G["L"] = (0.56, [[(0.12, ASC), (0.12, BL), (0.50, BL)]])
_G["M"] = (0.78, [[(0.10, BL), (0.10, ASC), (0.34, 0.52), (0.58, ASC), (0.58, BL)]])
_G["N"] = (0.66, [[(0.12, BL), (0.12, ASC), (0.52, BL), (0.52, ASC)]])
_G["O"] = (0.72, [_circle(0.34, 0.43, 0.33, 24)])
_G["P"] = (0.60, [[(0.12, ASC), (0.12, BL)], [(0.12, ASC), (0.38, ASC)],
                  _arc(0.38, 0.26, 0.18, 270, 450, 10), [(0.38, 0.44), (0.12, 0.44)]])
_G["Q"] = (0.72, [_circle(0.34, 0.43, 0.33, 24), [(0.44, 0.60), (0.62, 0.80)]])
_G["R"] = (0.62, [[(0.12, ASC), (0.12, BL)], [(0.12, ASC), (0.38, ASC)],
                  _arc(0.38, 0.26, 0.18, 270, 450, 10), [(0.38, 0.44), (0.12, 0.44)],
                  [(0.30, 0.44), (0.54, BL)]])
_G["S"] = (0.60, [[(0.50, 0.18), (0.40, ASC), (0.22, ASC), (0.12, 0.20),
                   (0.18, 0.37), (0.44, 0.48), (0.50, 0.62), (0.42, BL),
                   (0.20, BL), (0.10, 0.68)]])
_G["T"] = (0.62, [[(0.08, ASC), (0.56, ASC)], [(0.32, ASC), (0.32, BL)]])
_G["U"] = (0.66, [[(0.12, ASC), (0.12, 0.58)], _arc(0.32, 0.58, 0.20, 180, 0, 12),
                  [(0.52, ASC), (0.52, 0.58)]])
_G["V"] = (0.64, [[(0.08, ASC), (0.32, BL), (0.56, ASC)]])
_G["W"] = (0.82, [[(0.06, ASC), (0.20, BL), (0.36, 0.24), (0.52, BL), (0.66, ASC)]])
_G["X"] = (0.62, [[(0.10, ASC), (0.54, BL)], [(0.54, ASC), (0.10, BL)]])
_G["Y"] = (0.62, [[(0.08, ASC), (0.32, 0.44), (0.56, ASC)], [(0.32, 0.44), (0.32, BL)]])
_G["Z"] = (0.62, [[(0.10, ASC), (0.54, ASC), (0.10, BL), (0.54, BL)]])

_G["0"] = (0.66, [_circle(0.31, 0.43, 0.30, 20)])
_G["1"] = (0.52, [[(0.16, 0.22), (0.32, ASC), (0.32, BL)], [(0.14, BL), (0.50, BL)]])
_G["2"] = (0.60, [_arc(0.30, 0.27, 0.18, 185, 355, 12),
                  [(0.48, 0.24), (0.12, BL), (0.52, BL)]])
_G["3"] = (0.58, [_arc(0.28, 0.26, 0.17, 190, 430, 14),
                  _arc(0.29, 0.60, 0.185, 290, 530, 14)])
_G["4"] = (0.62, [[(0.42, BL), (0.42, ASC), (0.10, 0.52), (0.54, 0.52)]])
_G["5"] = (0.60, [[(0.48, ASC), (0.16, ASC), (0.14, 0.40)],
                  _arc(0.30, 0.57, 0.20, 250, 500, 14)])
_G["6"] = (0.60, [[(0.44, 0.10), (0.22, 0.36), (0.13, 0.56)],
                  _circle(0.32, 0.59, 0.19, 14)])
_G["7"] = (0.58, [[(0.10, ASC), (0.54, ASC), (0.24, BL)]])
_G["8"] = (0.60, [_circle(0.31, 0.255, 0.165, 14), _circle(0.31, 0.60, 0.19, 14)])
_G["9"] = (0.60, [_circle(0.30, 0.28, 0.19, 14), [(0.49, 0.28), (0.44, 0.58), (0.28, BL)]])

_G["."] = (0.26, [_dot(0.13, 0.74)])
_G[","] = (0.26, [[(0.15, 0.70), (0.16, BL), (0.09, 0.90)]])
_G[";"] = (0.26, [_dot(0.14, 0.50), [(0.15, 0.70), (0.16, BL), (0.09, 0.90)]])
_G[":"] = (0.26, [_dot(0.13, 0.50), _dot(0.13, 0.74)])
_G["!"] = (0.28, [[(0.14, ASC), (0.14, 0.58)], _dot(0.14, 0.74)])
_G["?"] = (0.52, [_arc(0.26, 0.26, 0.17, 160, 400, 12), [(0.37, 0.39), (0.26, 0.50), (0.26, 0.58)],
                  _dot(0.26, 0.74)])
_G["'"] = (0.20, [[(0.10, ASC), (0.10, 0.24)]])
_G['"'] = (0.34, [[(0.10, ASC), (0.10, 0.24)], [(0.24, ASC), (0.24, 0.24)]])
_G["-"] = (0.46, [[(0.08, 0.52), (0.38, 0.52)]])
_G["("] = (0.34, [_arc(0.50, 0.46, 0.42, 120, 240, 12)])
_G[")"] = (0.34, [_arc(-0.16, 0.46, 0.42, -60, 60, 12)])
_G["&"] = (0.66, [[(0.54, BL), (0.18, 0.32)], _circle(0.30, 0.24, 0.15, 12),
                  [(0.22, 0.44), (0.10, 0.60), (0.18, 0.76), (0.38, 0.74), (0.54, 0.56)]])

PROCEDURAL_ID = "procedural"


class GlyphSource:
    """Per-symbol raster generator; either procedural strokes or font files."""

    def __init__(self, kind: str, font_paths: dict[str, str] | None = None):
        if kind not in ("procedural", "font_file"):
            raise RenderError(f"unknown glyph source kind {kind!r}")
        self.kind = kind
        self.font_paths = font_paths or {}

    @classmethod
    def from_spec(cls, spec: str) -> "GlyphSource":
        """Build from a pseudo-URI: ``procedural:`` or a font directory path."""
        if spec.rstrip(":") == PROCEDURAL_ID:
            return cls("procedural")
        if not os.path.isdir(spec):
            raise RenderError(f"glyph source {spec!r} is not a directory")
        paths = {}
        for name in sorted(os.listdir(spec)):
            if name.lower().endswith((".ttf", ".otf")):
                paths[name] = os.path.join(spec, name)
        if not paths:
            raise RenderError(f"no font files found under {spec!r}")
        return cls("font_file", paths)

    @property
    def ids(self) -> tuple[str, ...]:
        if self.kind == "procedural":
            return (PROCEDURAL_ID,)
        return tuple(sorted(self.font_paths))

    def covers(self, ch: str) -> bool:
        if self.kind == "procedural":
            return ch in _G
        return all(self._font_covers(fid, ch) for fid in self.ids)

    def coverage_gaps(self, charset: Charset) -> list[str]:
        return sorted(ch for ch in charset.chars if not self.covers(ch))

    def check_coverage(self, charset: Charset) -> None:
        gaps = self.coverage_gaps(charset)
        if gaps:
            raise RenderError(f"glyph source does not cover: {''.join(gaps)!r}")

    def _font_covers(self, glyph_id: str, ch: str) -> bool:
        try:
            font = self._font(glyph_id, 32)
            return font.getlength(ch) > 0
        except Exception:
            return False

    @lru_cache(maxsize=64)
    def _font(self, glyph_id: str, size: int):
        return ImageFont.truetype(self.font_paths[glyph_id], size)

    def raster(self, glyph_id: str, ch: str, box_h: int, stroke_px: int):
        """Ink mask for one symbol: float array (box_h, advance) in [0,1]."""
        if self.kind == "procedural":
            return self._raster_procedural(ch, box_h, stroke_px)
        return self._raster_font(glyph_id, ch, box_h, stroke_px)

    def _raster_procedural(self, ch: str, box_h: int, stroke_px: int):
        if ch not in _G:
            raise RenderError(f"symbol {ch!r} not covered by procedural glyphs")
        w_rel, strokes = _G[ch]
        adv = max(stroke_px + 1, round(w_rel * box_h))
        img = Image.new("L", (adv, box_h), 0)
        draw = ImageDraw.Draw(img)
        s = max(1, int(round(stroke_px)))
        for stroke in strokes:
            if stroke and isinstance(stroke[0], tuple) and stroke[0][0] == "dot":
                _, cx, cy = stroke[0]
                r = max(1.0, 0.9 * s)
                draw.ellipse(
                    [cx * box_h - r, cy * box_h - r, cx * box_h + r, cy * box_h + r],
                    fill=255,
                )
                continue
            pts = [(x * box_h, y * box_h) for x, y in stroke]
            draw.line(pts, fill=255, width=s, joint="curve")
        return np.asarray(img, dtype=np.float64) / 255.0

    def _raster_font(self, glyph_id: str, ch: str, box_h: int, stroke_px: int):
        if glyph_id not in self.font_paths:
            raise RenderError(f"unknown font id {glyph_id!r}")
        probe = self._font(glyph_id, 64)
        ascent, descent = probe.getmetrics()
        size = max(4, int(round(64 * (0.88 * box_h) / max(1, ascent + descent))))
        font = self._font(glyph_id, size)
        outline = max(0, int(round(stroke_px)) - 1)
        length = font.getlength(ch)
        if length <= 0:
            raise RenderError(f"symbol {ch!r} not covered by font {glyph_id!r}")
        adv = int(math.ceil(length)) + 2 * outline + 2
        img = Image.new("L", (adv, box_h), 0)
        draw = ImageDraw.Draw(img)
        f_ascent, _ = font.getmetrics()
        baseline = int(round(BL * box_h))
        draw.text((outline + 1, baseline - f_ascent), ch, fill=255, font=font,
                  stroke_width=outline, stroke_fill=255)
        return np.asarray(img, dtype=np.float64) / 255.0
