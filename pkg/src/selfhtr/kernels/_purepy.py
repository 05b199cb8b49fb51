"""Pure numpy fallbacks for the compiled kernels.

These mirror selfhtr.kernels._fast operation for operation so the two
backends produce identical results (integers exactly, floats bitwise for
the warp since both evaluate the same expression per pixel in float64).
"""

import numpy as np


def levenshtein(a, b) -> int:
    """Minimal insertions + deletions + substitutions turning ``a`` into ``b``.

    Accepts strings or integer sequences.
    """
    n, m = len(a), len(b)
    if n == 0:
        return m
    if m == 0:
        return n
    prev = list(range(m + 1))
    cur = [0] * (m + 1)
    for i in range(1, n + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ai == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev, cur = cur, prev
    return prev[m]


def warp_bilinear(src, map_y, map_x, fill: float = 0.0, edge_clamp: bool = False):
    """Sample ``src`` at fractional coordinates (map_y, map_x), bilinearly.

    With ``edge_clamp`` the coordinates are clamped to the image rectangle
    (replicate border); otherwise samples falling outside get ``fill``.
    All arithmetic in float64.
    """
    src = np.ascontiguousarray(src, dtype=np.float64)
    my = np.ascontiguousarray(map_y, dtype=np.float64)
    mx = np.ascontiguousarray(map_x, dtype=np.float64)
    h, w = src.shape

    if edge_clamp:
        my = np.clip(my, 0.0, h - 1.0)
        mx = np.clip(mx, 0.0, w - 1.0)

    y0 = np.floor(my)
    x0 = np.floor(mx)
    fy = my - y0
    fx = mx - x0

    y0i = y0.astype(np.int64)
    x0i = x0.astype(np.int64)
    y1i = y0i + 1
    x1i = x0i + 1

    y0c = np.clip(y0i, 0, h - 1)
    y1c = np.clip(y1i, 0, h - 1)
    x0c = np.clip(x0i, 0, w - 1)
    x1c = np.clip(x1i, 0, w - 1)

    v00 = src[y0c, x0c]
    v01 = src[y0c, x1c]
    v10 = src[y1c, x0c]
    v11 = src[y1c, x1c]

    top = v00 * (1.0 - fx) + v01 * fx
    bot = v10 * (1.0 - fx) + v11 * fx
    out = top * (1.0 - fy) + bot * fy

    if not edge_clamp:
        inside = (my >= 0.0) & (my <= h - 1.0) & (mx >= 0.0) & (mx <= w - 1.0)
        out = np.where(inside, out, fill)
    return out
