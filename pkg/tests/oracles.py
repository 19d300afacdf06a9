"""Independent reference implementations used as test oracles.

Deliberately naive and separate from the package code paths: flood-fill
component counting, a per-pixel thinning pass, a unit-step threshold scan,
and straight-line loss formulas.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np


def flood_fill_components(bits: np.ndarray, connectivity: int) -> int:
    """Count connected ink regions by breadth-first flood fill."""
    if connectivity == 4:
        moves = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    else:
        moves = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
    h, w = bits.shape
    seen = np.zeros_like(bits, dtype=bool)
    count = 0
    for r in range(h):
        for c in range(w):
            if bits[r, c] and not seen[r, c]:
                count += 1
                queue = deque([(r, c)])
                seen[r, c] = True
                while queue:
                    cr, cc = queue.popleft()
                    for dr, dc in moves:
                        nr, nc = cr + dr, cc + dc
                        if 0 <= nr < h and 0 <= nc < w and bits[nr, nc] and not seen[nr, nc]:
                            seen[nr, nc] = True
                            queue.append((nr, nc))
    return count


def reference_select_threshold(pixels: np.ndarray) -> int:
    """Unit-step scan of thresholding levels, exactly as stated."""
    base = (pixels > 0).astype(np.uint8)
    base_count = int(base.sum())
    assert base_count > 0
    base4 = flood_fill_components(base, 4)
    base8 = flood_fill_components(base, 8)
    for level in range(1, 251):
        if level >= 250:
            return level - 1
        cur = (pixels > level).astype(np.uint8)
        if 2 * int(cur.sum()) < base_count:
            return level - 1
        if flood_fill_components(cur, 4) != base4 or flood_fill_components(cur, 8) != base8:
            return level - 1
    raise AssertionError("unreachable")


def _neighbours(img: np.ndarray, r: int, c: int) -> list[int]:
    """P2..P9 clockwise from north, zero outside the image."""
    h, w = img.shape

    def at(rr: int, cc: int) -> int:
        return int(img[rr, cc]) if 0 <= rr < h and 0 <= cc < w else 0

    return [
        at(r - 1, c), at(r - 1, c + 1), at(r, c + 1), at(r + 1, c + 1),
        at(r + 1, c), at(r + 1, c - 1), at(r, c - 1), at(r - 1, c - 1),
    ]


def reference_thin(bits: np.ndarray) -> np.ndarray:
    """Per-pixel two-subpass thinning, the published algorithm verbatim."""
    img = bits.copy()
    while True:
        deleted_any = False
        for subpass in (0, 1):
            marked = []
            h, w = img.shape
            for r in range(h):
                for c in range(w):
                    if img[r, c] != 1:
                        continue
                    p = _neighbours(img, r, c)
                    b = sum(p)
                    if not 2 <= b <= 6:
                        continue
                    ring = p + p[:1]
                    a = sum(1 for k in range(8) if ring[k] == 0 and ring[k + 1] == 1)
                    if a != 1:
                        continue
                    p2, _, p4, _, p6, _, p8, _ = p
                    if subpass == 0:
                        if p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0:
                            marked.append((r, c))
                    else:
                        if p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0:
                            marked.append((r, c))
            for r, c in marked:
                img[r, c] = 0
            if marked:
                deleted_any = True
        if not deleted_any:
            return img


def reference_prediction_loss(outputs: list[dict], targets: list[tuple], reg: float = 0.0, max_w: float = 0.0) -> float:
    """Straight-line evaluation of the sequence prediction loss formula.

    ``outputs`` hold plain python lists under keys pi, mu_x, mu_y,
    sigma_x, sigma_y, rho, eos_p, eod_p; targets are (dx, dy, eos, eod).
    """
    floor = 1e-10
    total = 0.0
    for out, (dx, dy, eos, eod) in zip(outputs, targets):
        density = 0.0
        for j in range(len(out["pi"])):
            sx, sy, rho = out["sigma_x"][j], out["sigma_y"][j], out["rho"][j]
            zx = (dx - out["mu_x"][j]) / sx
            zy = (dy - out["mu_y"][j]) / sy
            z = zx * zx + zy * zy - 2 * rho * zx * zy
            n = math.exp(-z / (2 * (1 - rho * rho))) / (2 * math.pi * sx * sy * math.sqrt(1 - rho * rho))
            density += out["pi"][j] * n
        total += -math.log(max(density, floor))
        e = out["eos_p"] if eos == 1 else 1 - out["eos_p"]
        total += -math.log(min(max(e, floor), 1 - floor))
        d = out["eod_p"] if eod == 1 else 1 - out["eod_p"]
        total += -math.log(min(max(d, floor), 1 - floor))
    return total + reg * max_w


def reference_classification_loss(class_p: list[np.ndarray], label: int, gamma: float) -> float:
    total = 0.0
    for p in class_p:
        acc = 0.0
        for n in range(10):
            y = 1.0 if n == label else 0.0
            pn = min(max(float(p[n]), 1e-10), 1 - 1e-10)
            acc += y * math.log(pn) + (1 - y) * math.log(1 - pn)
        total += -acc / 10.0
    return gamma * total / len(class_p)
