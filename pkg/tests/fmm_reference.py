"""Independent fast-marching (Telea) inpainting reference.

A straightforward full-frame implementation with heapq: eikonal distance
field grown from the hole boundary, pixels filled in increasing-distance
order from the known pixels inside the fill window, weighted by distance,
level-set proximity, and gradient direction. The production kernel works on
a padded hole bounding box; this one works on the whole frame, so agreement
between the two is evidence neither has a coordinate or ordering bug.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

KNOWN, BAND, INSIDE = 0, 1, 2
FAR = 1.0e6


def _eikonal(T, flags, y1, x1, y2, x2, h, w):
    ok1 = 0 <= y1 < h and 0 <= x1 < w and flags[y1, x1] == KNOWN
    ok2 = 0 <= y2 < h and 0 <= x2 < w and flags[y2, x2] == KNOWN
    if ok1:
        t1 = T[y1, x1]
        if ok2:
            t2 = T[y2, x2]
            if abs(t1 - t2) >= 1.0:
                return 1.0 + min(t1, t2)
            diff = t1 - t2
            return (t1 + t2 + math.sqrt(2.0 - diff * diff)) / 2.0
        return 1.0 + t1
    if ok2:
        return 1.0 + T[y2, x2]
    return FAR


def _solve_t(T, flags, y, x, h, w):
    a = _eikonal(T, flags, y - 1, x, y, x - 1, h, w)
    b = _eikonal(T, flags, y + 1, x, y, x - 1, h, w)
    c = _eikonal(T, flags, y - 1, x, y, x + 1, h, w)
    d = _eikonal(T, flags, y + 1, x, y, x + 1, h, w)
    return min(a, b, c, d)


def _region_bounds(img, mask):
    """Per-channel clamp range for each 8-connected hole region.

    The range is the min/max of known pixels within Chebyshev distance 2 of
    any pixel of the region; an empty ring yields the full [0, 255] range.
    Returns {(y, x): (lo_rgb, hi_rgb)} for every hole pixel.
    """
    h, w = mask.shape
    seen = np.zeros((h, w), bool)
    out = {}
    for sy in range(h):
        for sx in range(w):
            if not mask[sy, sx] or seen[sy, sx]:
                continue
            region = []
            stack = [(sy, sx)]
            seen[sy, sx] = True
            while stack:
                y, x = stack.pop()
                region.append((y, x))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            stack.append((ny, nx))
            ring = set()
            for y, x in region:
                for dy in range(-2, 3):
                    for dx in range(-2, 3):
                        ny, nx = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx < w and not mask[ny, nx]:
                            ring.add((ny, nx))
            if ring:
                vals = np.array([img[y, x] for (y, x) in ring], np.int64)
                lo = vals.min(axis=0)
                hi = vals.max(axis=0)
            else:
                lo = np.array([0, 0, 0], np.int64)
                hi = np.array([255, 255, 255], np.int64)
            for y, x in region:
                out[(y, x)] = (lo, hi)
    return out


def _fill_pixel(img, T, flags, y, x, offsets, lo, hi):
    h, w = flags.shape
    gx = 0.0
    okr = x + 1 < w and flags[y, x + 1] != INSIDE
    okl = x - 1 >= 0 and flags[y, x - 1] != INSIDE
    if okr and okl:
        gx = (T[y, x + 1] - T[y, x - 1]) / 2.0
    elif okr:
        gx = T[y, x + 1] - T[y, x]
    elif okl:
        gx = T[y, x] - T[y, x - 1]
    gy = 0.0
    okd = y + 1 < h and flags[y + 1, x] != INSIDE
    oku = y - 1 >= 0 and flags[y - 1, x] != INSIDE
    if okd and oku:
        gy = (T[y + 1, x] - T[y - 1, x]) / 2.0
    elif okd:
        gy = T[y + 1, x] - T[y, x]
    elif oku:
        gy = T[y, x] - T[y - 1, x]

    acc = [0.0, 0.0, 0.0]
    wsum = 0.0
    t_here = T[y, x]
    for dy, dx, dyf, dxf, dst, dist in offsets:
        ny = y + dy
        if ny < 0 or ny >= h:
            continue
        nx = x + dx
        if nx < 0 or nx >= w:
            continue
        if flags[ny, nx] != KNOWN:
            continue
        lev = 1.0 / (1.0 + abs(T[ny, nx] - t_here))
        direc = abs(gx * dxf + gy * dyf) / dist
        if direc < 1.0e-6:
            direc = 1.0e-6
        wgt = dst * lev * direc
        acc[0] += wgt * img[ny, nx, 0]
        acc[1] += wgt * img[ny, nx, 1]
        acc[2] += wgt * img[ny, nx, 2]
        wsum += wgt
    if wsum > 0.0:
        for ch in range(3):
            v = int(acc[ch] / wsum + 0.5)
            v = max(v, int(lo[ch]))
            v = min(v, int(hi[ch]))
            img[y, x, ch] = v


def telea_reference(image: np.ndarray, mask: np.ndarray, radius: int = 3) -> np.ndarray:
    """Inpaint mask pixels of an RGB uint8 image; returns a filled copy."""
    img = image.astype(np.uint8).copy()
    mask = mask.astype(bool)
    h, w = mask.shape
    holes = [(y, x) for y in range(h) for x in range(w) if mask[y, x]]
    if not holes:
        return img
    n_hole = len(holes)

    bounds = _region_bounds(img, mask)

    flags = np.zeros((h, w), np.uint8)
    T = np.zeros((h, w), np.float64)
    for y, x in holes:
        flags[y, x] = INSIDE
        T[y, x] = FAR

    offsets = []
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            r2 = dy * dy + dx * dx
            if r2 != 0 and r2 <= radius * radius:
                offsets.append(
                    (dy, dx, float(dy), float(dx), 1.0 / float(r2), math.sqrt(float(r2)))
                )

    cap = 16 * n_hole + 64
    heap: list[tuple[float, int, int]] = []
    for y, x in holes:
        near_known = (
            (y > 0 and flags[y - 1, x] == KNOWN)
            or (y + 1 < h and flags[y + 1, x] == KNOWN)
            or (x > 0 and flags[y, x - 1] == KNOWN)
            or (x + 1 < w and flags[y, x + 1] == KNOWN)
        )
        if near_known:
            t = _solve_t(T, flags, y, x, h, w)
            T[y, x] = t
            flags[y, x] = BAND
            if len(heap) < cap:
                heapq.heappush(heap, (t, y, x))

    while heap:
        t, y, x = heapq.heappop(heap)
        if flags[y, x] == KNOWN:
            continue
        T[y, x] = t
        lo, hi = bounds[(y, x)]
        _fill_pixel(img, T, flags, y, x, offsets, lo, hi)
        flags[y, x] = KNOWN
        for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
            if ny < 0 or ny >= h or nx < 0 or nx >= w:
                continue
            if flags[ny, nx] == KNOWN:
                continue
            tn = _solve_t(T, flags, ny, nx, h, w)
            if flags[ny, nx] == INSIDE or tn < T[ny, nx]:
                T[ny, nx] = tn
                flags[ny, nx] = BAND
                if len(heap) < cap:
                    heapq.heappush(heap, (tn, ny, nx))
    return img
