"""Compiled hot loops: forward warping, LUT gather, and hole inpainting.

Everything here is written so results are bit-identical regardless of the
number of threads: parallel loops only ever write disjoint output slices,
and all per-pixel arithmetic mirrors the scalar reference forms used by the
pure-Python oracles (same operation order, float64 intermediates).
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

KNOWN = np.uint8(0)
BAND = np.uint8(1)
INSIDE = np.uint8(2)

_FAR = 1.0e6


@njit(cache=True)
def _round_half_away(s):
    # round-half-away-from-zero, matching the scalar reference rule
    if s >= 0.0:
        return np.int64(s + 0.5)
    return -np.int64(-s + 0.5)


@njit(parallel=True, cache=True)
def warp_fast(src, depth, ck, zp, out, holes):
    """FAST forward warp: shift = ck[k] * (d - zp), nearest-wins collisions."""
    n = ck.shape[0]
    h, w = depth.shape
    dterm = np.empty((h, w), np.float64)
    for y in prange(h):
        for x in range(w):
            dterm[y, x] = np.float64(depth[y, x]) - zp
    for k in prange(n):
        ckk = ck[k]
        best = np.empty(w, np.float32)
        epoch = np.zeros(w, np.int32)
        for y in range(h):
            ep = y + 1
            for x in range(w):
                d = depth[y, x]
                s = ckk * dterm[y, x]
                t = x + _round_half_away(s)
                if 0 <= t < w:
                    if epoch[t] != ep:
                        epoch[t] = ep
                        best[t] = d
                        out[k, y, t, 0] = src[y, x, 0]
                        out[k, y, t, 1] = src[y, x, 1]
                        out[k, y, t, 2] = src[y, x, 2]
                    elif d >= best[t]:
                        best[t] = d
                        out[k, y, t, 0] = src[y, x, 0]
                        out[k, y, t, 1] = src[y, x, 1]
                        out[k, y, t, 2] = src[y, x, 2]
            holes[k, y, :] = False
            for x in range(w):
                if epoch[x] != ep:
                    holes[k, y, x] = True
                    out[k, y, x, 0] = 0
                    out[k, y, x, 1] = 0
                    out[k, y, x, 2] = 0


@njit(parallel=True, cache=True)
def warp_geometric(src, depth, ftk, q1, q2, out, holes):
    """GEOMETRIC forward warp: shift = ftk[k] / Z(d), harmonic in depth."""
    n = ftk.shape[0]
    h, w = depth.shape
    zmap = np.empty((h, w), np.float64)
    for y in prange(h):
        for x in range(w):
            invz = np.float64(depth[y, x]) * q1 + q2
            zmap[y, x] = 1.0 / invz
    for k in prange(n):
        ftkk = ftk[k]
        best = np.empty(w, np.float32)
        epoch = np.zeros(w, np.int32)
        for y in range(h):
            ep = y + 1
            for x in range(w):
                d = depth[y, x]
                s = ftkk / zmap[y, x]
                t = x + _round_half_away(s)
                if 0 <= t < w:
                    if epoch[t] != ep:
                        epoch[t] = ep
                        best[t] = d
                        out[k, y, t, 0] = src[y, x, 0]
                        out[k, y, t, 1] = src[y, x, 1]
                        out[k, y, t, 2] = src[y, x, 2]
                    elif d >= best[t]:
                        best[t] = d
                        out[k, y, t, 0] = src[y, x, 0]
                        out[k, y, t, 1] = src[y, x, 1]
                        out[k, y, t, 2] = src[y, x, 2]
            holes[k, y, :] = False
            for x in range(w):
                if epoch[x] != ep:
                    holes[k, y, x] = True
                    out[k, y, x, 0] = 0
                    out[k, y, x, 1] = 0
                    out[k, y, x, 2] = 0


@njit(parallel=True, cache=True)
def gather_u32(src_flat, idx, dst_flat):
    """dst[i] = src[idx[i]]; the whole quilt-to-native hot loop."""
    for i in prange(idx.shape[0]):
        dst_flat[i] = src_flat[idx[i]]


# ---------------------------------------------------------------------------
# Fast-marching inpainting (Telea-style).
#
# The marching order is a strict total order on (T, y, x), so the fill is
# fully deterministic and reproducible by the pure-Python reference used in
# the tests.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _heap_less(t1, y1, x1, t2, y2, x2):
    if t1 != t2:
        return t1 < t2
    if y1 != y2:
        return y1 < y2
    return x1 < x2


@njit(cache=True)
def _heap_push(ht, hy, hx, size, t, y, x):
    i = size
    ht[i] = t
    hy[i] = y
    hx[i] = x
    while i > 0:
        parent = (i - 1) // 2
        if _heap_less(ht[i], hy[i], hx[i], ht[parent], hy[parent], hx[parent]):
            ht[i], ht[parent] = ht[parent], ht[i]
            hy[i], hy[parent] = hy[parent], hy[i]
            hx[i], hx[parent] = hx[parent], hx[i]
            i = parent
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(ht, hy, hx, size):
    t = ht[0]
    y = hy[0]
    x = hx[0]
    size -= 1
    ht[0] = ht[size]
    hy[0] = hy[size]
    hx[0] = hx[size]
    i = 0
    while True:
        left = 2 * i + 1
        right = left + 1
        smallest = i
        if left < size and _heap_less(ht[left], hy[left], hx[left],
                                      ht[smallest], hy[smallest], hx[smallest]):
            smallest = left
        if right < size and _heap_less(ht[right], hy[right], hx[right],
                                       ht[smallest], hy[smallest], hx[smallest]):
            smallest = right
        if smallest == i:
            break
        ht[i], ht[smallest] = ht[smallest], ht[i]
        hy[i], hy[smallest] = hy[smallest], hy[i]
        hx[i], hx[smallest] = hx[smallest], hx[i]
        i = smallest
    return t, y, x, size


@njit(cache=True)
def _eikonal(T, flags, y1, x1, y2, x2, h, w):
    # solution of |grad T| = 1 from the pair of neighbors, Telea's scheme
    ok1 = 0 <= y1 < h and 0 <= x1 < w and flags[y1, x1] == KNOWN
    ok2 = 0 <= y2 < h and 0 <= x2 < w and flags[y2, x2] == KNOWN
    if ok1:
        t1 = T[y1, x1]
        if ok2:
            t2 = T[y2, x2]
            if abs(t1 - t2) >= 1.0:
                return 1.0 + min(t1, t2)
            diff = t1 - t2
            return (t1 + t2 + np.sqrt(2.0 - diff * diff)) / 2.0
        return 1.0 + t1
    if ok2:
        return 1.0 + T[y2, x2]
    return _FAR


@njit(cache=True)
def _solve_t(T, flags, y, x, h, w):
    a = _eikonal(T, flags, y - 1, x, y, x - 1, h, w)
    b = _eikonal(T, flags, y + 1, x, y, x - 1, h, w)
    c = _eikonal(T, flags, y - 1, x, y, x + 1, h, w)
    d = _eikonal(T, flags, y + 1, x, y, x + 1, h, w)
    out = a
    if b < out:
        out = b
    if c < out:
        out = c
    if d < out:
        out = d
    return out


@njit(cache=True)
def _fill_pixel(img, T, flags, y, x, y0, x0, tdy, tdx, tdyf, tdxf, tdst, tr, lo, hi):
    h, w = flags.shape
    # gradient of T at (y, x) from neighbors that already carry a value
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

    acc0 = 0.0
    acc1 = 0.0
    acc2 = 0.0
    wsum = 0.0
    t_here = T[y, x]
    for j in range(tdy.shape[0]):
        ny = y + tdy[j]
        if ny < 0 or ny >= h:
            continue
        nx = x + tdx[j]
        if nx < 0 or nx >= w:
            continue
        if flags[ny, nx] != KNOWN:
            continue
        lev = 1.0 / (1.0 + abs(T[ny, nx] - t_here))
        direc = abs(gx * tdxf[j] + gy * tdyf[j]) / tr[j]
        if direc < 1.0e-6:
            direc = 1.0e-6
        wgt = tdst[j] * lev * direc
        gy_img = y0 + ny
        gx_img = x0 + nx
        acc0 += wgt * img[gy_img, gx_img, 0]
        acc1 += wgt * img[gy_img, gx_img, 1]
        acc2 += wgt * img[gy_img, gx_img, 2]
        wsum += wgt
    if wsum > 0.0:
        v0 = np.int64(acc0 / wsum + 0.5)
        v1 = np.int64(acc1 / wsum + 0.5)
        v2 = np.int64(acc2 / wsum + 0.5)
        if v0 < lo[y, x, 0]:
            v0 = np.int64(lo[y, x, 0])
        if v0 > hi[y, x, 0]:
            v0 = np.int64(hi[y, x, 0])
        if v1 < lo[y, x, 1]:
            v1 = np.int64(lo[y, x, 1])
        if v1 > hi[y, x, 1]:
            v1 = np.int64(hi[y, x, 1])
        if v2 < lo[y, x, 2]:
            v2 = np.int64(lo[y, x, 2])
        if v2 > hi[y, x, 2]:
            v2 = np.int64(hi[y, x, 2])
        img[y0 + y, x0 + x, 0] = np.uint8(v0)
        img[y0 + y, x0 + x, 1] = np.uint8(v1)
        img[y0 + y, x0 + x, 2] = np.uint8(v2)


@njit(cache=True)
def _region_bounds(img, mask, hys, hxs, y0, x0, visited, lo, hi):
    """Per-channel clamp bounds for every hole pixel.

    Bounds are the min/max of the known pixels within Chebyshev distance 2
    of each 8-connected hole region (the region's 5x5 dilation ring).
    Regions with no known ring pixel get the full [0, 255] range.
    ``visited``, ``lo``, ``hi`` are bbox-local; img/mask are full frame.
    """
    h, w = mask.shape
    n = hys.shape[0]
    stack_y = np.empty(n, np.int32)
    stack_x = np.empty(n, np.int32)
    pix_y = np.empty(n, np.int32)
    pix_x = np.empty(n, np.int32)
    for i in range(n):
        sy = hys[i]
        sx = hxs[i]
        if visited[sy - y0, sx - x0]:
            continue
        top = 0
        stack_y[top] = sy
        stack_x[top] = sx
        top += 1
        visited[sy - y0, sx - x0] = 1
        count = 0
        rlo0 = np.int64(256)
        rlo1 = np.int64(256)
        rlo2 = np.int64(256)
        rhi0 = np.int64(-1)
        rhi1 = np.int64(-1)
        rhi2 = np.int64(-1)
        while top > 0:
            top -= 1
            y = stack_y[top]
            x = stack_x[top]
            pix_y[count] = y
            pix_x[count] = x
            count += 1
            for dy in range(-2, 3):
                ny = y + dy
                if ny < 0 or ny >= h:
                    continue
                for dx in range(-2, 3):
                    nx = x + dx
                    if nx < 0 or nx >= w:
                        continue
                    if mask[ny, nx]:
                        if (
                            abs(dy) <= 1
                            and abs(dx) <= 1
                            and not visited[ny - y0, nx - x0]
                        ):
                            visited[ny - y0, nx - x0] = 1
                            stack_y[top] = ny
                            stack_x[top] = nx
                            top += 1
                    else:
                        v0 = np.int64(img[ny, nx, 0])
                        v1 = np.int64(img[ny, nx, 1])
                        v2 = np.int64(img[ny, nx, 2])
                        if v0 < rlo0:
                            rlo0 = v0
                        if v0 > rhi0:
                            rhi0 = v0
                        if v1 < rlo1:
                            rlo1 = v1
                        if v1 > rhi1:
                            rhi1 = v1
                        if v2 < rlo2:
                            rlo2 = v2
                        if v2 > rhi2:
                            rhi2 = v2
        if rhi0 < 0:
            rlo0 = 0
            rhi0 = 255
        if rhi1 < 0:
            rlo1 = 0
            rhi1 = 255
        if rhi2 < 0:
            rlo2 = 0
            rhi2 = 255
        for j in range(count):
            py = pix_y[j] - y0
            px = pix_x[j] - x0
            lo[py, px, 0] = np.uint8(rlo0)
            lo[py, px, 1] = np.uint8(rlo1)
            lo[py, px, 2] = np.uint8(rlo2)
            hi[py, px, 0] = np.uint8(rhi0)
            hi[py, px, 1] = np.uint8(rhi1)
            hi[py, px, 2] = np.uint8(rhi2)


@njit(cache=True)
def _fmm_fill(img, mask, radius):
    """Fill masked pixels of img in place by fast-marching order.

    All working state lives on the hole bounding box padded by the fill
    radius; no marching read or write can reach past that pad, so results
    are identical to running on full-frame arrays.
    """
    h, w = mask.shape
    n_hole = 0
    ymin, ymax, xmin, xmax = h, -1, w, -1
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                n_hole += 1
                if y < ymin:
                    ymin = y
                if y > ymax:
                    ymax = y
                if x < xmin:
                    xmin = x
                if x > xmax:
                    xmax = x
    if n_hole == 0:
        return

    hys = np.empty(n_hole, np.int32)
    hxs = np.empty(n_hole, np.int32)
    i = 0
    for y in range(ymin, ymax + 1):
        for x in range(xmin, xmax + 1):
            if mask[y, x]:
                hys[i] = y
                hxs[i] = x
                i += 1

    pad = radius if radius > 2 else 2
    y0 = ymin - pad
    if y0 < 0:
        y0 = 0
    x0 = xmin - pad
    if x0 < 0:
        x0 = 0
    y1 = ymax + pad + 1
    if y1 > h:
        y1 = h
    x1 = xmax + pad + 1
    if x1 > w:
        x1 = w
    bh = y1 - y0
    bw = x1 - x0

    lo = np.empty((bh, bw, 3), np.uint8)
    hi = np.empty((bh, bw, 3), np.uint8)
    visited = np.zeros((bh, bw), np.uint8)
    _region_bounds(img, mask, hys, hxs, y0, x0, visited, lo, hi)

    flags = np.zeros((bh, bw), np.uint8)
    T = np.zeros((bh, bw), np.float64)
    for i in range(n_hole):
        flags[hys[i] - y0, hxs[i] - x0] = INSIDE
        T[hys[i] - y0, hxs[i] - x0] = _FAR

    # fill-window offsets with their precomputed weight factors
    r2max = radius * radius
    ntab = 0
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            r2 = dy * dy + dx * dx
            if r2 != 0 and r2 <= r2max:
                ntab += 1
    tdy = np.empty(ntab, np.int64)
    tdx = np.empty(ntab, np.int64)
    tdyf = np.empty(ntab, np.float64)
    tdxf = np.empty(ntab, np.float64)
    tdst = np.empty(ntab, np.float64)
    tr = np.empty(ntab, np.float64)
    j = 0
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            r2 = dy * dy + dx * dx
            if r2 != 0 and r2 <= r2max:
                tdy[j] = dy
                tdx[j] = dx
                tdyf[j] = np.float64(dy)
                tdxf[j] = np.float64(dx)
                tdst[j] = 1.0 / np.float64(r2)
                tr[j] = np.sqrt(np.float64(r2))
                j += 1

    cap = 16 * n_hole + 64
    ht = np.empty(cap, np.float64)
    hy = np.empty(cap, np.int32)
    hx = np.empty(cap, np.int32)
    size = 0

    for i in range(n_hole):
        y = hys[i] - y0
        x = hxs[i] - x0
        if flags[y, x] != INSIDE:
            continue
        near_known = False
        if y > 0 and flags[y - 1, x] == KNOWN:
            near_known = True
        elif y + 1 < bh and flags[y + 1, x] == KNOWN:
            near_known = True
        elif x > 0 and flags[y, x - 1] == KNOWN:
            near_known = True
        elif x + 1 < bw and flags[y, x + 1] == KNOWN:
            near_known = True
        if near_known:
            t = _solve_t(T, flags, y, x, bh, bw)
            T[y, x] = t
            flags[y, x] = BAND
            if size < cap:
                size = _heap_push(ht, hy, hx, size, t, y, x)

    while size > 0:
        t, y, x, size = _heap_pop(ht, hy, hx, size)
        if flags[y, x] == KNOWN:
            continue
        T[y, x] = t
        _fill_pixel(img, T, flags, y, x, y0, x0, tdy, tdx, tdyf, tdxf, tdst, tr, lo, hi)
        flags[y, x] = KNOWN
        for i in range(4):
            if i == 0:
                ny, nx = y - 1, x
            elif i == 1:
                ny, nx = y + 1, x
            elif i == 2:
                ny, nx = y, x - 1
            else:
                ny, nx = y, x + 1
            if ny < 0 or ny >= bh or nx < 0 or nx >= bw:
                continue
            if flags[ny, nx] == KNOWN:
                continue
            tn = _solve_t(T, flags, ny, nx, bh, bw)
            if flags[ny, nx] == INSIDE or tn < T[ny, nx]:
                T[ny, nx] = tn
                flags[ny, nx] = BAND
                if size < cap:
                    size = _heap_push(ht, hy, hx, size, tn, ny, nx)


@njit(parallel=True, cache=True)
def fmm_fill_views(views, holes, radius):
    """Inpaint every view of a (n, h, w, 3) stack in place, one per thread."""
    n = views.shape[0]
    for k in prange(n):
        _fmm_fill(views[k], holes[k], radius)


def warm_up():
    """Force-compile the kernels on tiny inputs (also primes the disk cache)."""
    src = np.zeros((2, 3, 3), np.uint8)
    dep = np.zeros((2, 3), np.float32)
    out = np.empty((1, 2, 3, 3), np.uint8)
    hol = np.empty((1, 2, 3), np.bool_)
    warp_fast(src, dep, np.zeros(1), 0.5, out, hol)
    warp_geometric(src, dep, np.zeros(1), 0.9, 0.1, out, hol)
    gather_u32(out.reshape(-1), np.zeros(4, np.uint32), np.empty(4, np.uint8))
    fmm_fill_views(out, hol, 3)
