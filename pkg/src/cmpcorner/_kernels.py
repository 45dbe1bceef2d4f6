"""Compiled hot loops: whole-image scan, dense NMS and subpixel refinement.

Ring signals are packed into 16-bit codes (bit i = sample i, 1 = black) so
the per-pixel criteria reduce to table lookups built once at import.
All kernels release the GIL so callers can run row stripes or candidate
chunks on a thread pool.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .sampler import corrosion_offsets, dense_outer_ring, inner_ring, middle_ring, outer_ring

NO_RUNS = 255

# --------------------------------------------------------------------------
# Lookup tables over all 16-bit ring codes


def _build_tables():
    codes = np.arange(1 << 16, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(16)) & 1).astype(np.uint8)
    popcount = bits.sum(axis=1).astype(np.uint8)

    nxt1 = ((codes >> 1) | ((codes & 1) << 15)) & 0xFFFF
    nxt2 = ((codes >> 2) | ((codes & 3) << 14)) & 0xFFFF
    jump1 = codes ^ nxt1  # bit i: g(i) != g(i+1)
    jump2 = codes ^ nxt2  # bit i: g(i) != g(i+2)
    outer_ok = popcount[jump1 & jump2] == 4

    inner_delta = np.full(codes.size, NO_RUNS, dtype=np.uint8)
    four = np.flatnonzero(popcount[jump1] == 4)
    jbits = ((jump1[four][:, None] >> np.arange(16)) & 1).astype(bool)
    pos = np.nonzero(jbits)[1].reshape(-1, 4)
    lengths = np.diff(np.concatenate([pos, pos[:, :1] + 16], axis=1), axis=1)
    delta = np.maximum(np.abs(lengths[:, 0] - lengths[:, 2]), np.abs(lengths[:, 1] - lengths[:, 3]))
    inner_delta[four] = delta
    return popcount, outer_ok.astype(np.uint8), inner_delta


POPCOUNT, OUTER_OK, INNER_DELTA = _build_tables()


def _offsets(ring):
    arr = ring.array
    return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])


IN_DX, IN_DY = _offsets(inner_ring())
OUT_DX, OUT_DY = _offsets(outer_ring())
_corr = np.array(corrosion_offsets(), dtype=np.int64)
COR_DX, COR_DY = np.ascontiguousarray(_corr[:, 0]), np.ascontiguousarray(_corr[:, 1])

REF_RINGS = tuple(_offsets(r) for r in (inner_ring(), middle_ring(), dense_outer_ring()))
REF_RADII = np.array([3.0, 4.0, 5.0])

# --------------------------------------------------------------------------
# Scan


@njit(cache=True, nogil=True)
def _scan_rows(
    black, out, y0, y1, delta_th, d_th, cd_th,
    in_dx, in_dy, out_dx, out_dy, cor_dx, cor_dy,
    popcount, outer_ok, inner_delta, margin,
):  # fmt: skip
    w = black.shape[1]
    for y in range(y0, y1):
        for x in range(margin, w - margin):
            c1 = 0
            for i in range(16):
                c1 |= np.int64(black[y + out_dy[i], x + out_dx[i]]) << i
            if outer_ok[c1] == 0:
                continue
            c2 = 0
            for i in range(16):
                c2 |= np.int64(black[y + in_dy[i], x + in_dx[i]]) << i
            d2 = np.int64(inner_delta[c2])
            if d2 == 255 or d2 >= delta_th:
                continue
            if np.int64(popcount[c1 ^ c2]) >= d_th:
                continue
            n_r = 0
            for i in range(cor_dx.shape[0]):
                n_r += black[y + cor_dy[i], x + cor_dx[i]]
            n1 = np.int64(popcount[c1])
            cd = max(n1 - n_r, n_r - n1 - 9)
            if cd >= cd_th:
                continue
            out[y, x] = delta_th - d2


def scan_rows(black, out, y0, y1, delta_th, d_th, cd_th, margin=6):
    _scan_rows(
        black, out, y0, y1, delta_th, d_th, cd_th,
        IN_DX, IN_DY, OUT_DX, OUT_DY, COR_DX, COR_DY,
        POPCOUNT, OUTER_OK, INNER_DELTA, margin,
    )  # fmt: skip


# --------------------------------------------------------------------------
# NMS


@njit(cache=True, nogil=True)
def nms_dense(dense, r):
    h, w = dense.shape
    ys = []
    xs = []
    for y in range(h):
        for x in range(w):
            v = dense[y, x]
            if v <= 0:
                continue
            keep = True
            for yy in range(max(0, y - r), min(h, y + r + 1)):
                for xx in range(max(0, x - r), min(w, x + r + 1)):
                    u = dense[yy, xx]
                    if u > v or (u == v and (yy < y or (yy == y and xx < x))):
                        keep = False
                        break
                if not keep:
                    break
            if keep:
                ys.append(y)
                xs.append(x)
    return np.array(ys, dtype=np.int64), np.array(xs, dtype=np.int64)


# --------------------------------------------------------------------------
# Refinement

PARALLEL_SIN = math.sin(math.radians(2.0))
MAX_SHIFT = 2.0

UNREFINED = 0
MIDPOINT = 1
EDGEPOINT = 2


@njit(cache=True, nogil=True)
def _bilinear(gray, x, y):
    h, w = gray.shape
    x = min(max(x, 0.0), w - 1.000001)
    y = min(max(y, 0.0), h - 1.000001)
    x0 = int(x)
    y0 = int(y)
    fx = x - x0
    fy = y - y0
    top = gray[y0, x0] * (1.0 - fx) + gray[y0, x0 + 1] * fx
    bot = gray[y0 + 1, x0] * (1.0 - fx) + gray[y0 + 1, x0 + 1] * fx
    return top * (1.0 - fy) + bot * fy


@njit(cache=True, nogil=True)
def _sobel(gray, x, y):
    h, w = gray.shape
    x = min(max(x, 1), w - 2)
    y = min(max(y, 1), h - 2)
    gx = (
        float(gray[y - 1, x + 1]) + 2.0 * gray[y, x + 1] + gray[y + 1, x + 1]
        - gray[y - 1, x - 1] - 2.0 * gray[y, x - 1] - gray[y + 1, x - 1]
    )
    gy = (
        float(gray[y + 1, x - 1]) + 2.0 * gray[y + 1, x] + gray[y + 1, x + 1]
        - gray[y - 1, x - 1] - 2.0 * gray[y - 1, x] - gray[y - 1, x + 1]
    )
    return gx, gy


PROFILE_REACH = 2.0  # half-length of the sampled gray profile
PROFILE_STEP = 0.25
MAX_EDGE_OFFSET = 1.0  # accepted crossing distance from the pixel-pair midpoint
MIN_CONTRAST = 8.0


@njit(cache=True, nogil=True)
def subpixel_edge(gray, ax, ay, bx, by):
    """Subpixel edge location between two adjacent pixels of opposite
    binary class: the mid-level crossing of the gray profile sampled along
    the local gradient direction through their midpoint."""
    mx = 0.5 * (ax + bx)
    my = 0.5 * (ay + by)
    g1x, g1y = _sobel(gray, ax, ay)
    g2x, g2y = _sobel(gray, bx, by)
    nx = g1x + g2x
    ny = g1y + g2y
    nrm = math.hypot(nx, ny)
    if nrm < 1e-9:
        nx = float(bx - ax)
        ny = float(by - ay)
        nrm = math.hypot(nx, ny)
    nx /= nrm
    ny /= nrm
    k = int(round(2.0 * PROFILE_REACH / PROFILE_STEP)) + 1
    prof = np.empty(k)
    for i in range(k):
        t = -PROFILE_REACH + i * PROFILE_STEP
        prof[i] = _bilinear(gray, mx + t * nx, my + t * ny)
    if abs(prof[k - 1] - prof[0]) < MIN_CONTRAST:
        return mx, my
    mid = 0.5 * (prof[0] + prof[k - 1])
    best = 1e9
    tbest = 0.0
    for i in range(k - 1):
        d0 = prof[i] - mid
        d1 = prof[i + 1] - mid
        if (d0 <= 0.0 < d1) or (d1 <= 0.0 < d0) or (d0 == 0.0 and d1 == 0.0):
            s = 0.5 if d1 == d0 else d0 / (d0 - d1)
            t = -PROFILE_REACH + (i + s) * PROFILE_STEP
            if abs(t) < best:
                best = abs(t)
                tbest = t
    if best > MAX_EDGE_OFFSET:
        return mx, my
    return mx + tbest * nx, my + tbest * ny


@njit(cache=True, nogil=True)
def ring_edges(gray, black, x, y, dx, dy, pts, rising):
    """Locate the 4 boundary crossings on one ring, relative to (x, y).

    Fills ``pts`` (4, 2) and ``rising`` (4,) in clockwise order starting
    at the first white->black transition. Returns False unless the ring
    has exactly 4 transitions.
    """
    n = dx.shape[0]
    idx = np.empty(4, np.int64)
    cnt = 0
    for j in range(n):
        j1 = (j + 1) % n
        if black[y + dy[j], x + dx[j]] != black[y + dy[j1], x + dx[j1]]:
            if cnt < 4:
                idx[cnt] = j
            cnt += 1
    if cnt != 4:
        return False
    start = 0
    if black[y + dy[idx[0]], x + dx[idx[0]]] != 0:
        start = 1  # first transition leaves black; begin at the next one
    for k in range(4):
        j = idx[(start + k) % 4]
        j1 = (j + 1) % n
        ex, ey = subpixel_edge(gray, x + dx[j], y + dy[j], x + dx[j1], y + dy[j1])
        pts[k, 0] = ex - x
        pts[k, 1] = ey - y
        rising[k] = black[y + dy[j], x + dx[j]] == 0
    return True


@njit(cache=True, nogil=True)
def _angdist(a, b):
    d = abs(a - b) % (2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


@njit(cache=True, nogil=True)
def align_rings(pts):
    """Rotate the edge order of rings 1 and 2 (by 0 or 2) to best match ring 0."""
    ref = np.empty(4)
    for k in range(4):
        ref[k] = math.atan2(pts[0, k, 1], pts[0, k, 0])
    tmp = np.empty((4, 2))
    for r in range(1, pts.shape[0]):
        c0 = 0.0
        c2 = 0.0
        for k in range(4):
            c0 += _angdist(ref[k], math.atan2(pts[r, k, 1], pts[r, k, 0]))
            k2 = (k + 2) % 4
            c2 += _angdist(ref[k], math.atan2(pts[r, k2, 1], pts[r, k2, 0]))
        if c2 < c0:
            for k in range(4):
                tmp[k, 0] = pts[r, (k + 2) % 4, 0]
                tmp[k, 1] = pts[r, (k + 2) % 4, 1]
            for k in range(4):
                pts[r, k, 0] = tmp[k, 0]
                pts[r, k, 1] = tmp[k, 1]


@njit(cache=True, nogil=True)
def _fit_line(p0x, p0y, p1x, p1y, p2x, p2y, quadratic):
    """Line through three radially ordered points: (point, unit direction
    pointing outward). Linear mode is the total-least-squares line;
    quadratic mode is the tangent at the innermost point of the
    interpolating quadratic."""
    if quadratic:
        cx, cy = p0x, p0y
        ux = 0.5 * (-3.0 * p0x + 4.0 * p1x - p2x)
        uy = 0.5 * (-3.0 * p0y + 4.0 * p1y - p2y)
    else:
        cx = (p0x + p1x + p2x) / 3.0
        cy = (p0y + p1y + p2y) / 3.0
        sxx = (p0x - cx) ** 2 + (p1x - cx) ** 2 + (p2x - cx) ** 2
        syy = (p0y - cy) ** 2 + (p1y - cy) ** 2 + (p2y - cy) ** 2
        sxy = (p0x - cx) * (p0y - cy) + (p1x - cx) * (p1y - cy) + (p2x - cx) * (p2y - cy)
        th = 0.5 * math.atan2(2.0 * sxy, sxx - syy)
        ux = math.cos(th)
        uy = math.sin(th)
        if ux * (p2x - p0x) + uy * (p2y - p0y) < 0.0:
            ux = -ux
            uy = -uy
    nrm = math.hypot(ux, uy)
    if nrm < 1e-12:
        return cx, cy, 1.0, 0.0, False
    return cx, cy, ux / nrm, uy / nrm, True


@njit(cache=True, nogil=True)
def edge_lines(pts, quadratic, lines):
    """Fit the 4 edge lines; ``lines`` (4, 4) = (cx, cy, ux, uy)."""
    for k in range(4):
        cx, cy, ux, uy, ok = _fit_line(
            pts[0, k, 0], pts[0, k, 1], pts[1, k, 0], pts[1, k, 1], pts[2, k, 0], pts[2, k, 1], quadratic
        )
        if not ok:
            return False
        lines[k, 0] = cx
        lines[k, 1] = cy
        lines[k, 2] = ux
        lines[k, 3] = uy
    return True


@njit(cache=True, nogil=True)
def _curve_at_radius(pts, k, qx, qy, rho, quadratic):
    """Point on edge curve ``k`` at distance ``rho`` from (qx, qy), on the
    outward branch. The curve is the line or quadratic through the edge's
    three ring points."""
    p0x, p0y = pts[0, k, 0], pts[0, k, 1]
    p1x, p1y = pts[1, k, 0], pts[1, k, 1]
    p2x, p2y = pts[2, k, 0], pts[2, k, 1]
    if quadratic:
        d1x, d1y = p1x - p0x, p1y - p0y
        d2x, d2y = p2x - 2.0 * p1x + p0x, p2y - 2.0 * p1y + p0y
        t = rho - REF_RADII[0]
        for _ in range(20):
            cx = p0x + t * d1x + 0.5 * t * (t - 1.0) * d2x - qx
            cy = p0y + t * d1y + 0.5 * t * (t - 1.0) * d2y - qy
            vx = d1x + (t - 0.5) * d2x
            vy = d1y + (t - 0.5) * d2y
            f = cx * cx + cy * cy - rho * rho
            df = 2.0 * (cx * vx + cy * vy)
            if abs(df) < 1e-12:
                return False, 0.0, 0.0
            step = f / df
            t -= step
            if abs(step) < 1e-10:
                break
        if abs(t) > 6.0:
            return False, 0.0, 0.0
        return (
            True,
            p0x + t * d1x + 0.5 * t * (t - 1.0) * d2x,
            p0y + t * d1y + 0.5 * t * (t - 1.0) * d2y,
        )
    cx, cy, ux, uy, ok = _fit_line(p0x, p0y, p1x, p1y, p2x, p2y, False)
    if not ok:
        return False, 0.0, 0.0
    ox = cx - qx
    oy = cy - qy
    b = ox * ux + oy * uy
    disc = b * b - (ox * ox + oy * oy) + rho * rho
    if disc < 0.0:
        return False, 0.0, 0.0
    t = -b + math.sqrt(disc)
    return True, cx + t * ux, cy + t * uy


REFINE_ITERATIONS = 4


@njit(cache=True, nogil=True)
def _centerline_step(pts, edges, qx, qy, quadratic):
    """One least-squares update of the corner from the 4 sector centerlines
    sampled on circles of radius 3/4/5 around (qx, qy)."""
    n00 = 0.0
    n01 = 0.0
    n11 = 0.0
    v0 = 0.0
    v1 = 0.0
    spread = 0.0
    dirs = np.empty((4, 2))
    on = np.empty((4, 3, 2))
    for k in range(4):
        for r in range(3):
            ok, ex, ey = _curve_at_radius(pts, k, qx, qy, REF_RADII[r], quadratic)
            if not ok:
                return False, qx, qy, 0.0
            on[k, r, 0] = ex
            on[k, r, 1] = ey
    for s in range(4):
        e = (s + 1) % 4
        mx = np.empty(3)
        my = np.empty(3)
        for r in range(3):
            mx[r] = 0.5 * (on[s, r, 0] + on[e, r, 0])
            my[r] = 0.5 * (on[s, r, 1] + on[e, r, 1])
        cx, cy, ux, uy, ok = _fit_line(mx[0], my[0], mx[1], my[1], mx[2], my[2], quadratic)
        if not ok:
            return False, qx, qy, 0.0
        dirs[s, 0] = ux
        dirs[s, 1] = uy
        nx = -uy
        ny = ux
        # Chord midpoints sit near q + (I - M/2)(corner - q) + rho * bisector,
        # M = sum of the sector's edge direction outer products.
        a1x, a1y = edges[s, 2], edges[s, 3]
        a2x, a2y = edges[e, 2], edges[e, 3]
        m00 = a1x * a1x + a2x * a2x
        m01 = a1x * a1y + a2x * a2y
        m11 = a1y * a1y + a2y * a2y
        rx = nx * (1.0 - 0.5 * m00) - ny * 0.5 * m01
        ry = -nx * 0.5 * m01 + ny * (1.0 - 0.5 * m11)
        b = nx * (cx - qx) + ny * (cy - qy)
        n00 += rx * rx
        n01 += rx * ry
        n11 += ry * ry
        v0 += rx * b
        v1 += ry * b
    for i in range(4):
        for j in range(i + 1, 4):
            spread = max(spread, abs(dirs[i, 0] * dirs[j, 1] - dirs[i, 1] * dirs[j, 0]))
    det = n00 * n11 - n01 * n01
    if spread < PARALLEL_SIN or abs(det) < 1e-12:
        return False, qx, qy, spread
    return True, qx + (n11 * v0 - n01 * v1) / det, qy + (n00 * v1 - n01 * v0) / det, spread


@njit(cache=True, nogil=True)
def midpoint_solve(pts, quadratic):
    """Corner from the 4 sector centerlines, each fitted through the
    midpoints of its two edges on circles of radius 3/4/5. The circles are
    re-centered on the running estimate. Returns (ok, qx, qy) relative to
    the ring center."""
    edges = np.empty((4, 4))
    if not edge_lines(pts, quadratic, edges):
        return False, 0.0, 0.0
    qx = 0.0
    qy = 0.0
    for _ in range(REFINE_ITERATIONS):
        ok, qx, qy, _spread = _centerline_step(pts, edges, qx, qy, quadratic)
        if not ok or math.hypot(qx, qy) > MAX_SHIFT + 1.0:
            return False, qx, qy
    if math.hypot(qx, qy) > MAX_SHIFT:
        return False, qx, qy
    return True, qx, qy


@njit(cache=True, nogil=True)
def _intersect(l1, l2):
    cross = l1[2] * l2[3] - l1[3] * l2[2]
    if abs(cross) < PARALLEL_SIN:
        return False, 0.0, 0.0
    dx = l2[0] - l1[0]
    dy = l2[1] - l1[1]
    t = (dx * l2[3] - dy * l2[2]) / cross
    return True, l1[0] + t * l1[2], l1[1] + t * l1[3]


@njit(cache=True, nogil=True)
def edgepoint_solve(pts, quadratic):
    """Midpoint of the two black-sector cusps (edge line intersections)."""
    edges = np.empty((4, 4))
    if not edge_lines(pts, quadratic, edges):
        return False, 0.0, 0.0
    ok0, ax, ay = _intersect(edges[0], edges[1])
    ok1, bx, by = _intersect(edges[2], edges[3])
    if not (ok0 and ok1):
        return False, 0.0, 0.0
    qx = 0.5 * (ax + bx)
    qy = 0.5 * (ay + by)
    if math.hypot(qx, qy) > MAX_SHIFT:
        return False, qx, qy
    return True, qx, qy


@njit(cache=True, nogil=True)
def collect_edges(gray, black, x, y, dx0, dy0, dx1, dy1, dx2, dy2, pts, rising):
    if not ring_edges(gray, black, x, y, dx0, dy0, pts[0], rising[0]):
        return False
    if not ring_edges(gray, black, x, y, dx1, dy1, pts[1], rising[1]):
        return False
    if not ring_edges(gray, black, x, y, dx2, dy2, pts[2], rising[2]):
        return False
    align_rings(pts)
    return True


@njit(cache=True, nogil=True)
def _refine_many(gray, black, xs, ys, dx0, dy0, dx1, dy1, dx2, dy2, quadratic, out_x, out_y, out_m, i0, i1):
    pts = np.empty((3, 4, 2))
    rising = np.empty((3, 4), np.bool_)
    h, w = gray.shape
    for i in range(i0, i1):
        x = xs[i]
        y = ys[i]
        out_x[i] = x
        out_y[i] = y
        out_m[i] = UNREFINED
        if x < 7 or y < 7 or x >= w - 7 or y >= h - 7:
            continue
        if not collect_edges(gray, black, x, y, dx0, dy0, dx1, dy1, dx2, dy2, pts, rising):
            continue
        ok, qx, qy = midpoint_solve(pts, quadratic)
        if ok:
            out_x[i] = x + qx
            out_y[i] = y + qy
            out_m[i] = MIDPOINT
            continue
        ok, qx, qy = edgepoint_solve(pts, quadratic)
        if ok:
            out_x[i] = x + qx
            out_y[i] = y + qy
            out_m[i] = EDGEPOINT


def refine_many(gray, black, xs, ys, quadratic, out_x, out_y, out_m, i0, i1):
    (dx0, dy0), (dx1, dy1), (dx2, dy2) = REF_RINGS
    _refine_many(gray, black, xs, ys, dx0, dy0, dx1, dy1, dx2, dy2, quadratic, out_x, out_y, out_m, i0, i1)
