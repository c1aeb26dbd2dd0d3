# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the tour-refinement and boundary-distance hot loops.

Mirrors ``fallback.py`` operation-for-operation (same splitmix64 stream,
same floating-point evaluation order, same tie-break scans) so that both
backends are bit-identical under a move-count budget.  Built without
-ffast-math on purpose.
"""

from libc.stdlib cimport malloc, free
from libc.math cimport sqrt, fabs

from time import monotonic


cdef inline unsigned long long _next(unsigned long long* state) noexcept nogil:
    state[0] = state[0] + 0x9E3779B97F4A7C15u
    cdef unsigned long long z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9u
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBu
    z = z ^ (z >> 31)
    return z


cdef long long* _to_buf(seq, Py_ssize_t* n_out) except NULL:
    cdef Py_ssize_t n = len(seq)
    cdef long long* s = <long long*> malloc(n * sizeof(long long))
    if s == NULL:
        raise MemoryError()
    cdef Py_ssize_t k
    for k in range(n):
        s[k] = seq[k]
    n_out[0] = n
    return s


cdef list _to_list(long long* s, Py_ssize_t n):
    cdef Py_ssize_t k
    return [s[k] for k in range(n)]


cdef double _cost_of(double[:, ::1] C, long long* s, Py_ssize_t n) noexcept nogil:
    cdef double total = 0.0
    cdef Py_ssize_t k
    for k in range(n - 1):
        total = total + C[s[k], s[k + 1]]
    total = total + C[s[n - 1], s[0]]
    return total


def tour_cost(double[:, ::1] cost, seq):
    """Length of the closed tour `seq` (open form, implicit return edge)."""
    cdef Py_ssize_t n
    cdef long long* s = _to_buf(seq, &n)
    cdef double total = _cost_of(cost, s, n)
    free(s)
    return total


def h1_refine(double[:, ::1] cost, seq, unsigned long long seed,
              long long max_moves, double time_limit):
    """Random pair-swap refinement. Returns (seq, cost, attempted, accepted, trace)."""
    cdef Py_ssize_t n
    cdef long long* s = _to_buf(seq, &n)
    cdef Py_ssize_t N = n - 1
    cdef double cur = _cost_of(cost, s, n)
    trace = [(0.0, cur)]
    cdef unsigned long long state = seed
    cdef double start = monotonic()
    cdef long long attempted = 0, accepted = 0
    cdef unsigned long long z
    cdef Py_ssize_t i, j, tmp
    cdef long long a, b, d, e, f, c2
    cdef double delta
    while N >= 2 and attempted < max_moves:
        if (attempted & 255) == 0 and attempted > 0:
            if monotonic() - start >= time_limit:
                break
        z = _next(&state)
        i = 1 + <Py_ssize_t>(z % <unsigned long long>N)
        z = _next(&state)
        j = 1 + <Py_ssize_t>(z % <unsigned long long>N)
        attempted += 1
        if i == j:
            continue
        if i > j:
            tmp = i
            i = j
            j = tmp
        a = s[i - 1]
        b = s[i]
        d = s[j - 1]
        e = s[j]
        f = s[j + 1] if j < N else s[0]
        if j == i + 1:
            delta = (cost[a, e] + cost[b, f]) - (cost[a, b] + cost[e, f])
        else:
            c2 = s[i + 1]
            delta = (cost[a, e] + cost[e, c2] + cost[d, b] + cost[b, f]) - (
                cost[a, b] + cost[b, c2] + cost[d, e] + cost[e, f]
            )
        if delta < 0.0:
            s[i] = e
            s[j] = b
            cur = cur + delta
            accepted += 1
            trace.append((monotonic() - start, cur))
    out = _to_list(s, n)
    cdef double final = _cost_of(cost, s, n)
    free(s)
    return out, final, attempted, accepted, trace


def h2_refine(double[:, ::1] cost, seq, unsigned long long seed,
              long long max_moves, double time_limit):
    """Remove-and-reinsert refinement. Returns (seq, cost, attempted, accepted, trace)."""
    cdef Py_ssize_t n
    cdef long long* s = _to_buf(seq, &n)
    cdef Py_ssize_t N = n - 1
    cdef double cur = _cost_of(cost, s, n)
    trace = [(0.0, cur)]
    cdef unsigned long long state = seed
    cdef double start = monotonic()
    cdef long long attempted = 0, accepted = 0
    cdef unsigned long long z
    cdef Py_ssize_t i, j, k
    cdef long long x, p, q, u, v
    cdef double rem, ins, delta
    while N >= 2 and attempted < max_moves:
        if (attempted & 255) == 0 and attempted > 0:
            if monotonic() - start >= time_limit:
                break
        z = _next(&state)
        i = 1 + <Py_ssize_t>(z % <unsigned long long>N)
        z = _next(&state)
        j = 1 + <Py_ssize_t>(z % <unsigned long long>N)
        attempted += 1
        if i == j:
            continue
        x = s[i]
        p = s[i - 1]
        q = s[i + 1] if i < N else s[0]
        rem = (cost[p, x] + cost[x, q]) - cost[p, q]
        if j - 1 < i:
            u = s[j - 1]
        else:
            u = s[j]
        if j == N:
            v = s[0]
        elif j < i:
            v = s[j]
        else:
            v = s[j + 1]
        ins = (cost[u, x] + cost[x, v]) - cost[u, v]
        delta = ins - rem
        if delta < 0.0:
            if j > i:
                for k in range(i, j):
                    s[k] = s[k + 1]
                s[j] = x
            else:
                for k in range(i, j, -1):
                    s[k] = s[k - 1]
                s[j] = x
            cur = cur + delta
            accepted += 1
            trace.append((monotonic() - start, cur))
    out = _to_list(s, n)
    cdef double final = _cost_of(cost, s, n)
    free(s)
    return out, final, attempted, accepted, trace


def h3_refine(double[:, ::1] cost, seq, unsigned long long seed,
              long long max_moves, double time_limit):
    """Adjacent-pair flip refinement. Returns (seq, cost, attempted, accepted, trace)."""
    cdef Py_ssize_t n
    cdef long long* s = _to_buf(seq, &n)
    cdef Py_ssize_t N = n - 1
    cdef double cur = _cost_of(cost, s, n)
    trace = [(0.0, cur)]
    cdef unsigned long long state = seed
    cdef double start = monotonic()
    cdef long long attempted = 0, accepted = 0
    cdef unsigned long long z
    cdef Py_ssize_t i
    cdef long long a, b, e, f
    cdef double delta
    while N >= 2 and attempted < max_moves:
        if (attempted & 255) == 0 and attempted > 0:
            if monotonic() - start >= time_limit:
                break
        z = _next(&state)
        i = 1 + <Py_ssize_t>(z % <unsigned long long>(N - 1))
        attempted += 1
        a = s[i - 1]
        b = s[i]
        e = s[i + 1]
        f = s[i + 2] if i + 1 < N else s[0]
        delta = (cost[a, e] + cost[b, f]) - (cost[a, b] + cost[e, f])
        if delta < 0.0:
            s[i] = e
            s[i + 1] = b
            cur = cur + delta
            accepted += 1
            trace.append((monotonic() - start, cur))
    out = _to_list(s, n)
    cdef double final = _cost_of(cost, s, n)
    free(s)
    return out, final, attempted, accepted, trace


def h4_refine(double[:, ::1] cost, seq, double[::1] px, double[::1] py,
              double par_tol, long long max_passes):
    """Deterministic crossing-removal sweep (2-opt on non-parallel edge pairs).

    Returns (seq, cost, checks, accepted, passes).
    """
    cdef Py_ssize_t n
    cdef long long* s = _to_buf(seq, &n)
    cdef Py_ssize_t N = n - 1
    cdef long long checks = 0, accepted = 0, passes = 0
    cdef bint improved = True
    cdef bint found
    cdef Py_ssize_t i, j, lo, hi
    cdef long long a, b, d, e, swp
    cdef double ux, uy, vx, vy, cr, lim, delta
    while improved and passes < max_passes:
        improved = False
        passes += 1
        i = 0
        while i <= N - 2:
            found = False
            for j in range(i + 1, N):
                checks += 1
                a = s[i]
                b = s[i + 1]
                d = s[j]
                e = s[j + 1]
                ux = px[b] - px[a]
                uy = py[b] - py[a]
                vx = px[e] - px[d]
                vy = py[e] - py[d]
                cr = ux * vy - uy * vx
                lim = par_tol * sqrt(ux * ux + uy * uy) * sqrt(vx * vx + vy * vy)
                if fabs(cr) <= lim:
                    continue
                delta = (cost[a, d] + cost[b, e]) - (cost[a, b] + cost[d, e])
                if delta < 0.0:
                    lo = i + 1
                    hi = j
                    while lo < hi:
                        swp = s[lo]
                        s[lo] = s[hi]
                        s[hi] = swp
                        lo += 1
                        hi -= 1
                    accepted += 1
                    found = True
                    break
            i += 1
            if found:
                improved = True
    out = _to_list(s, n)
    cdef double final = _cost_of(cost, s, n)
    free(s)
    return out, final, checks, accepted, passes


cdef inline double _seg_seg(double p1x, double p1y, double q1x, double q1y,
                            double p2x, double p2y, double q2x, double q2y,
                            double* w) noexcept nogil:
    cdef double d1x = q1x - p1x
    cdef double d1y = q1y - p1y
    cdef double d2x = q2x - p2x
    cdef double d2y = q2y - p2y
    cdef double rx = p1x - p2x
    cdef double ry = p1y - p2y
    cdef double a = d1x * d1x + d1y * d1y
    cdef double e = d2x * d2x + d2y * d2y
    cdef double f = d2x * rx + d2y * ry
    cdef double c = d1x * rx + d1y * ry
    cdef double b = d1x * d2x + d1y * d2y
    cdef double denom = a * e - b * b
    cdef double s, t
    if denom > 0.0:
        s = (b * f - c * e) / denom
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
    else:
        s = 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = -c / a
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
    elif t > 1.0:
        t = 1.0
        s = (b - c) / a
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
    w[0] = p1x + d1x * s
    w[1] = p1y + d1y * s
    w[2] = p2x + d2x * t
    w[3] = p2y + d2y * t
    cdef double dx = w[0] - w[2]
    cdef double dy = w[1] - w[3]
    return dx * dx + dy * dy


def polygon_pair_closest(double[:, ::1] av, double[:, ::1] bv):
    """Closest boundary points of two polygons (vertex arrays, implicit closure).

    Returns (distance, ax, ay, bx, by); scans segments of `av` in order,
    then `bv`, keeping the first minimiser.
    """
    cdef Py_ssize_t na = av.shape[0]
    cdef Py_ssize_t nb = bv.shape[0]
    cdef double best = float("inf")
    cdef double rax = 0.0, ray = 0.0, rbx = 0.0, rby = 0.0
    cdef double w[4]
    cdef double d2
    cdef Py_ssize_t i, j, i2, j2
    for i in range(na):
        i2 = i + 1 if i + 1 < na else 0
        for j in range(nb):
            j2 = j + 1 if j + 1 < nb else 0
            d2 = _seg_seg(av[i, 0], av[i, 1], av[i2, 0], av[i2, 1],
                          bv[j, 0], bv[j, 1], bv[j2, 0], bv[j2, 1], w)
            if d2 < best:
                best = d2
                rax = w[0]
                ray = w[1]
                rbx = w[2]
                rby = w[3]
    return sqrt(best), rax, ray, rbx, rby


def point_polygon_closest(double px_, double py_, double[:, ::1] bv):
    """Closest point on a polygon boundary to a point. Returns (distance, bx, by)."""
    cdef Py_ssize_t nb = bv.shape[0]
    cdef double best = float("inf")
    cdef double rbx = 0.0, rby = 0.0
    cdef Py_ssize_t j, j2
    cdef double d2x, d2y, e, t, cx, cy, dx, dy, d2
    for j in range(nb):
        j2 = j + 1 if j + 1 < nb else 0
        d2x = bv[j2, 0] - bv[j, 0]
        d2y = bv[j2, 1] - bv[j, 1]
        e = d2x * d2x + d2y * d2y
        t = ((px_ - bv[j, 0]) * d2x + (py_ - bv[j, 1]) * d2y) / e
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        cx = bv[j, 0] + d2x * t
        cy = bv[j, 1] + d2y * t
        dx = px_ - cx
        dy = py_ - cy
        d2 = dx * dx + dy * dy
        if d2 < best:
            best = d2
            rbx = cx
            rby = cy
    return sqrt(best), rbx, rby
