"""Pure-Python kernels, API-identical to the compiled extension.

Every function here mirrors its Cython twin operation-for-operation: the
same random stream (splitmix64), the same order of floating-point
operations, the same tie-breaking scans.  With a move-count budget the two
backends therefore produce bit-identical results; only throughput differs.
"""

from math import sqrt
from time import monotonic

_MASK64 = (1 << 64) - 1


def _mix64(state):
    """Advance a splitmix64 state; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def tour_cost(cost, seq):
    """Length of the closed tour `seq` (open form, implicit return edge)."""
    C = cost
    total = 0.0
    for k in range(len(seq) - 1):
        total = total + C[seq[k]][seq[k + 1]]
    total = total + C[seq[-1]][seq[0]]
    return total


def _as_rows(cost):
    # list-of-lists indexing is much faster than ndarray scalar indexing here
    return cost.tolist() if hasattr(cost, "tolist") else cost


def h1_refine(cost, seq, seed, max_moves, time_limit):
    """Random pair-swap refinement. Returns (seq, cost, attempted, accepted, trace)."""
    C = _as_rows(cost)
    s = list(seq)
    N = len(s) - 1
    cur = tour_cost(C, s)
    trace = [(0.0, cur)]
    state = seed & _MASK64
    start = monotonic()
    attempted = 0
    accepted = 0
    while N >= 2 and attempted < max_moves:
        if (attempted & 255) == 0 and attempted > 0:
            if monotonic() - start >= time_limit:
                break
        state, z = _mix64(state)
        i = 1 + z % N
        state, z = _mix64(state)
        j = 1 + z % N
        attempted += 1
        if i == j:
            continue
        if i > j:
            i, j = j, i
        a = s[i - 1]
        b = s[i]
        d = s[j - 1]
        e = s[j]
        f = s[j + 1] if j < N else s[0]
        if j == i + 1:
            delta = (C[a][e] + C[b][f]) - (C[a][b] + C[e][f])
        else:
            c2 = s[i + 1]
            delta = (C[a][e] + C[e][c2] + C[d][b] + C[b][f]) - (
                C[a][b] + C[b][c2] + C[d][e] + C[e][f]
            )
        if delta < 0.0:
            s[i] = e
            s[j] = b
            cur = cur + delta
            accepted += 1
            trace.append((monotonic() - start, cur))
    return s, tour_cost(C, s), attempted, accepted, trace


def h2_refine(cost, seq, seed, max_moves, time_limit):
    """Remove-and-reinsert refinement. Returns (seq, cost, attempted, accepted, trace)."""
    C = _as_rows(cost)
    s = list(seq)
    N = len(s) - 1
    cur = tour_cost(C, s)
    trace = [(0.0, cur)]
    state = seed & _MASK64
    start = monotonic()
    attempted = 0
    accepted = 0
    while N >= 2 and attempted < max_moves:
        if (attempted & 255) == 0 and attempted > 0:
            if monotonic() - start >= time_limit:
                break
        state, z = _mix64(state)
        i = 1 + z % N
        state, z = _mix64(state)
        j = 1 + z % N
        attempted += 1
        if i == j:
            continue
        x = s[i]
        p = s[i - 1]
        q = s[i + 1] if i < N else s[0]
        rem = (C[p][x] + C[x][q]) - C[p][q]
        # neighbours at insertion slot j of the list with position i removed
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
        ins = (C[u][x] + C[x][v]) - C[u][v]
        delta = ins - rem
        if delta < 0.0:
            s.pop(i)
            s.insert(j, x)
            cur = cur + delta
            accepted += 1
            trace.append((monotonic() - start, cur))
    return s, tour_cost(C, s), attempted, accepted, trace


def h3_refine(cost, seq, seed, max_moves, time_limit):
    """Adjacent-pair flip refinement. Returns (seq, cost, attempted, accepted, trace)."""
    C = _as_rows(cost)
    s = list(seq)
    N = len(s) - 1
    cur = tour_cost(C, s)
    trace = [(0.0, cur)]
    state = seed & _MASK64
    start = monotonic()
    attempted = 0
    accepted = 0
    while N >= 2 and attempted < max_moves:
        if (attempted & 255) == 0 and attempted > 0:
            if monotonic() - start >= time_limit:
                break
        state, z = _mix64(state)
        i = 1 + z % (N - 1)
        attempted += 1
        a = s[i - 1]
        b = s[i]
        e = s[i + 1]
        f = s[i + 2] if i + 1 < N else s[0]
        delta = (C[a][e] + C[b][f]) - (C[a][b] + C[e][f])
        if delta < 0.0:
            s[i] = e
            s[i + 1] = b
            cur = cur + delta
            accepted += 1
            trace.append((monotonic() - start, cur))
    return s, tour_cost(C, s), attempted, accepted, trace


def h4_refine(cost, seq, px, py, par_tol, max_passes):
    """Deterministic crossing-removal sweep (2-opt on non-parallel edge pairs).

    Returns (seq, cost, checks, accepted, passes).
    """
    C = _as_rows(cost)
    X = px.tolist() if hasattr(px, "tolist") else list(px)
    Y = py.tolist() if hasattr(py, "tolist") else list(py)
    s = list(seq)
    N = len(s) - 1
    checks = 0
    accepted = 0
    passes = 0
    improved = True
    while improved and passes < max_passes:
        improved = False
        passes += 1
        i = 0
        while i <= N - 2:
            for j in range(i + 1, N):
                checks += 1
                a = s[i]
                b = s[i + 1]
                d = s[j]
                e = s[j + 1]
                ux = X[b] - X[a]
                uy = Y[b] - Y[a]
                vx = X[e] - X[d]
                vy = Y[e] - Y[d]
                cr = ux * vy - uy * vx
                lim = par_tol * sqrt(ux * ux + uy * uy) * sqrt(vx * vx + vy * vy)
                if abs(cr) <= lim:
                    continue
                delta = (C[a][d] + C[b][e]) - (C[a][b] + C[d][e])
                if delta < 0.0:
                    lo = i + 1
                    hi = j
                    while lo < hi:
                        s[lo], s[hi] = s[hi], s[lo]
                        lo += 1
                        hi -= 1
                    accepted += 1
                    improved = True
                    break
            i += 1
    return s, tour_cost(C, s), checks, accepted, passes


def _seg_seg_closest(p1x, p1y, q1x, q1y, p2x, p2y, q2x, q2y):
    """Squared distance and witness points between two segments.

    Among tied minimisers this selects the lowest parameter on the first
    segment, then on the second (needed for stable projection points).
    """
    d1x = q1x - p1x
    d1y = q1y - p1y
    d2x = q2x - p2x
    d2y = q2y - p2y
    rx = p1x - p2x
    ry = p1y - p2y
    a = d1x * d1x + d1y * d1y
    e = d2x * d2x + d2y * d2y
    f = d2x * rx + d2y * ry
    c = d1x * rx + d1y * ry
    b = d1x * d2x + d1y * d2y
    denom = a * e - b * b
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
    cx1 = p1x + d1x * s
    cy1 = p1y + d1y * s
    cx2 = p2x + d2x * t
    cy2 = p2y + d2y * t
    dx = cx1 - cx2
    dy = cy1 - cy2
    return dx * dx + dy * dy, cx1, cy1, cx2, cy2


def polygon_pair_closest(av, bv):
    """Closest boundary points of two polygons (vertex arrays, implicit closure).

    Returns (distance, ax, ay, bx, by); scans segments of `av` in order,
    then `bv`, keeping the first minimiser.
    """
    A = av.tolist() if hasattr(av, "tolist") else av
    B = bv.tolist() if hasattr(bv, "tolist") else bv
    na = len(A)
    nb = len(B)
    best = float("inf")
    rax = ray = rbx = rby = 0.0
    for i in range(na):
        p1 = A[i]
        q1 = A[i + 1] if i + 1 < na else A[0]
        for j in range(nb):
            p2 = B[j]
            q2 = B[j + 1] if j + 1 < nb else B[0]
            d2, cx1, cy1, cx2, cy2 = _seg_seg_closest(
                p1[0], p1[1], q1[0], q1[1], p2[0], p2[1], q2[0], q2[1]
            )
            if d2 < best:
                best = d2
                rax = cx1
                ray = cy1
                rbx = cx2
                rby = cy2
    return sqrt(best), rax, ray, rbx, rby


def point_polygon_closest(px_, py_, bv):
    """Closest point on a polygon boundary to a point. Returns (distance, bx, by)."""
    B = bv.tolist() if hasattr(bv, "tolist") else bv
    nb = len(B)
    best = float("inf")
    rbx = rby = 0.0
    for j in range(nb):
        p2 = B[j]
        q2 = B[j + 1] if j + 1 < nb else B[0]
        d2x = q2[0] - p2[0]
        d2y = q2[1] - p2[1]
        e = d2x * d2x + d2y * d2y
        t = ((px_ - p2[0]) * d2x + (py_ - p2[1]) * d2y) / e
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        cx = p2[0] + d2x * t
        cy = p2[1] + d2y * t
        dx = px_ - cx
        dy = py_ - cy
        d2 = dx * dx + dy * dy
        if d2 < best:
            best = d2
            rbx = cx
            rby = cy
    return sqrt(best), rbx, rby
