# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of _pure.py.

Keep every float64 operation and its order in sync with the pure kernels:
both backends must produce identical trajectories.
"""

from libc.math cimport cos, sin, hypot, fabs, floor, INFINITY

DONE = 0
HORIZON = 1
STALLED = 2

cdef double PI = 3.141592653589793
cdef double _STALL_SPEED = 0.02
cdef int _STALL_STEPS = 30


cdef inline double _wrap(double a) nogil:
    return a - 2.0 * PI * floor((a + PI) / (2.0 * PI))


def wrap_angle(double a):
    """Wrap to [-pi, pi)."""
    return _wrap(a)


cdef inline bint _obb_overlap(double ax, double ay, double ah, double ahl, double ahw,
                              double bx, double by, double bh, double bhl, double bhw) nogil:
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double ra = hypot(ahl, ahw)
    cdef double rb = hypot(bhl, bhw)
    if dx * dx + dy * dy > (ra + rb) * (ra + rb):
        return False
    cdef double ca = cos(ah)
    cdef double sa = sin(ah)
    cdef double cb = cos(bh)
    cdef double sb = sin(bh)
    cdef double ux, uy, d, ea, eb
    cdef int k
    for k in range(4):
        if k == 0:
            ux = ca; uy = sa
        elif k == 1:
            ux = -sa; uy = ca
        elif k == 2:
            ux = cb; uy = sb
        else:
            ux = -sb; uy = cb
        d = fabs(dx * ux + dy * uy)
        ea = ahl * fabs(ca * ux + sa * uy) + ahw * fabs(-sa * ux + ca * uy)
        eb = bhl * fabs(cb * ux + sb * uy) + bhw * fabs(-sb * ux + cb * uy)
        if d > ea + eb:
            return False
    return True


def obb_overlap(double ax, double ay, double ah, double ahl, double ahw,
                double bx, double by, double bh, double bhl, double bhw):
    """Separating-axis test for two oriented rectangles (half extents)."""
    return bool(_obb_overlap(ax, ay, ah, ahl, ahw, bx, by, bh, bhl, bhw))


def first_collision(double[:] xa, double[:] ya, double[:] ha, double[:] va,
                    double ahl, double ahw,
                    double[:] xb, double[:] yb, double[:] hb,
                    double bhl, double bhw,
                    long b_offset, bint hold_b, double speed_gate):
    """First index i where pose a[i] overlaps pose b[i + b_offset]; -1 if none."""
    cdef Py_ssize_t na = xa.shape[0]
    cdef Py_ssize_t nb = xb.shape[0]
    cdef Py_ssize_t i, j
    for i in range(na):
        if va[i] <= speed_gate:
            continue
        j = i + b_offset
        if j >= nb:
            if not hold_b:
                return -1
            j = nb - 1
        if j < 0:
            continue
        if _obb_overlap(xa[i], ya[i], ha[i], ahl, ahw,
                        xb[j], yb[j], hb[j], bhl, bhw):
            return i
    return -1


def segment_hits_convex(double x1, double y1, double x2, double y2,
                        double[:] px, double[:] py):
    """True iff the open segment crosses the interior of a CCW convex polygon."""
    cdef double t0 = 0.0
    cdef double t1 = 1.0
    cdef double dx = x2 - x1
    cdef double dy = y2 - y1
    cdef Py_ssize_t n = px.shape[0]
    cdef Py_ssize_t i, j
    cdef double ex, ey, nx, ny, denom, num, tl, tu
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        ex = px[j] - px[i]
        ey = py[j] - py[i]
        nx = -ey
        ny = ex
        denom = nx * dx + ny * dy
        num = nx * (px[i] - x1) + ny * (py[i] - y1)
        if denom == 0.0:
            if -num <= 0.0:
                return False
        elif denom > 0.0:
            tl = num / denom
            if tl > t0:
                t0 = tl
        else:
            tu = num / denom
            if tu < t1:
                t1 = tu
        if t0 >= t1:
            return False
    return t1 - t0 > 1e-9 and t1 > 1e-9 and t0 < 1.0 - 1e-9


cdef inline Py_ssize_t _locate(double[:] arr, Py_ssize_t n, double v) nogil:
    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = n - 2
    cdef Py_ssize_t mid
    if v <= arr[0]:
        return 0
    if v >= arr[n - 1]:
        return n - 2
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if arr[mid] <= v:
            lo = mid
        else:
            hi = mid - 1
    return lo


cdef inline double _prof_interp(double[:] prof_s, double[:] prof_v,
                                Py_ssize_t n, double s) nogil:
    cdef Py_ssize_t i
    cdef double span, f
    if s <= prof_s[0]:
        return prof_v[0]
    if s >= prof_s[n - 1]:
        return prof_v[n - 1]
    i = _locate(prof_s, n, s)
    span = prof_s[i + 1] - prof_s[i]
    f = (s - prof_s[i]) / span
    return prof_v[i] + f * (prof_v[i + 1] - prof_v[i])


def rollout(double[:] path_s, double[:] path_x, double[:] path_y,
            double[:] path_h, double[:] path_k,
            double[:] prof_s, double[:] prof_v,
            double s0, double v0, double lat0, double ramp_len,
            double s_end, bint stop_at_end,
            double dt, double v_max, double a_min, double a_max,
            double kp, double lookahead,
            double[:, :] lead_front,
            long time_offset, double ego_front,
            double standoff, double time_gap, double acc_gain, double guard_decel,
            bint stall_ok, long max_steps,
            double[:, :] out):
    """Closed-loop speed-profile rollout along a reference path.

    Mirrors _pure.rollout; returns (steps_written, final_s, final_v, status).
    """
    cdef Py_ssize_t n_path = path_s.shape[0]
    cdef Py_ssize_t n_prof = prof_s.shape[0]
    cdef Py_ssize_t n_time = lead_front.shape[0]
    cdef Py_ssize_t n_leads = lead_front.shape[1] if n_time > 0 else 0
    cdef double path_len = path_s[n_path - 1]

    cdef double s = s0
    cdef double v = v0
    cdef int stall = 0
    cdef long steps = 0
    cdef int status = HORIZON

    cdef long step
    cdef Py_ssize_t row, i, jl
    cdef double vt, a, lf, gap, free, a_acc, v2, a_eff, s2
    cdef double span, f, x, y, h, run, off, vt_here
    cdef bint blocked

    for step in range(max_steps):
        vt = _prof_interp(prof_s, prof_v, n_prof, s + lookahead)
        a = kp * (vt - v)
        if a > a_max:
            a = a_max
        if a < a_min:
            a = a_min
        blocked = False
        if n_leads > 0:
            row = time_offset + step
            if row >= n_time:
                row = n_time - 1
            if row < 0:
                row = 0
            for jl in range(n_leads):
                lf = lead_front[row, jl]
                if lf == INFINITY:
                    continue
                gap = lf - s - ego_front
                if gap <= -2.0:
                    continue
                free = gap - standoff
                a_acc = acc_gain * (free - time_gap * v)
                if free < v * v / (2.0 * guard_decel):
                    a_acc = a_min
                if a_acc < a:
                    a = a_acc
                    blocked = True
        if a > a_max:
            a = a_max
        if a < a_min:
            a = a_min
        v2 = v + a * dt
        if v2 < 0.0:
            v2 = 0.0
        if v2 > v_max:
            v2 = v_max
        a_eff = (v2 - v) / dt
        s2 = s + 0.5 * (v + v2) * dt
        if s2 > path_len:
            s2 = path_len

        i = _locate(path_s, n_path, s2)
        span = path_s[i + 1] - path_s[i]
        f = (s2 - path_s[i]) / span if span > 0.0 else 0.0
        x = path_x[i] + f * (path_x[i + 1] - path_x[i])
        y = path_y[i] + f * (path_y[i + 1] - path_y[i])
        h = path_h[i] + f * (path_h[i + 1] - path_h[i])
        if lat0 != 0.0 and ramp_len > 0.0:
            run = s2 - s0
            if run < ramp_len:
                off = lat0 * (1.0 - run / ramp_len)
                x -= sin(h) * off
                y += cos(h) * off
        out[step, 0] = x
        out[step, 1] = y
        out[step, 2] = _wrap(h)
        out[step, 3] = v2
        out[step, 4] = a_eff
        steps = step + 1
        s = s2
        v = v2

        if stop_at_end:
            if v <= _STALL_SPEED and s >= s_end - 3.0:
                status = DONE
                break
        else:
            if s >= s_end - 1e-9:
                status = DONE
                break
        if not stall_ok:
            vt_here = _prof_interp(prof_s, prof_v, n_prof, s)
            if v < _STALL_SPEED and blocked and vt_here > 0.3 and s_end - s > 0.5:
                stall += 1
                if stall >= _STALL_STEPS:
                    status = STALLED
                    break
            else:
                stall = 0
    return steps, s, v, status
