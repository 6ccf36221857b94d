"""Pure-Python hot kernels.

Reference implementation for the compiled extension in `_native.pyx`.  The two
must perform the same float64 operations in the same order so that either
backend produces identical trajectories; keep every arithmetic change in sync.

All angle arrays are expected unwrapped (continuous); output headings are
wrapped to [-pi, pi).
"""

import math

INF = math.inf

# rollout termination statuses
DONE = 0
HORIZON = 1
STALLED = 2

_STALL_SPEED = 0.02
_STALL_STEPS = 30  # 3 s at dt=0.1


def wrap_angle(a):
    """Wrap to [-pi, pi)."""
    return a - 2.0 * math.pi * math.floor((a + math.pi) / (2.0 * math.pi))


def obb_overlap(ax, ay, ah, ahl, ahw, bx, by, bh, bhl, bhw):
    """Separating-axis test for two oriented rectangles (half extents)."""
    dx = bx - ax
    dy = by - ay
    ra = math.hypot(ahl, ahw)
    rb = math.hypot(bhl, bhw)
    if dx * dx + dy * dy > (ra + rb) * (ra + rb):
        return False
    ca = math.cos(ah)
    sa = math.sin(ah)
    cb = math.cos(bh)
    sb = math.sin(bh)
    for k in range(4):
        if k == 0:
            ux, uy = ca, sa
        elif k == 1:
            ux, uy = -sa, ca
        elif k == 2:
            ux, uy = cb, sb
        else:
            ux, uy = -sb, cb
        d = abs(dx * ux + dy * uy)
        ea = ahl * abs(ca * ux + sa * uy) + ahw * abs(-sa * ux + ca * uy)
        eb = bhl * abs(cb * ux + sb * uy) + bhw * abs(-sb * ux + cb * uy)
        if d > ea + eb:
            return False
    return True


def first_collision(xa, ya, ha, va, ahl, ahw, xb, yb, hb, bhl, bhw,
                    b_offset, hold_b, speed_gate):
    """First index i where pose a[i] overlaps pose b[i + b_offset].

    With hold_b, b's last pose persists beyond its end (parked vehicle);
    otherwise the scan stops at b's end.  Overlaps while a moves slower than
    speed_gate are ignored (pass a negative gate for a strict scan).
    Returns -1 when collision-free.
    """
    na = len(xa)
    nb = len(xb)
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
        if obb_overlap(xa[i], ya[i], ha[i], ahl, ahw, xb[j], yb[j], hb[j], bhl, bhw):
            return i
    return -1


def segment_hits_convex(x1, y1, x2, y2, px, py):
    """True iff the open segment crosses the interior of a CCW convex polygon."""
    t0 = 0.0
    t1 = 1.0
    dx = x2 - x1
    dy = y2 - y1
    n = len(px)
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        ex = px[j] - px[i]
        ey = py[j] - py[i]
        nx = -ey  # inward normal for CCW winding
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


def _locate(arr, n, v):
    """Index of the segment containing v (binary search over sorted arr)."""
    lo = 0
    hi = n - 2
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


def _prof_interp(prof_s, prof_v, n, s):
    if s <= prof_s[0]:
        return prof_v[0]
    if s >= prof_s[n - 1]:
        return prof_v[n - 1]
    i = _locate(prof_s, n, s)
    span = prof_s[i + 1] - prof_s[i]
    f = (s - prof_s[i]) / span
    return prof_v[i] + f * (prof_v[i + 1] - prof_v[i])


def rollout(
    path_s, path_x, path_y, path_h, path_k,
    prof_s, prof_v,
    s0, v0, lat0, ramp_len,
    s_end, stop_at_end,
    dt, v_max, a_min, a_max, kp, lookahead,
    lead_front,  # (n_time, n_leads) arclength of each lead's rear face, INF when absent
    time_offset, ego_front,
    standoff, time_gap, acc_gain, guard_decel,
    stall_ok, max_steps,
    out,  # (max_steps, 5): x, y, heading, speed, accel
):
    """Closed-loop speed-profile rollout along a reference path.

    Proportional speed tracking of the profile, overridden by a constant
    time-gap cruise law plus a stopping-distance guard whenever a lead is
    ahead on the path.  Returns (steps_written, final_s, final_v, status).
    """
    n_path = len(path_s)
    n_prof = len(prof_s)
    n_time = len(lead_front)
    n_leads = lead_front.shape[1] if n_time > 0 else 0
    path_len = path_s[n_path - 1]

    s = s0
    v = v0
    stall = 0
    steps = 0
    status = HORIZON

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
            for j in range(n_leads):
                lf = lead_front[row, j]
                if lf == INF:
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
                x -= math.sin(h) * off
                y += math.cos(h) * off
        out[step, 0] = x
        out[step, 1] = y
        out[step, 2] = wrap_angle(h)
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
