"""Polyline reference paths: resampling, frames, curvature, projection.

A ReferencePath is the geometric backbone of every lane and maneuver: arrays
of arclength, position, unwrapped heading and curvature at ~PATH_STEP spacing.
Curvature uses the three-point circumcircle (Menger) estimate, which is exact
for points sampled on a circle.
"""

from __future__ import annotations

import math

import numpy as np

from .config import PATH_STEP
from . import kernels


def _dedupe(points: np.ndarray) -> np.ndarray:
    keep = [0]
    for i in range(1, len(points)):
        if np.hypot(*(points[i] - points[keep[-1]])) > 1e-9:
            keep.append(i)
    return points[keep]


def resample_polyline(points, step: float = PATH_STEP) -> np.ndarray:
    """Evenly respaced copy of a polyline (endpoints preserved)."""
    pts = _dedupe(np.asarray(points, dtype=float))
    if len(pts) < 2:
        raise ValueError("polyline needs at least 2 distinct points")
    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate(([0.0], np.cumsum(seg_len)))
    total = cum[-1]
    n = max(2, int(math.ceil(total / step)) + 1)
    s_new = np.linspace(0.0, total, n)
    x = np.interp(s_new, cum, pts[:, 0])
    y = np.interp(s_new, cum, pts[:, 1])
    return np.column_stack([x, y])


def menger_curvature(p0, p1, p2) -> float:
    """Signed inverse circumradius of three points (positive = left turn)."""
    ax, ay = p1[0] - p0[0], p1[1] - p0[1]
    bx, by = p2[0] - p0[0], p2[1] - p0[1]
    cross = ax * by - ay * bx
    la = math.hypot(ax, ay)
    lb = math.hypot(bx, by)
    lc = math.hypot(p2[0] - p1[0], p2[1] - p1[1])
    denom = la * lb * lc
    if denom < 1e-12:
        return 0.0
    return 2.0 * cross / denom


class ReferencePath:
    """Arclength-parameterized polyline with per-sample frame data."""

    __slots__ = ("s", "x", "y", "heading", "curvature", "length")

    def __init__(self, points, step: float = PATH_STEP):
        pts = resample_polyline(points, step)
        dx = np.diff(pts[:, 0])
        dy = np.diff(pts[:, 1])
        seg_len = np.hypot(dx, dy)
        self.s = np.concatenate(([0.0], np.cumsum(seg_len)))
        self.x = np.ascontiguousarray(pts[:, 0])
        self.y = np.ascontiguousarray(pts[:, 1])
        self.length = float(self.s[-1])

        seg_h = np.arctan2(dy, dx)
        # per-sample heading: average of adjacent segment tangents, unwrapped
        h = np.empty(len(pts))
        h[0] = seg_h[0]
        h[-1] = seg_h[-1]
        if len(seg_h) > 1:
            un = np.unwrap(seg_h)
            h[1:-1] = 0.5 * (un[:-1] + un[1:])
            h[0] = un[0]
            h[-1] = un[-1]
        self.heading = np.ascontiguousarray(np.unwrap(h))

        k = np.zeros(len(pts))
        for i in range(1, len(pts) - 1):
            k[i] = menger_curvature(pts[i - 1], pts[i], pts[i + 1])
        if len(pts) > 2:
            k[0] = k[1]
            k[-1] = k[-2]
        self.curvature = np.ascontiguousarray(k)

    def frame(self, s: float):
        """(point, heading, curvature) at clamped arclength s."""
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.s, s, side="right")) - 1
        i = min(max(i, 0), len(self.s) - 2)
        span = self.s[i + 1] - self.s[i]
        f = (s - self.s[i]) / span if span > 0 else 0.0
        x = self.x[i] + f * (self.x[i + 1] - self.x[i])
        y = self.y[i] + f * (self.y[i + 1] - self.y[i])
        h = self.heading[i] + f * (self.heading[i + 1] - self.heading[i])
        k = self.curvature[i] + f * (self.curvature[i + 1] - self.curvature[i])
        return (float(x), float(y)), kernels.wrap_angle(float(h)), float(k)

    def point_at(self, s: float, lateral: float = 0.0):
        (x, y), h, _ = self.frame(s)
        if lateral:
            x -= math.sin(h) * lateral
            y += math.cos(h) * lateral
        return x, y

    def project(self, px: float, py: float):
        """(arclength, lateral offset) of the closest path point (left positive)."""
        s_arr, lat_arr = self.project_many(np.array([[px, py]]))
        return float(s_arr[0]), float(lat_arr[0])

    def project_many(self, points: np.ndarray):
        """Vectorized projection of (n, 2) points onto the path."""
        pts = np.asarray(points, dtype=float)
        ax = self.x[:-1]
        ay = self.y[:-1]
        bx = self.x[1:]
        by = self.y[1:]
        ex = bx - ax
        ey = by - ay
        el2 = ex * ex + ey * ey
        el2[el2 == 0.0] = 1e-18
        # (n, m) parametric position of each point on each segment
        dxp = pts[:, 0:1] - ax[None, :]
        dyp = pts[:, 1:2] - ay[None, :]
        t = np.clip((dxp * ex[None, :] + dyp * ey[None, :]) / el2[None, :], 0.0, 1.0)
        cx = ax[None, :] + t * ex[None, :]
        cy = ay[None, :] + t * ey[None, :]
        d2 = (pts[:, 0:1] - cx) ** 2 + (pts[:, 1:2] - cy) ** 2
        best = np.argmin(d2, axis=1)
        rows = np.arange(len(pts))
        tb = t[rows, best]
        s = self.s[best] + tb * np.sqrt(el2[best])
        # signed lateral: positive to the left of the tangent; sign degenerates
        # to +1 for points past an endpoint along the tangent, where the
        # magnitude (full distance to the path) is what matters
        cross = ex[best] * (pts[:, 1] - cy[rows, best]) - ey[best] * (pts[:, 0] - cx[rows, best])
        lat = np.where(cross >= 0.0, 1.0, -1.0) * np.sqrt(d2[rows, best])
        return s, lat

    def points_array(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])


def composite_path(polylines, step: float = PATH_STEP) -> ReferencePath:
    """ReferencePath through a chain of polylines joined end to start."""
    chunks = []
    for i, pl in enumerate(polylines):
        arr = np.asarray(pl, dtype=float)
        if i > 0 and chunks and np.hypot(*(arr[0] - chunks[-1][-1])) < 1e-6:
            arr = arr[1:]
        if len(arr):
            chunks.append(arr)
    return ReferencePath(np.concatenate(chunks, axis=0), step)


def min_distance_between(a: ReferencePath, b: ReferencePath) -> float:
    """Smallest sample-to-sample distance between two paths."""
    pa = a.points_array()
    pb = b.points_array()
    d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
    return float(math.sqrt(d2.min()))
