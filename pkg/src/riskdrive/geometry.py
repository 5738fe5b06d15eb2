"""2D geometry kernels: polyline routes, projections, curvature, ray casting.

All angles are radians, wrapped to (-pi, pi].  Routes are polylines with a
cumulative arc-length table; lateral offsets are signed positive to the
left of the local tangent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = (a + math.pi) % (2 * math.pi) - math.pi
    if a == -math.pi:
        a = math.pi
    return a


@dataclass
class Route:
    """Polyline centerline with lane width and a goal at the route end."""

    points: np.ndarray            # (N, 2)
    lane_width: float

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ValueError("route needs at least two points")
        self.points = pts
        deltas = np.diff(pts, axis=0)
        seg_len = np.hypot(deltas[:, 0], deltas[:, 1])
        if np.any(seg_len <= 0):
            raise ValueError("route has zero-length segment")
        self.seg_len = seg_len
        self.s = np.concatenate([[0.0], np.cumsum(seg_len)])
        self.headings = np.arctan2(deltas[:, 1], deltas[:, 0])

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def goal(self) -> np.ndarray:
        return self.points[-1]

    @property
    def half_width(self) -> float:
        return self.lane_width / 2.0

    def pose_at(self, s: float) -> tuple[float, float, float]:
        """(x, y, tangent heading) at arc length s, clamped to the route."""
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.s, s, side="right") - 1)
        i = min(i, len(self.seg_len) - 1)
        frac = (s - self.s[i]) / self.seg_len[i]
        p = self.points[i] + frac * (self.points[i + 1] - self.points[i])
        return float(p[0]), float(p[1]), float(self.headings[i])

    def project(self, x: float, y: float) -> tuple[float, float, float]:
        """Project a point onto the centerline.

        Returns (arc length, signed lateral offset, tangent heading).
        Offsets are positive to the left of the tangent.
        """
        p = np.array([x, y])
        a = self.points[:-1]
        b = self.points[1:]
        ab = b - a
        t = np.einsum("ij,ij->i", p - a, ab) / (self.seg_len ** 2)
        t = np.clip(t, 0.0, 1.0)
        closest = a + t[:, None] * ab
        d2 = np.sum((closest - p) ** 2, axis=1)
        i = int(np.argmin(d2))
        s = float(self.s[i] + t[i] * self.seg_len[i])
        heading = float(self.headings[i])
        rel = p - closest[i]
        lateral = float(-math.sin(heading) * rel[0] + math.cos(heading) * rel[1])
        return s, lateral, heading

    def project_many(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized projection of (K, 2) points.

        Returns (arc lengths, signed lateral offsets), each (K,).
        """
        pts = np.asarray(pts, float)
        a = self.points[:-1]
        b = self.points[1:]
        ab = b - a
        diff = pts[:, None, :] - a[None, :, :]                # (K, M, 2)
        t = np.einsum("kmj,mj->km", diff, ab) / (self.seg_len ** 2)
        t = np.clip(t, 0.0, 1.0)
        closest = a[None, :, :] + t[..., None] * ab[None, :, :]
        d2 = np.sum((closest - pts[:, None, :]) ** 2, axis=2)
        idx = np.argmin(d2, axis=1)
        rows = np.arange(len(pts))
        s = self.s[idx] + t[rows, idx] * self.seg_len[idx]
        heading = self.headings[idx]
        rel = pts - closest[rows, idx]
        lateral = -np.sin(heading) * rel[:, 0] + np.cos(heading) * rel[:, 1]
        return s, lateral

    def curvature_at(self, s: float, window: float = 2.0) -> float:
        """Signed curvature via finite difference of tangent heading over arc."""
        s0 = max(s - window, 0.0)
        s1 = min(s + window, self.length)
        if s1 - s0 < 1e-9:
            return 0.0
        _, _, h0 = self.pose_at(s0)
        _, _, h1 = self.pose_at(s1)
        return wrap_angle(h1 - h0) / (s1 - s0)

    def offset_polyline(self, offset: float) -> np.ndarray:
        """Centerline shifted laterally by a signed offset (left positive)."""
        normals = np.stack([-np.sin(self.headings), np.cos(self.headings)], axis=1)
        vert_normals = np.zeros_like(self.points)
        vert_normals[:-1] += normals
        vert_normals[1:] += normals
        norms = np.hypot(vert_normals[:, 0], vert_normals[:, 1])
        vert_normals /= norms[:, None]
        return self.points + offset * vert_normals


def box_corners(center: np.ndarray, half_extents: np.ndarray,
                heading: float) -> np.ndarray:
    """Corners of an oriented box, counterclockwise, shape (4, 2)."""
    c, s = math.cos(heading), math.sin(heading)
    rot = np.array([[c, -s], [s, c]])
    hx, hy = half_extents
    local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
    return center + local @ rot.T


def box_segments(center: np.ndarray, half_extents: np.ndarray,
                 heading: float) -> tuple[np.ndarray, np.ndarray]:
    """Boundary of an oriented box as 4 segments (p0s, p1s)."""
    corners = box_corners(np.asarray(center, float),
                          np.asarray(half_extents, float), heading)
    return corners, np.roll(corners, -1, axis=0)


def polyline_segments(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return points[:-1], points[1:]


def ray_segment_distances(origin: np.ndarray, directions: np.ndarray,
                          p0: np.ndarray, p1: np.ndarray,
                          max_range: float) -> np.ndarray:
    """Nearest intersection distance of each ray with a segment set.

    origin: (2,), directions: (B, 2) unit vectors, p0/p1: (M, 2).
    Returns (B,) distances capped at max_range.
    """
    if len(p0) == 0:
        return np.full(len(directions), max_range)
    e = p1 - p0                                   # (M, 2)
    rel = p0 - origin                             # (M, 2)
    # Solve origin + t*d == p0 + u*e; denom = cross(d, e).
    denom = directions[:, 0, None] * e[None, :, 1] - \
        directions[:, 1, None] * e[None, :, 0]    # (B, M)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rel[None, :, 0] * e[None, :, 1] - rel[None, :, 1] * e[None, :, 0]) / denom
        u = (rel[None, :, 0] * directions[:, 1, None]
             - rel[None, :, 1] * directions[:, 0, None]) / denom
    valid = (np.abs(denom) > 1e-12) & (u >= 0.0) & (u <= 1.0) & (t >= 0.0)
    t = np.where(valid, t, np.inf)
    best = t.min(axis=1)
    return np.minimum(best, max_range)


def boxes_overlap(c1: np.ndarray, h1: np.ndarray, a1: float,
                  c2: np.ndarray, h2: np.ndarray, a2: float) -> bool:
    """Separating-axis test for two oriented 2D boxes."""
    corners1 = box_corners(np.asarray(c1, float), np.asarray(h1, float), a1)
    corners2 = box_corners(np.asarray(c2, float), np.asarray(h2, float), a2)
    for heading in (a1, a1 + math.pi / 2, a2, a2 + math.pi / 2):
        axis = np.array([math.cos(heading), math.sin(heading)])
        proj1 = corners1 @ axis
        proj2 = corners2 @ axis
        if proj1.max() < proj2.min() or proj2.max() < proj1.min():
            return False
    return True
