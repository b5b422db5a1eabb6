"""Quaternion and planar-polygon helpers used across modules.

Quaternions are float64 arrays in (w, x, y, z) order and are kept unit
length. Rotations act on column vectors: rotate(q, v) applies the rotation
encoded by q to v in the same frame.
"""

from __future__ import annotations

import numpy as np

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q):
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("cannot normalize zero or non-finite quaternion")
    return q / n


def quat_multiply(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0.0:
        return IDENTITY_QUAT.copy()
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis / n))


def quat_to_matrix(q):
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_rotate(q, v):
    """Rotate one vector or an (N, 3) stack of vectors by q."""
    return np.asarray(v, dtype=np.float64) @ quat_to_matrix(q).T


def quat_geodesic_angle(a, b):
    """Geodesic angle in radians between two unit quaternions (antipodal-safe)."""
    d = abs(float(np.dot(a, b)))
    return 2.0 * np.arccos(min(1.0, d))


def quat_geodesic_angle_yaw_free(a, b, up_axis=None):
    """Geodesic angle between a and b minimized over world-frame yaw.

    The minimum of angle(a, Rz(phi) * b) over phi has the closed form
    2*arccos(sqrt(rw^2 + rz^2)) with r = a * conj(b), for yaw about +z.
    A non-z up_axis is handled by conjugating into the z-up frame.
    """
    if up_axis is not None:
        up = np.asarray(up_axis, dtype=np.float64)
        up = up / np.linalg.norm(up)
        if abs(up[2] - 1.0) > 1e-12:
            align = _quat_aligning(up, np.array([0.0, 0.0, 1.0]))
            a = quat_multiply(align, a)
            b = quat_multiply(align, b)
    r = quat_multiply(a, quat_conjugate(b))
    c = np.hypot(r[0], r[3])
    return 2.0 * np.arccos(min(1.0, float(c)))


def _quat_aligning(v_from, v_to):
    """Shortest-arc quaternion rotating v_from onto v_to (both unit length)."""
    c = float(np.dot(v_from, v_to))
    if c > 1.0 - 1e-12:
        return IDENTITY_QUAT.copy()
    if c < -1.0 + 1e-12:
        # 180 degrees: any axis orthogonal to v_from works
        axis = np.cross(v_from, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-9:
            axis = np.cross(v_from, [0.0, 1.0, 0.0])
        return quat_from_axis_angle(axis, np.pi)
    axis = np.cross(v_from, v_to)
    return quat_normalize(np.concatenate(([1.0 + c], axis)))


def quat_perturb(q, sigma, rng):
    """Perturb q by a tangent-space Gaussian with std sigma radians.

    A rotation vector w ~ N(0, sigma^2 I3) is drawn and its exponential is
    pre-multiplied onto q (world-frame wobble). sigma = 0 returns q itself.
    """
    if sigma <= 0.0:
        return np.asarray(q, dtype=np.float64).copy()
    w = rng.normal(0.0, sigma, size=3)
    angle = np.linalg.norm(w)
    if angle < 1e-15:
        return np.asarray(q, dtype=np.float64).copy()
    delta = quat_from_axis_angle(w / angle, angle)
    return quat_normalize(quat_multiply(delta, q))


def yaw_quat(angle):
    return quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), angle)


# --- planar polygons -------------------------------------------------------

def polygon_frame(vertices):
    """Orthonormal in-plane basis for a 3D planar polygon.

    Returns (origin, u, v, normal) where normal follows Newell's method and
    u, v span the plane. The polygon must have >= 3 vertices.
    """
    pts = np.asarray(vertices, dtype=np.float64)
    if pts.shape[0] < 3:
        raise ValueError("polygon needs at least 3 vertices")
    normal = np.zeros(3)
    for i in range(len(pts)):
        a = pts[i]
        b = pts[(i + 1) % len(pts)]
        normal += np.cross(a, b)
    n = np.linalg.norm(normal)
    if n < 1e-15:
        raise ValueError("degenerate polygon (zero area)")
    normal /= n
    u = np.cross(normal, [0.0, 0.0, 1.0])
    if np.linalg.norm(u) < 1e-9:
        u = np.cross(normal, [1.0, 0.0, 0.0])
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    return pts[0].copy(), u, v, normal


def polygon_to_2d(vertices, frame=None):
    """Project polygon vertices into the (u, v) coordinates of its plane."""
    origin, u, v, _ = frame if frame is not None else polygon_frame(vertices)
    pts = np.asarray(vertices, dtype=np.float64) - origin
    return np.stack([pts @ u, pts @ v], axis=1)


def point_in_polygon_2d(point, poly, eps=1e-9):
    """Inclusive point-in-polygon test (crossing number, boundary counts in)."""
    x, y = float(point[0]), float(point[1])
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        # on-segment check
        dx, dy = x2 - x1, y2 - y1
        L2 = dx * dx + dy * dy
        if L2 > 0:
            t = ((x - x1) * dx + (y - y1) * dy) / L2
            t = min(1.0, max(0.0, t))
            if (x - (x1 + t * dx)) ** 2 + (y - (y1 + t * dy)) ** 2 <= eps * eps:
                return True
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            if x < xi:
                inside = not inside
    return inside


def points_in_polygon_2d(points, poly, eps=1e-9):
    """Vectorized inclusive point-in-polygon for an (N, 2) array."""
    pts = np.asarray(points, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        L2 = dx * dx + dy * dy
        if L2 > 0:
            t = np.clip(((x - x1) * dx + (y - y1) * dy) / L2, 0.0, 1.0)
            d2 = (x - (x1 + t * dx)) ** 2 + (y - (y1 + t * dy)) ** 2
            on_edge |= d2 <= eps * eps
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
        inside ^= crosses & (x < xi)
    return inside | on_edge


def closest_point_in_polygon_2d(point, poly):
    """Clamp a 2D point to the polygon: identity if inside, else nearest edge point."""
    if point_in_polygon_2d(point, poly):
        return np.asarray(point, dtype=np.float64).copy()
    best = None
    best_d2 = np.inf
    n = len(poly)
    p = np.asarray(point, dtype=np.float64)
    for i in range(n):
        a = np.asarray(poly[i], dtype=np.float64)
        b = np.asarray(poly[(i + 1) % n], dtype=np.float64)
        ab = b - a
        L2 = float(ab @ ab)
        t = 0.0 if L2 == 0 else float(np.clip((p - a) @ ab / L2, 0.0, 1.0))
        c = a + t * ab
        d2 = float((p - c) @ (p - c))
        if d2 < best_d2:
            best_d2 = d2
            best = c
    return best


def signed_distance_to_polygon_2d(point, poly):
    """Distance to the polygon boundary, positive inside, negative outside.

    Degenerate polygons (point or segment) give 0 on the set, negative off it.
    """
    p = np.asarray(point, dtype=np.float64)
    n = len(poly)
    if n == 1:
        return -float(np.linalg.norm(p - poly[0]))
    best = np.inf
    for i in range(n):
        a = np.asarray(poly[i], dtype=np.float64)
        b = np.asarray(poly[(i + 1) % n], dtype=np.float64)
        if n == 2 and i == 1:
            break
        ab = b - a
        L2 = float(ab @ ab)
        t = 0.0 if L2 == 0 else float(np.clip((p - a) @ ab / L2, 0.0, 1.0))
        best = min(best, float(np.linalg.norm(p - (a + t * ab))))
    if n <= 2:
        return -best
    return best if point_in_polygon_2d(p, poly) else -best


def polygon_area_2d(poly):
    x = np.asarray(poly, dtype=np.float64)
    n = len(x)
    s = 0.0
    for i in range(n):
        j = (i + 1) % n
        s += x[i, 0] * x[j, 1] - x[j, 0] * x[i, 1]
    return 0.5 * abs(s)


def convex_hull_2d(points):
    """Andrew's monotone chain; returns hull vertices in CCW order.

    Collinear inputs degrade to the extreme segment, single points to
    themselves. Used for support polygons where scipy's qhull would raise.
    """
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:  # all collinear
        return np.array([pts[0], pts[-1]])
    return hull
