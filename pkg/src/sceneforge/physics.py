"""Quasi-static plausibility gate: settling, penetration, and stability.

A full rigid-body simulation is overkill for a keep/reject verdict, so the
gate approximates one:

  * objects translate straight down (no rotation) to their exact first
    contact, processed in ascending initial height so supporters settle
    before anything lands on them, iterated to a fixed point;
  * collision geometry is each object's convex hull; the environmental
    contact geometry is the declared support surfaces;
  * stability is the static support-polygon test: the gravity-projected
    center of mass must fall inside the 2D hull of the supporting contact
    points (within a small margin, so a point contact exactly under the
    center still counts as stable).

First contact against another hull is found by separating-axis interval
arithmetic: along a drop by t the projection of the falling hull onto axis
a shifts linearly by -t*a_z, so each axis admits contact for a t-interval
and the first touch is the max lower bound over all axes (face normals of
both hulls plus pairwise edge cross products, which is the complete axis
set for convex polytopes).

Everything here is deterministic; there is no RNG in this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .mathutils import (
    convex_hull_2d,
    point_in_polygon_2d,
    polygon_frame,
    polygon_to_2d,
    quat_rotate,
    signed_distance_to_polygon_2d,
)
from .reasoning import Layout

INF = float("inf")


@dataclass(frozen=True)
class PhysicsConfig:
    """Gate tolerances. The penetration bound scales with the scene."""

    penetration_factor: float = 1e-3   # x scene_scale
    stability_margin: float = 1e-3     # meters
    settle_tol: float = 1e-4           # max move on final pass => settled
    converge_tol: float = 1e-6         # keep iterating above this
    contact_tol: float = 1e-6          # meters, contact extraction
    max_iters: int = 32
    min_support_nz: float = 1e-6       # contact normal z to count as support


@dataclass(frozen=True)
class Contact:
    a: str                  # object id
    b: str                  # object id or "scene:<surface>"
    points: np.ndarray      # (K, 3)
    normal: np.ndarray      # unit, pointing into a (the supported body)

    def to_dict(self):
        return {"a": self.a, "b": self.b,
                "points": np.asarray(self.points).tolist(),
                "normal": np.asarray(self.normal).tolist()}


@dataclass(frozen=True)
class ContactReport:
    max_penetration: float
    contacts: tuple[Contact, ...] = ()
    unsupported: tuple[str, ...] = ()
    settled: bool = False
    offenders: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.max_penetration < 0:
            raise ValueError("max_penetration must be >= 0")
        if self.settled and self.unsupported:
            raise ValueError("settled report cannot list unsupported objects")

    def to_dict(self):
        return {
            "max_penetration": self.max_penetration,
            "contacts": [c.to_dict() for c in self.contacts],
            "unsupported": list(self.unsupported),
            "settled": self.settled,
            "offenders": [list(p) for p in self.offenders],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


class _Body:
    """World-space collision state of one placement during settling."""

    def __init__(self, index, placement):
        self.index = index
        self.placement = placement
        obj = placement.object
        self.id = obj.id
        self.verts = quat_rotate(placement.pose, obj.convex_hull) \
            + np.asarray(placement.location, dtype=np.float64)
        self.com = quat_rotate(placement.pose, obj.center_of_mass) \
            + np.asarray(placement.location, dtype=np.float64)
        self.axes_normals = quat_rotate(placement.pose, obj.hull_normals)
        self.edge_dirs = quat_rotate(placement.pose, obj.hull_edges)
        self.drop = 0.0  # cumulative downward translation

    def lower(self, t):
        self.verts[:, 2] -= t
        self.com[2] -= t
        self.drop += t

    def aabb(self):
        return self.verts.min(axis=0), self.verts.max(axis=0)

    def settled_placement(self):
        loc = np.asarray(self.placement.location, dtype=np.float64).copy()
        loc[2] -= self.drop
        return replace(self.placement, location=loc)

    def face_planes(self):
        """Outward face normals and offsets (n.x <= d inside) at the
        current position. Exact via qhull; planar hulls get both sides
        of their single plane."""
        try:
            hull = ConvexHull(self.verts)
            eqs = hull.equations
            return eqs[:, :3], -eqs[:, 3]
        except QhullError:
            n = self.axes_normals[0]
            proj = self.verts @ n
            return np.array([n, -n]), np.array([float(proj.max()),
                                                -float(proj.min())])


def _pair_axes(a, b):
    axes = [a.axes_normals, b.axes_normals]
    if len(a.edge_dirs) and len(b.edge_dirs):
        cross = np.cross(a.edge_dirs[:, None, :], b.edge_dirs[None, :, :])
        cross = cross.reshape(-1, 3)
        lens = np.linalg.norm(cross, axis=1)
        keep = lens > 1e-9
        if keep.any():
            axes.append(cross[keep] / lens[keep][:, None])
    return np.vstack(axes)


def _sat_penetration(a, b):
    """Exact penetration depth of two convex hulls (0 when separated).

    Per axis the push-out distance is the cheaper of the two directions,
    min(hi_a - lo_b, hi_b - lo_a); the naive interval overlap
    underestimates it whenever one projection contains the other.
    """
    axes = _pair_axes(a, b)
    pa = a.verts @ axes.T
    pb = b.verts @ axes.T
    push = np.minimum(pa.max(axis=0) - pb.min(axis=0),
                      pb.max(axis=0) - pa.min(axis=0))
    depth = push.min()
    return float(max(depth, 0.0))


def _drop_to_body(a, b):
    """Distance a must fall to first touch b, or None if it never does."""
    axes = _pair_axes(a, b)
    pa = a.verts @ axes.T
    pb = b.verts @ axes.T
    lo = pa.min(axis=0) - pb.max(axis=0)
    hi = pa.max(axis=0) - pb.min(axis=0)
    az = axes[:, 2]

    t0, t1 = -INF, INF
    for k in range(len(axes)):
        if abs(az[k]) < 1e-12:
            if lo[k] > 0.0 or hi[k] < 0.0:
                return None  # separated on a drop-invariant axis
            continue
        ta, tb = lo[k] / az[k], hi[k] / az[k]
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return None
    if t1 < 0.0:
        return None
    return max(t0, 0.0)  # t0 = -inf means already touching: drop 0


def _drop_to_surface(body, surface, frame, poly2):
    """Distance to first vertex-on-surface contact, or None."""
    n = surface.normal
    d = surface.plane_offset()
    nz = n[2]
    if nz <= 1e-9:
        return None
    s = body.verts @ n - d
    t = s / nz
    origin, u, v, _ = frame
    best = None
    for i in range(len(body.verts)):
        if t[i] < -1e-9:
            continue  # vertex below the plane: the board is not hit upward
        land = body.verts[i].copy()
        land[2] -= t[i]
        q = land - origin
        if point_in_polygon_2d(np.array([q @ u, q @ v]), poly2):
            ti = max(t[i], 0.0)
            if best is None or ti < best:
                best = ti
    return best


def _surface_frames(scene):
    frames = []
    for s in scene.support_surfaces:
        frame = polygon_frame(s.polygon)
        frames.append((s, frame, polygon_to_2d(s.polygon, frame)))
    return frames


def settle(layout, config=None, max_iters=None):
    """Drop every object to rest; returns (settled layout, report).

    Objects are processed in ascending initial height (ties by placement
    index), each translated down to its exact first contact with a support
    surface or another object at its current position. Passes repeat until
    the largest move falls below converge_tol or the iteration budget runs
    out; settled requires the final pass to move less than settle_tol and
    every object to have found support. Nothing ever moves upward.
    """
    cfg = config or PhysicsConfig()
    iters = max_iters if max_iters is not None else cfg.max_iters
    bodies = [_Body(i, p) for i, p in enumerate(layout.placements)]
    order = sorted(range(len(bodies)),
                   key=lambda i: (bodies[i].verts[:, 2].min(), i))
    surfaces = _surface_frames(layout.scene)

    unsupported = set()
    last_move = 0.0
    converged = False
    for _ in range(max(1, iters)):
        last_move = 0.0
        for i in order:
            body = bodies[i]
            t_best = None
            for s, frame, poly2 in surfaces:
                t = _drop_to_surface(body, s, frame, poly2)
                if t is not None and (t_best is None or t < t_best):
                    t_best = t
            for j, other in enumerate(bodies):
                if j == i:
                    continue
                t = _drop_to_body(body, other)
                if t is not None and (t_best is None or t < t_best):
                    t_best = t
            if t_best is None:
                unsupported.add(body.id)
                continue
            unsupported.discard(body.id)
            if t_best > 0.0:
                body.lower(t_best)
                last_move = max(last_move, t_best)
        if last_move < cfg.converge_tol:
            converged = True
            break

    settled_flag = converged or last_move < cfg.settle_tol
    settled_flag = settled_flag and not unsupported
    new_layout = Layout(scene=layout.scene,
                        placements=tuple(b.settled_placement() for b in bodies))
    contacts = _extract_contacts(bodies, surfaces, cfg)
    contacted = {c.a for c in contacts}
    no_contact = tuple(sorted(
        set(b.id for b in bodies) - contacted | unsupported))
    report = ContactReport(
        max_penetration=0.0,
        contacts=tuple(contacts),
        unsupported=no_contact,
        settled=settled_flag and not no_contact,
    )
    return new_layout, report


def _extract_contacts(bodies, surfaces, cfg):
    """Resting contacts at current positions (tolerance cfg.contact_tol)."""
    tol = cfg.contact_tol
    contacts = []
    planes = [b.face_planes() for b in bodies]
    for b in bodies:
        pts_by_src = []
        for s, frame, poly2 in surfaces:
            sd = b.verts @ s.normal - s.plane_offset()
            near = np.abs(sd) <= tol
            if not near.any():
                continue
            origin, u, v, _ = frame
            q = b.verts[near] - origin
            inpoly = [point_in_polygon_2d(np.array([qq @ u, qq @ v]), poly2)
                      for qq in q]
            pts = b.verts[near][np.array(inpoly, dtype=bool)]
            if len(pts):
                pts_by_src.append((f"scene:{s.name}", pts, s.normal.copy()))
        for j, other in enumerate(bodies):
            if other is b:
                continue
            normals_o, offs_o = planes[j]
            sd = (b.verts @ normals_o.T - offs_o).max(axis=1)
            mine_on_theirs = b.verts[np.abs(sd) <= tol]
            normals_b, offs_b = planes[b.index]
            sd2 = (other.verts @ normals_b.T - offs_b).max(axis=1)
            theirs_on_mine = other.verts[np.abs(sd2) <= tol]
            pts = [p for p in (mine_on_theirs, theirs_on_mine) if len(p)]
            if not pts:
                continue
            pts = np.vstack(pts)
            # contact force on b acts along the touched face's outward
            # normal: the other hull's when b's vertex rests on it, minus
            # b's own when the other's vertex presses on b's face
            if len(mine_on_theirs):
                k = int(np.argmax(mine_on_theirs @ normals_o.T - offs_o,
                                  axis=1)[0])
                normal = normals_o[k]
            else:
                k = int(np.argmax(theirs_on_mine @ normals_b.T - offs_b,
                                  axis=1)[0])
                normal = -normals_b[k]
            contacts.append(Contact(a=b.id, b=other.id, points=pts,
                                    normal=normal))
        for src, pts, normal in pts_by_src:
            contacts.append(Contact(a=b.id, b=src, points=pts, normal=normal))
    return contacts


def penetration_check(layout, config=None):
    """Deepest interpenetration and the offending pairs.

    Object pairs are AABB-pruned then SAT-tested; against the scene an
    object offends only when it straddles a support surface plane inside
    that surface's footprint (being entirely below a higher board is
    legitimate: that is just the shelf level beneath it).
    """
    cfg = config or PhysicsConfig()
    bodies = [_Body(i, p) for i, p in enumerate(layout.placements)]
    boxes = [b.aabb() for b in bodies]
    max_pen = 0.0
    offenders = []
    for i in range(len(bodies)):
        for j in range(i + 1, len(bodies)):
            (lo1, hi1), (lo2, hi2) = boxes[i], boxes[j]
            if np.any(lo1 > hi2) or np.any(lo2 > hi1):
                continue
            depth = _sat_penetration(bodies[i], bodies[j])
            if depth > cfg.contact_tol:
                offenders.append((bodies[i].id, bodies[j].id, depth))
                max_pen = max(max_pen, depth)
    surfaces = _surface_frames(layout.scene)
    for b in bodies:
        for s, frame, poly2 in surfaces:
            depth = _surface_penetration(b, s, frame, poly2)
            if depth > cfg.contact_tol:
                offenders.append((b.id, f"scene:{s.name}", depth))
                max_pen = max(max_pen, depth)
    offenders.sort(key=lambda o: -o[2])
    return max_pen, offenders


def _surface_penetration(body, surface, frame, poly2):
    sd = body.verts @ surface.normal - surface.plane_offset()
    above = sd.max()
    below_mask = sd < 0
    if above <= 0.0 or not below_mask.any():
        return 0.0
    origin, u, v, _ = frame
    below = 0.0
    for vtx, s in zip(body.verts[below_mask], sd[below_mask]):
        foot = vtx - s * surface.normal  # projection onto the plane
        q = foot - origin
        if point_in_polygon_2d(np.array([q @ u, q @ v]), poly2):
            below = max(below, -s)
    # push-out distance: the cheaper of up through the board or back out
    return float(min(above, below))


def stability_check(layout, report, config=None):
    """Static support test per object; returns {object id: stable}.

    An object is stable when its gravity-projected center of mass lies in
    the 2D convex hull of its supporting contact points, allowing the
    stability margin so a point contact straight under the center passes.
    Objects with no supporting contacts are unstable.
    """
    cfg = config or PhysicsConfig()
    support_pts = {p.object.id: [] for p in layout.placements}
    for c in report.contacts:
        if c.normal[2] > cfg.min_support_nz and c.a in support_pts:
            support_pts[c.a].append(np.asarray(c.points)[:, :2])
    out = {}
    for p in layout.placements:
        pts = support_pts[p.object.id]
        if not pts:
            out[p.object.id] = False
            continue
        pts2 = np.vstack(pts)
        hull2 = convex_hull_2d(pts2)
        com = quat_rotate(p.pose, p.object.center_of_mass) \
            + np.asarray(p.location, dtype=np.float64)
        d = signed_distance_to_polygon_2d(com[:2], hull2)
        out[p.object.id] = bool(d >= -cfg.stability_margin)
    return out


def physics_accept(layout, config=None):
    """Run the full gate; returns (accepted, settled layout, report).

    accepted requires the layout to settle, stay within the penetration
    bound (1e-3 x scene_scale by default), and hold every object stable.
    Unstable or unsupported object ids end up in report.unsupported.
    """
    cfg = config or PhysicsConfig()
    settled_layout, report = settle(layout, cfg)
    max_pen, offenders = penetration_check(settled_layout, cfg)
    stable = stability_check(settled_layout, report, cfg)
    bad = set(report.unsupported) | {oid for oid, ok in stable.items() if not ok}
    settled_flag = report.settled and not bad
    report = ContactReport(
        max_penetration=max_pen,
        contacts=report.contacts,
        unsupported=tuple(sorted(bad)),
        settled=settled_flag,
        offenders=tuple((a, b) for a, b, _ in offenders),
    )
    pen_ok = max_pen <= cfg.penetration_factor * layout.scene.scene_scale
    return settled_flag and pen_ok, settled_layout, report
