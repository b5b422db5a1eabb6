"""Mesh import, validation, and indexing.

Objects and the environmental background arrive as Wavefront OBJ files
(the common text triangle-mesh format scanning tools emit) with an optional
MTL/texture sidecar. A JSON asset index drives batch import:

    {
      "objects": [{"id": "cola", "category": "can", "path": "cola.obj",
                   "up": [0, 0, 1], "scale": 1.0}],
      "scene": {"path": "shelf.obj", "scene_scale": 2.0,
                "surfaces": [{"name": "board0", "polygon": [[x,y,z], ...]}]}
    }

All asset types are immutable after construction and safe to share across
threads; loading distinct files is trivially parallel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import MeshError, ValidationError
from .mathutils import polygon_frame

DEFAULT_DENSITY = 500.0  # kg/m^3, uniform; only relative quantities matter
SURFACE_PLANARITY_FACTOR = 1e-4   # x scene_scale
SURFACE_ON_MESH_FACTOR = 1e-3     # x scene_scale
SUPPORT_MAX_TILT_DEG = 45.0


@dataclass(frozen=True)
class TriMesh:
    """Triangle mesh with per-vertex unit normals.

    vertices: (N, 3) float64 meters; faces: (M, 3) int vertex indices;
    normals: (N, 3) unit vectors; uv: optional (N, 2) in [0, 1]^2;
    texture: optional path to an RGB image.
    """

    vertices: np.ndarray
    faces: np.ndarray
    normals: np.ndarray
    uv: np.ndarray | None = None
    texture: str | None = None

    def __post_init__(self):
        v, f, n = self.vertices, self.faces, self.normals
        if f.size == 0:
            raise MeshError("degenerate mesh (zero faces)")
        if not np.all(np.isfinite(v)):
            raise MeshError("non-finite coordinate")
        if f.min() < 0 or f.max() >= len(v):
            raise MeshError(
                f"face index out of range: {f.max()} with {len(v)} vertices")
        lengths = np.linalg.norm(n, axis=1)
        if np.any(np.abs(lengths - 1.0) > 1e-6):
            raise MeshError("vertex normal not unit length")
        if self.uv is not None and len(self.uv) != len(v):
            raise MeshError("uv count does not match vertex count")

    @classmethod
    def build(cls, vertices, faces, normals=None, uv=None, texture=None):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        faces = np.ascontiguousarray(faces, dtype=np.int64)
        if faces.size == 0:
            raise MeshError("degenerate mesh (zero faces)")
        if faces.min() < 0 or faces.max() >= len(vertices):
            raise MeshError(
                f"face index out of range: {faces.max()} with "
                f"{len(vertices)} vertices")
        if normals is None:
            normals = vertex_normals(vertices, faces)
        else:
            normals = np.ascontiguousarray(normals, dtype=np.float64)
        if uv is not None:
            uv = np.ascontiguousarray(uv, dtype=np.float64)
        return cls(vertices, faces, normals, uv, texture)

    def aabb(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, scale=1.0):
        if scale == 1.0:
            return self
        return TriMesh(self.vertices * float(scale), self.faces,
                       self.normals, self.uv, self.texture)


def vertex_normals(vertices, faces):
    """Per-face normals, area-averaged onto vertices, then normalized.

    The unnormalized face cross product has magnitude 2*area, so summing it
    directly gives the area weighting. Vertices touched by no face get +z.
    """
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    fn = np.cross(b - a, c - a)
    out = np.zeros_like(vertices)
    for k in range(3):
        np.add.at(out, faces[:, k], fn)
    lengths = np.linalg.norm(out, axis=1)
    degenerate = lengths < 1e-14
    out[degenerate] = (0.0, 0.0, 1.0)
    lengths[degenerate] = 1.0
    return out / lengths[:, None]


@dataclass(frozen=True)
class HullResult:
    """Convex hull vertex set; planar=True marks the coplanar fallback."""

    vertices: np.ndarray
    planar: bool = False


def compute_hull(points_or_mesh):
    """Convex hull of a mesh (or raw point set).

    Coplanar input cannot feed qhull in 3D; it falls back to the 2D hull in
    the best-fit plane and flags the result planar.
    """
    if isinstance(points_or_mesh, TriMesh):
        pts = points_or_mesh.vertices
    else:
        pts = np.asarray(points_or_mesh, dtype=np.float64)
    if len(pts) < 3:
        raise MeshError("hull needs at least 3 points")
    try:
        hull = ConvexHull(pts)
        return HullResult(pts[hull.vertices].copy(), planar=False)
    except QhullError:
        return HullResult(_planar_hull(pts), planar=True)


def _planar_hull(pts):
    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    coords = centered @ vt[:2].T
    try:
        hull2 = ConvexHull(coords)
        idx = hull2.vertices
    except QhullError:  # collinear or a single point
        idx = np.unique([coords[:, 0].argmin(), coords[:, 0].argmax(),
                         coords[:, 1].argmin(), coords[:, 1].argmax()])
    return pts[idx].copy()


def hull_face_data(hull_vertices, planar=False):
    """Outward face normals and deduplicated edge directions of a hull.

    For planar hulls the single plane normal plus the boundary edge
    directions are returned. Directions are deduplicated up to sign.
    """
    pts = np.asarray(hull_vertices, dtype=np.float64)
    if planar or len(pts) < 4:
        try:
            _, _, _, n = polygon_frame(pts)
        except ValueError:  # collinear or a single point
            n = None
        if n is None:
            d = pts[-1] - pts[0]
            d = d / max(np.linalg.norm(d), 1e-15)
            return d[None, :].copy(), d[None, :].copy()
        edges = pts - np.roll(pts, 1, axis=0)
        return np.array([n]), _dedup_directions(edges)
    hull = ConvexHull(pts)
    normals = _dedup_directions(hull.equations[:, :3])
    edges = []
    for simplex in hull.simplices:
        for i in range(3):
            edges.append(pts[simplex[(i + 1) % 3]] - pts[simplex[i]])
    return normals, _dedup_directions(np.array(edges))


def _dedup_directions(vecs, decimals=9):
    lengths = np.linalg.norm(vecs, axis=1)
    keep = lengths > 1e-12
    unit = vecs[keep] / lengths[keep][:, None]
    # canonical sign: first nonzero component positive
    sign = np.where(unit[:, 0] != 0, np.sign(unit[:, 0]),
                    np.where(unit[:, 1] != 0, np.sign(unit[:, 1]),
                             np.sign(unit[:, 2])))
    unit = unit * sign[:, None]
    return np.unique(np.round(unit, decimals), axis=0)


def hull_center_of_mass(hull_vertices, planar=False):
    """Volume centroid of a convex hull under uniform density."""
    pts = np.asarray(hull_vertices, dtype=np.float64)
    if planar or len(pts) < 4:
        return pts.mean(axis=0)
    hull = ConvexHull(pts)
    total = 0.0
    acc = np.zeros(3)
    ref = pts.mean(axis=0)
    for simplex, eq in zip(hull.simplices, hull.equations):
        a, b, c = pts[simplex] - ref
        vol = float(np.dot(a, np.cross(b, c))) / 6.0
        # orient by the outward plane so signed volumes accumulate positive
        if np.dot(np.cross(b - a, c - a), eq[:3]) < 0:
            vol = -vol
        acc += vol * (a + b + c) / 4.0
        total += vol
    if abs(total) < 1e-15:
        return pts.mean(axis=0)
    return ref + acc / total


@dataclass(frozen=True)
class ObjectModel:
    """A placeable object: mesh plus cached collision/support data."""

    id: str
    category: str
    mesh: TriMesh
    canonical_up: np.ndarray
    convex_hull: np.ndarray
    aabb: tuple[np.ndarray, np.ndarray]
    hull_planar: bool = False
    center_of_mass: np.ndarray = field(default=None)
    hull_normals: np.ndarray = field(default=None, repr=False)
    hull_edges: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        lo, hi = self.aabb
        v = self.mesh.vertices
        if not (np.all(v >= lo - 1e-12) and np.all(v <= hi + 1e-12)):
            raise MeshError("aabb does not enclose all vertices")


def _make_object(oid, category, mesh, up):
    hull = compute_hull(mesh)
    normals, edges = hull_face_data(hull.vertices, hull.planar)
    return ObjectModel(
        id=oid,
        category=category,
        mesh=mesh,
        canonical_up=np.asarray(up, dtype=np.float64),
        convex_hull=hull.vertices,
        aabb=(mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)),
        hull_planar=hull.planar,
        center_of_mass=hull_center_of_mass(hull.vertices, hull.planar),
        hull_normals=normals,
        hull_edges=edges,
    )


def load_object(path, category, object_id=None, up=(0.0, 0.0, 1.0), scale=1.0):
    """Load and validate one object model from an OBJ file.

    Missing normals are computed per-face and area-averaged per-vertex.
    canonical_up defaults to model +Z. scale multiplies coordinates on
    import (scan tools disagree about units; the index pins it per model).
    """
    path = Path(path)
    mesh = load_obj(path).transformed(scale)
    oid = object_id if object_id is not None else path.stem
    return _make_object(oid, category, mesh, up)


@dataclass(frozen=True)
class SupportSurface:
    """Planar polygon an object can rest on, with outward (anti-gravity) normal."""

    name: str
    polygon: np.ndarray           # (K, 3) world coordinates
    normal: np.ndarray            # unit, normal . +z >= cos 45 deg

    def plane_offset(self):
        return float(self.normal @ self.polygon[0])


@dataclass(frozen=True)
class SceneBackground:
    mesh: TriMesh
    support_surfaces: tuple[SupportSurface, ...]
    scene_scale: float

    def surface(self, name):
        for s in self.support_surfaces:
            if s.name == name:
                return s
        raise ValidationError(f"unknown support surface {name!r}")

    def center(self):
        lo, hi = self.mesh.aabb()
        return 0.5 * (lo + hi)


def load_scene(path, surfaces, scene_scale=None, scale=1.0):
    """Load the environmental background plus its declared support surfaces.

    surfaces: iterable of {"name": str, "polygon": [[x, y, z], ...]}.
    Each polygon must be planar within 1e-4 * scene_scale, lie on the mesh
    within 1e-3 * scene_scale, and face opposite gravity within 45 degrees.
    """
    mesh = load_obj(Path(path)).transformed(scale)
    if scene_scale is None:
        lo, hi = mesh.aabb()
        scene_scale = float(np.max(hi - lo))
    if scene_scale <= 0:
        raise ValidationError("scene_scale must be positive")
    built = []
    for spec in surfaces:
        built.append(_build_surface(spec, mesh, scene_scale))
    return SceneBackground(mesh, tuple(built), scene_scale)


def _build_surface(spec, mesh, scene_scale):
    name = spec["name"]
    poly = np.asarray(spec["polygon"], dtype=np.float64)
    if poly.ndim != 2 or poly.shape[0] < 3 or poly.shape[1] != 3:
        raise ValidationError(f"surface {name!r}: polygon needs >= 3 3D points")
    _, _, _, normal = polygon_frame(poly)
    # orient against gravity before the tilt check
    if normal[2] < 0:
        normal = -normal
    offs = poly @ normal
    tol = SURFACE_PLANARITY_FACTOR * scene_scale
    if offs.max() - offs.min() > tol:
        raise ValidationError(
            f"surface {name!r}: non-planar beyond {tol:.2e} m")
    if normal[2] < np.cos(np.deg2rad(SUPPORT_MAX_TILT_DEG)) - 1e-12:
        raise ValidationError(
            f"surface {name!r}: support normal opposes gravity "
            f"(tilt > {SUPPORT_MAX_TILT_DEG} deg)")
    on_tol = SURFACE_ON_MESH_FACTOR * scene_scale
    d = _points_to_mesh_distance(poly, mesh)
    if d.max() > on_tol:
        raise ValidationError(
            f"surface {name!r}: off-mesh by {d.max():.2e} m (tol {on_tol:.2e})")
    return SupportSurface(name, poly, normal)


def _points_to_mesh_distance(points, mesh):
    """Distance from each point to the nearest mesh triangle (vectorized)."""
    tri = mesh.vertices[mesh.faces]  # (M, 3, 3)
    out = np.full(len(points), np.inf)
    for i, p in enumerate(np.asarray(points, dtype=np.float64)):
        out[i] = np.sqrt(_point_triangles_d2(p, tri).min())
    return out


def _point_triangles_d2(p, tri):
    """Squared distance from point p to each triangle in tri (M, 3, 3)."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    denom = va + vb + vc
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(denom != 0, vb / denom, 0.0)
        w = np.where(denom != 0, vc / denom, 0.0)
    closest = a + v[:, None] * ab + w[:, None] * ac

    # clamp each barycentric region to the nearest edge/vertex
    region_a = (d1 <= 0) & (d2 <= 0)
    region_b = (d3 >= 0) & (d4 <= d3)
    region_c = (d6 >= 0) & (d5 <= d6)
    closest[region_c] = c[region_c]
    closest[region_b] = b[region_b]
    closest[region_a] = a[region_a]

    t_ab = np.clip(np.where(d1 - d3 != 0, d1 / np.where(d1 - d3 == 0, 1, d1 - d3), 0), 0, 1)
    edge_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0) & ~region_a & ~region_b & ~region_c
    closest[edge_ab] = a[edge_ab] + t_ab[edge_ab, None] * ab[edge_ab]

    t_ac = np.clip(np.where(d2 - d6 != 0, d2 / np.where(d2 - d6 == 0, 1, d2 - d6), 0), 0, 1)
    edge_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0) & ~region_a & ~region_b & ~region_c & ~edge_ab
    closest[edge_ac] = a[edge_ac] + t_ac[edge_ac, None] * ac[edge_ac]

    num = d4 - d3
    den = (d4 - d3) + (d5 - d6)
    t_bc = np.clip(np.where(den != 0, num / np.where(den == 0, 1, den), 0), 0, 1)
    edge_bc = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0) \
        & ~region_a & ~region_b & ~region_c & ~edge_ab & ~edge_ac
    closest[edge_bc] = b[edge_bc] + t_bc[edge_bc, None] * (c[edge_bc] - b[edge_bc])

    diff = p - closest
    return np.einsum("ij,ij->i", diff, diff)


# --- OBJ I/O ---------------------------------------------------------------

def load_obj(path):
    """Parse a Wavefront OBJ file into a TriMesh.

    Supports v/vt/vn records, f with any of the index forms (v, v/vt,
    v//vn, v/vt/vn, negative indices), polygon fan triangulation, and an
    mtllib sidecar for the diffuse texture path. File normals are used only
    when they share the vertex indexing; otherwise normals are recomputed.
    """
    path = Path(path)
    if not path.exists():
        raise MeshError(f"mesh file not found: {path}")
    vertices, uvs, file_normals, faces = [], [], [], []
    face_vt, face_vn = [], []
    texture = None
    mtllib = None
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as e:
        raise MeshError(f"cannot read {path}: {e}") from e
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "v":
                vertices.append([float(x) for x in parts[1:4]])
            elif tag == "vt":
                uvs.append([float(x) for x in parts[1:3]])
            elif tag == "vn":
                file_normals.append([float(x) for x in parts[1:4]])
            elif tag == "f":
                idx = [_parse_face_vertex(tok) for tok in parts[1:]]
                if len(idx) < 3:
                    raise MeshError(f"{path}:{lineno}: face with < 3 vertices")
                for k in range(1, len(idx) - 1):
                    tri = (idx[0], idx[k], idx[k + 1])
                    faces.append([t[0] for t in tri])
                    face_vt.append([t[1] for t in tri])
                    face_vn.append([t[2] for t in tri])
            elif tag == "mtllib" and len(parts) > 1:
                mtllib = parts[1]
        except (ValueError, IndexError) as e:
            raise MeshError(f"{path}:{lineno}: parse failure: {raw!r}") from e
    if not faces:
        raise MeshError(f"{path}: degenerate mesh (zero faces)")
    nv = len(vertices)
    vertices = np.array(vertices, dtype=np.float64)
    faces_arr = np.array(
        [[i if i >= 0 else nv + i + 1 for i in f] for f in faces],
        dtype=np.int64) - 1
    if faces_arr.min() < 0 or faces_arr.max() >= nv:
        raise MeshError(
            f"{path}: face index out of range: {faces_arr.max() + 1} "
            f"with {nv} vertices")

    normals = None
    if file_normals and len(file_normals) == nv:
        aligned = all(
            vn is None or vn == v + 1 or (vn < 0 and len(file_normals) + vn + 1 == v + 1)
            for f, fvn in zip(faces, face_vn)
            for v, vn in zip((i - 1 if i > 0 else nv + i for i in f), fvn))
        if aligned:
            n = np.array(file_normals, dtype=np.float64)
            lens = np.linalg.norm(n, axis=1)
            if np.all(lens > 1e-9):
                normals = n / lens[:, None]

    uv = None
    if uvs and len(uvs) == nv:
        aligned = all(
            vt is None or vt == v + 1
            for f, fvt in zip(faces, face_vt)
            for v, vt in zip(f, fvt))
        if aligned:
            uv = np.array(uvs, dtype=np.float64)

    if mtllib is not None:
        texture = _texture_from_mtl(path.parent / mtllib)

    return TriMesh.build(vertices, faces_arr, normals, uv, texture)


def _parse_face_vertex(token):
    parts = token.split("/")
    v = int(parts[0])
    vt = int(parts[1]) if len(parts) > 1 and parts[1] else None
    vn = int(parts[2]) if len(parts) > 2 and parts[2] else None
    return v, vt, vn


def _texture_from_mtl(path):
    if not path.exists():
        return None
    for raw in path.read_text().splitlines():
        parts = raw.strip().split()
        if parts and parts[0] == "map_Kd" and len(parts) > 1:
            return str(path.parent / parts[-1])
    return None


def save_obj(path, mesh):
    """Write a TriMesh back to OBJ; floats use repr so reload is bit-exact."""
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    for n in mesh.normals:
        lines.append(f"vn {float(n[0])!r} {float(n[1])!r} {float(n[2])!r}")
    if mesh.uv is not None:
        for t in mesh.uv:
            lines.append(f"vt {float(t[0])!r} {float(t[1])!r}")
    for f in mesh.faces:
        a, b, c = (int(i) + 1 for i in f)
        if mesh.uv is not None:
            lines.append(f"f {a}/{a}/{a} {b}/{b}/{b} {c}/{c}/{c}")
        else:
            lines.append(f"f {a}//{a} {b}//{b} {c}//{c}")
    Path(path).write_text("\n".join(lines) + "\n")


# --- asset index -----------------------------------------------------------

class ModelLibrary:
    """Loaded object models grouped by category."""

    def __init__(self, models):
        self.models = list(models)
        self.by_category = {}
        seen = set()
        for m in self.models:
            if m.id in seen:
                raise ValidationError(f"duplicate object id {m.id!r}")
            seen.add(m.id)
            self.by_category.setdefault(m.category, []).append(m)

    def categories(self):
        return sorted(self.by_category)

    def get(self, object_id):
        for m in self.models:
            if m.id == object_id:
                return m
        raise ValidationError(f"unknown object id {object_id!r}")

    def __len__(self):
        return len(self.models)


def load_asset_index(path):
    """Load every object and the scene named by a JSON asset index."""
    path = Path(path)
    try:
        index = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read asset index {path}: {e}") from e
    root = path.parent
    models = []
    for entry in index.get("objects", []):
        models.append(load_object(
            root / entry["path"],
            entry["category"],
            object_id=entry.get("id"),
            up=entry.get("up", (0.0, 0.0, 1.0)),
            scale=entry.get("scale", 1.0),
        ))
    scene_spec = index.get("scene")
    scene = None
    if scene_spec is not None:
        scene = load_scene(
            root / scene_spec["path"],
            scene_spec.get("surfaces", []),
            scene_scale=scene_spec.get("scene_scale"),
            scale=scene_spec.get("scale", 1.0),
        )
    return ModelLibrary(models), scene
