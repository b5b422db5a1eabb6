"""CPU rasterizer producing the four-map training sample.

Each accepted layout renders to a quadruple: rough RGB, instance-id map,
metric depth, and camera-space normals. The image is deliberately plain
(flat albedo, one directional light, ambient fill, no shadows): realism is
the downstream image-translation network's job, while the three geometric
maps are exact ground truth and must stay metrically meaningful. Hence
perspective-correct interpolation and a strict z-buffer.

Camera convention: x right, y down, z forward (camera looks along +z).
World gravity is -z. Depth is view-space z in meters, +inf where nothing
was hit. Instance ids are placement index + 1; the scene mesh and empty
pixels are 0.

Rendering one frame is sequential; frames are independent and the CLI
parallelizes across them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ValidationError
from .mathutils import quat_rotate

AMBIENT = 0.35
DIFFUSE = 0.65
# direction toward the light, camera space: above and left of the camera
LIGHT_DIR = np.array([-0.25, -0.4, -0.88])
LIGHT_DIR = LIGHT_DIR / np.linalg.norm(LIGHT_DIR)
SCENE_ALBEDO = np.array([0.62, 0.60, 0.58])
DEPTH_UNIT_MM = 1000.0
DEPTH_MAX_M = 65.535
ENCODING = {"rgb": "srgb8-v1", "seg": "uint16-id-v1",
            "depth": "uint16-mm-v1", "normal": "uint8-snorm-v1"}


@dataclass(frozen=True)
class Camera:
    """Pinhole camera. Points map by pc = pw @ R.T + t, u = fx*x/z + cx."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray      # (3,3), rows = right, down, forward
    translation: np.ndarray   # (3,)
    width: int = 256
    height: int = 256
    near: float = 0.05
    far: float = 100.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValidationError("focal lengths must be positive")
        if not 0 < self.near < self.far:
            raise ValidationError("need 0 < near < far")
        r = np.asarray(self.rotation, dtype=np.float64)
        if r.shape != (3, 3) or np.max(np.abs(r @ r.T - np.eye(3))) > 1e-6:
            raise ValidationError("rotation must be a 3x3 orthonormal matrix")

    def to_camera(self, pts):
        return np.asarray(pts, dtype=np.float64) @ self.rotation.T + self.translation

    def rotate_to_camera(self, vecs):
        return np.asarray(vecs, dtype=np.float64) @ self.rotation.T

    def eye(self):
        return -self.rotation.T @ self.translation

    def to_dict(self):
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "rotation": np.asarray(self.rotation).tolist(),
                "translation": np.asarray(self.translation).tolist(),
                "width": self.width, "height": self.height,
                "near": self.near, "far": self.far}

    @classmethod
    def from_dict(cls, d):
        return cls(fx=float(d["fx"]), fy=float(d["fy"]), cx=float(d["cx"]),
                   cy=float(d["cy"]),
                   rotation=np.asarray(d["rotation"], dtype=np.float64),
                   translation=np.asarray(d["translation"], dtype=np.float64),
                   width=int(d["width"]), height=int(d["height"]),
                   near=float(d["near"]), far=float(d["far"]))


def look_at(eye, target, up=(0.0, 0.0, 1.0), fov_deg=60.0,
            width=256, height=256, near=0.05, far=100.0):
    """Camera at `eye` looking toward `target`, vertical field of view."""
    eye = np.asarray(eye, dtype=np.float64)
    f = np.asarray(target, dtype=np.float64) - eye
    n = np.linalg.norm(f)
    if n < 1e-12:
        raise ValidationError("eye and target coincide")
    f = f / n
    right = None
    for u in (np.asarray(up, dtype=np.float64),
              np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0])):
        r = np.cross(f, u)
        if np.linalg.norm(r) > 1e-9:
            right = r / np.linalg.norm(r)
            break
    down = np.cross(f, right)
    rot = np.stack([right, down, f])
    fy = 0.5 * height / np.tan(0.5 * np.deg2rad(fov_deg))
    return Camera(fx=fy, fy=fy, cx=width / 2.0, cy=height / 2.0,
                  rotation=rot, translation=-rot @ eye,
                  width=width, height=height, near=near, far=far)


@dataclass(frozen=True)
class CameraProfile:
    """Viewpoint region: an orbit band around a jittered look-at target."""

    radius: tuple[float, float] = (1.5, 2.5)
    elevation_deg: tuple[float, float] = (15.0, 55.0)
    azimuth_deg: tuple[float, float] = (0.0, 360.0)
    target_jitter: float = 0.0
    fov_deg: float = 60.0
    width: int = 256
    height: int = 256
    near: float = 0.05
    far: float = 100.0

    def __post_init__(self):
        if self.radius[0] <= 0 or self.radius[1] < self.radius[0]:
            raise ValidationError("radius range must be positive ascending")
        if self.elevation_deg[1] < self.elevation_deg[0]:
            raise ValidationError("elevation range must ascend")


def sample_camera(scene, rng, profile=None):
    """Uniform draw from the profile region, looking into the scene.

    Draw order (azimuth, elevation, radius, jitter xyz) is part of the
    determinism contract.
    """
    prof = profile or CameraProfile()
    az = np.deg2rad(rng.uniform(*prof.azimuth_deg))
    el = np.deg2rad(rng.uniform(*prof.elevation_deg))
    r = rng.uniform(*prof.radius)
    center = scene.center()
    jitter = rng.uniform(-prof.target_jitter, prof.target_jitter, size=3) \
        if prof.target_jitter > 0 else np.zeros(3)
    target = center + jitter
    eye = target + r * np.array([np.cos(el) * np.cos(az),
                                 np.cos(el) * np.sin(az),
                                 np.sin(el)])
    return look_at(eye, target, fov_deg=prof.fov_deg,
                   width=prof.width, height=prof.height,
                   near=prof.near, far=prof.far)


@dataclass(frozen=True)
class RenderedSample:
    rgb: np.ndarray        # (H, W, 3) uint8
    instance: np.ndarray   # (H, W) uint16, 0 = background/scene
    depth: np.ndarray      # (H, W) float32 meters, +inf = no hit
    normal: np.ndarray     # (H, W, 3) float32 camera-space unit, 0 = no hit
    camera: Camera
    layout_ref: str = ""


def instance_albedo(index):
    """Deterministic distinct-ish color for instance `index` (1-based)."""
    h = (index * 0.61803398875) % 1.0
    # simple HSV(h, 0.55, 0.95) to RGB
    s, v = 0.55, 0.95
    i = int(h * 6.0) % 6
    f = h * 6.0 - int(h * 6.0)
    p, q, t = v * (1 - s), v * (1 - s * f), v * (1 - s * (1 - f))
    rgb = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]
    return np.array(rgb)


def _clip_near(verts, attrs, near):
    """Sutherland-Hodgman clip of a triangle against z >= near.

    attrs is (3, A); returns (verts', attrs') with 0, 3 or 4 rows.
    """
    out_v, out_a = [], []
    for i in range(3):
        cur_v, cur_a = verts[i], attrs[i]
        nxt_v, nxt_a = verts[(i + 1) % 3], attrs[(i + 1) % 3]
        cur_in = cur_v[2] >= near
        nxt_in = nxt_v[2] >= near
        if cur_in:
            out_v.append(cur_v)
            out_a.append(cur_a)
        if cur_in != nxt_in:
            t = (near - cur_v[2]) / (nxt_v[2] - cur_v[2])
            out_v.append(cur_v + t * (nxt_v - cur_v))
            out_a.append(cur_a + t * (nxt_a - cur_a))
    return out_v, out_a


class _FrameBuffers:
    def __init__(self, camera):
        h, w = camera.height, camera.width
        self.z = np.full((h, w), np.inf, dtype=np.float64)
        self.rgb = np.zeros((h, w, 3), dtype=np.float64)
        self.instance = np.zeros((h, w), dtype=np.uint16)
        self.normal = np.zeros((h, w, 3), dtype=np.float64)


def _raster_mesh(buf, camera, mesh, instance_id, albedo, world_rot=None,
                 world_pos=None, texture=None, uv=None):
    verts = mesh.vertices
    normals = mesh.normals
    if world_rot is not None:
        verts = quat_rotate(world_rot, verts) + world_pos
        normals = quat_rotate(world_rot, normals)
    cam_v = camera.to_camera(verts)
    cam_n = camera.rotate_to_camera(normals)

    has_tex = texture is not None and uv is not None
    for face in mesh.faces:
        tri_v = cam_v[face]
        if np.all(tri_v[:, 2] < camera.near):
            continue
        attrs = np.empty((3, 5 if has_tex else 3))
        attrs[:, :3] = cam_n[face]
        if has_tex:
            attrs[:, 3:5] = uv[face]
        vs, as_ = _clip_near(tri_v, attrs, camera.near)
        if len(vs) < 3:
            continue
        for k in range(1, len(vs) - 1):
            _raster_triangle(buf, camera,
                             (vs[0], vs[k], vs[k + 1]),
                             (as_[0], as_[k], as_[k + 1]),
                             instance_id, albedo, texture)


def _raster_triangle(buf, camera, tri, attrs, instance_id, albedo, texture):
    v0, v1, v2 = tri
    z0, z1, z2 = v0[2], v1[2], v2[2]
    # screen positions
    p = np.array([
        [camera.fx * v0[0] / z0 + camera.cx, camera.fy * v0[1] / z0 + camera.cy],
        [camera.fx * v1[0] / z1 + camera.cx, camera.fy * v1[1] / z1 + camera.cy],
        [camera.fx * v2[0] / z2 + camera.cx, camera.fy * v2[1] / z2 + camera.cy],
    ])
    area = ((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1])
            - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0]))
    if abs(area) < 1e-12:
        return
    x_min = max(int(np.floor(p[:, 0].min() - 0.5)), 0)
    x_max = min(int(np.ceil(p[:, 0].max() + 0.5)), camera.width - 1)
    y_min = max(int(np.floor(p[:, 1].min() - 0.5)), 0)
    y_max = min(int(np.ceil(p[:, 1].max() + 0.5)), camera.height - 1)
    if x_min > x_max or y_min > y_max:
        return

    xs = np.arange(x_min, x_max + 1) + 0.5
    ys = np.arange(y_min, y_max + 1) + 0.5
    px, py = np.meshgrid(xs, ys)

    def edge(a, b):
        return (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])

    w0 = edge(p[1], p[2])
    w1 = edge(p[2], p[0])
    w2 = edge(p[0], p[1])
    if area < 0:
        w0, w1, w2, a_abs = -w0, -w1, -w2, -area
    else:
        a_abs = area
    mask = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
    if not mask.any():
        return
    l0, l1, l2 = w0 / a_abs, w1 / a_abs, w2 / a_abs

    inv_z = l0 / z0 + l1 / z1 + l2 / z2
    with np.errstate(divide="ignore"):
        depth = 1.0 / inv_z
    mask &= (depth >= camera.near) & (depth <= camera.far)

    region = (slice(y_min, y_max + 1), slice(x_min, x_max + 1))
    mask &= depth < buf.z[region]
    if not mask.any():
        return

    a0, a1, a2 = attrs
    interp = (l0[..., None] * (a0 / z0) + l1[..., None] * (a1 / z1)
              + l2[..., None] * (a2 / z2)) * depth[..., None]
    n = interp[..., :3]
    lens = np.linalg.norm(n, axis=-1)
    lens = np.where(lens < 1e-12, 1.0, lens)
    n = n / lens[..., None]
    # ground-truth normals face the camera regardless of mesh winding
    flip = n[..., 2] > 0
    n = np.where(flip[..., None], -n, n)

    if texture is not None:
        tex, th, tw = texture
        u = np.clip(interp[..., 3], 0.0, 1.0)
        v = np.clip(interp[..., 4], 0.0, 1.0)
        ti = np.minimum((v * th).astype(np.int64), th - 1)
        tj = np.minimum((u * tw).astype(np.int64), tw - 1)
        base = tex[ti, tj]
    else:
        base = np.broadcast_to(albedo, n.shape)

    lambert = np.maximum(0.0, n @ LIGHT_DIR)
    shade = base * (AMBIENT + DIFFUSE * lambert)[..., None]

    zr = buf.z[region]
    zr[mask] = depth[mask]
    ir = buf.instance[region]
    ir[mask] = instance_id
    nr = buf.normal[region]
    nr[mask] = n[mask]
    cr = buf.rgb[region]
    cr[mask] = shade[mask]


_texture_cache = {}


def _load_texture(path):
    if path not in _texture_cache:
        img = np.asarray(Image.open(path).convert("RGB"), dtype=np.float64)
        _texture_cache[path] = (img / 255.0, img.shape[0], img.shape[1])
    return _texture_cache[path]


def rasterize(layout, camera, include_scene=True, layout_ref=""):
    """Render a layout into the four-map sample.

    Draw order (scene mesh, then placements in index order) plus the strict
    z-test makes output bit-deterministic. An empty frustum yields a valid
    all-background sample.
    """
    buf = _FrameBuffers(camera)
    if include_scene and layout.scene is not None:
        mesh = layout.scene.mesh
        texture = None
        uv = None
        if mesh.texture and mesh.uv is not None:
            texture = _load_texture(mesh.texture)
            uv = mesh.uv
        _raster_mesh(buf, camera, mesh, 0, SCENE_ALBEDO,
                     texture=texture, uv=uv)
    for idx, placement in enumerate(layout.placements):
        mesh = placement.object.mesh
        texture = None
        uv = None
        if mesh.texture and mesh.uv is not None:
            texture = _load_texture(mesh.texture)
            uv = mesh.uv
        _raster_mesh(buf, camera, mesh, idx + 1, instance_albedo(idx + 1),
                     world_rot=placement.pose,
                     world_pos=np.asarray(placement.location, dtype=np.float64),
                     texture=texture, uv=uv)

    rgb = np.clip(np.floor(buf.rgb * 255.0 + 0.5), 0, 255).astype(np.uint8)
    return RenderedSample(
        rgb=rgb,
        instance=buf.instance.copy(),
        depth=buf.z.astype(np.float32),
        normal=buf.normal.astype(np.float32),
        camera=camera,
        layout_ref=layout_ref,
    )


# --- encoding ---------------------------------------------------------------

def encode_depth(depth):
    """float meters -> uint16 millimeters; no-hit (inf) stores 0."""
    d = np.asarray(depth, dtype=np.float64)
    mm = np.floor(d * DEPTH_UNIT_MM + 0.5)
    mm = np.where(np.isfinite(d), np.clip(mm, 0, 65535), 0)
    return mm.astype(np.uint16)


def decode_depth(stored):
    d = np.asarray(stored, dtype=np.float64) / DEPTH_UNIT_MM
    d = np.where(np.asarray(stored) == 0, np.inf, d)
    return d.astype(np.float32)


def encode_normal(normal):
    """Unit vector -> uint8 per channel: floor(n*127.5 + 127.5 + 0.5).

    Half-up rounding keeps the zero component exactly at 128, so a normal
    looking straight down the camera axis encodes as (128, 128, 0).
    """
    n = np.asarray(normal, dtype=np.float64)
    return np.clip(np.floor(n * 127.5 + 127.5 + 0.5), 0, 255).astype(np.uint8)


def decode_normal(stored, renormalize=True):
    n = (np.asarray(stored, dtype=np.float64) - 127.5) / 127.5
    if renormalize:
        lens = np.linalg.norm(n, axis=-1, keepdims=True)
        n = np.where(lens > 0.5, n / np.where(lens == 0, 1.0, lens), 0.0)
    return n.astype(np.float32)


def encode_sample(sample, out_dir, stem, extra_meta=None):
    """Write the four PNGs plus the metadata JSON; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "rgb": out / f"{stem}.rgb.png",
        "seg": out / f"{stem}.seg.png",
        "depth": out / f"{stem}.depth.png",
        "normal": out / f"{stem}.normal.png",
        "meta": out / f"{stem}.meta.json",
    }
    Image.fromarray(sample.rgb, mode="RGB").save(paths["rgb"])
    Image.fromarray(sample.instance).save(paths["seg"])
    Image.fromarray(encode_depth(sample.depth)).save(paths["depth"])
    Image.fromarray(encode_normal(sample.normal), mode="RGB").save(paths["normal"])
    meta = {
        "camera": sample.camera.to_dict(),
        "layout_ref": sample.layout_ref,
        "encoding": ENCODING,
    }
    if extra_meta:
        meta.update(extra_meta)
    paths["meta"].write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return paths


@dataclass(frozen=True)
class DecodedSample:
    rgb: np.ndarray
    instance: np.ndarray
    depth: np.ndarray
    normal: np.ndarray
    camera: Camera
    layout_ref: str
    encoding: dict


def decode_sample(out_dir, stem):
    out = Path(out_dir)
    meta = json.loads((out / f"{stem}.meta.json").read_text())
    rgb = np.asarray(Image.open(out / f"{stem}.rgb.png").convert("RGB"))
    seg = np.asarray(Image.open(out / f"{stem}.seg.png"), dtype=np.uint16)
    depth = decode_depth(np.asarray(Image.open(out / f"{stem}.depth.png")))
    normal = decode_normal(np.asarray(Image.open(out / f"{stem}.normal.png")))
    return DecodedSample(
        rgb=rgb, instance=seg, depth=depth, normal=normal,
        camera=Camera.from_dict(meta["camera"]),
        layout_ref=meta.get("layout_ref", ""),
        encoding=meta.get("encoding", {}),
    )
