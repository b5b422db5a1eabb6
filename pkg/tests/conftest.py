"""Shared fixtures: procedural meshes, scenes, and knowledge bases.

Object meshes are written with unshared vertices and exact per-face
normals, so the area-weighted vertex normals equal the face normals and
depth/normal consistency checks are exact.
"""

import json
from dataclasses import replace

import numpy as np
import pytest

from sceneforge import GenConfig, Layout, Placement, load_asset_index
from sceneforge.knowledge import knowledge_from_dict, load_knowledge


def write_faceted_obj(path, faces, normal_hints=None):
    """Write planar faces as unshared-vertex triangles with exact normals.

    faces: list of vertex loops (>= 3 points, planar, convex). Winding is
    fixed so each face normal points away from the mesh centroid, unless a
    per-face hint direction is given.
    """
    loops = [np.asarray(f, dtype=np.float64) for f in faces]
    centroid = np.concatenate(loops).mean(axis=0)
    v_lines, n_lines, f_lines = [], [], []
    idx = 1
    for k, loop in enumerate(loops):
        n = np.cross(loop[1] - loop[0], loop[2] - loop[0])
        n = n / np.linalg.norm(n)
        hint = None if normal_hints is None else normal_hints[k]
        want = (np.asarray(hint, dtype=np.float64) if hint is not None
                else loop.mean(axis=0) - centroid)
        if float(n @ want) < 0:
            loop = loop[::-1]
            n = -n
        for p in loop:
            v_lines.append(f"v {float(p[0])!r} {float(p[1])!r} {float(p[2])!r}")
            n_lines.append(f"vn {float(n[0])!r} {float(n[1])!r} {float(n[2])!r}")
        for t in range(1, len(loop) - 1):
            a, b, c = idx, idx + t, idx + t + 1
            f_lines.append(f"f {a}//{a} {b}//{b} {c}//{c}")
        idx += len(loop)
    path.write_text("\n".join(v_lines + n_lines + f_lines) + "\n")


def cube_faces(size):
    h = size / 2.0
    corners = {}
    for sx in (-1, 1):
        for sy in (-1, 1):
            for sz in (-1, 1):
                corners[(sx, sy, sz)] = np.array([sx * h, sy * h, sz * h])

    def quad(keys):
        return [corners[k] for k in keys]

    return [
        quad([(1, -1, -1), (1, 1, -1), (1, 1, 1), (1, -1, 1)]),
        quad([(-1, -1, -1), (-1, 1, -1), (-1, 1, 1), (-1, -1, 1)]),
        quad([(-1, 1, -1), (1, 1, -1), (1, 1, 1), (-1, 1, 1)]),
        quad([(-1, -1, -1), (1, -1, -1), (1, -1, 1), (-1, -1, 1)]),
        quad([(-1, -1, 1), (1, -1, 1), (1, 1, 1), (-1, 1, 1)]),
        quad([(-1, -1, -1), (1, -1, -1), (1, 1, -1), (-1, 1, -1)]),
    ]


def tet_faces(radius, height):
    base = [np.array([radius * np.cos(a), radius * np.sin(a), 0.0])
            for a in (0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0)]
    apex = np.array([0.0, 0.0, height])
    return [
        base,
        [base[0], base[1], apex],
        [base[1], base[2], apex],
        [base[2], base[0], apex],
    ]


FLOOR_HALF = 1.0
SHELF_Z = 0.35
SHELF_RECT = (-0.45, 0.45, -0.2, 0.2)


def floor_face(half=FLOOR_HALF):
    return [np.array([-half, -half, 0.0]), np.array([half, -half, 0.0]),
            np.array([half, half, 0.0]), np.array([-half, half, 0.0])]


def shelf_face():
    x0, x1, y0, y1 = SHELF_RECT
    return [np.array([x0, y0, SHELF_Z]), np.array([x1, y0, SHELF_Z]),
            np.array([x1, y1, SHELF_Z]), np.array([x0, y1, SHELF_Z])]


KB_FLAT = {
    "pose_bandwidth": 0.0,
    "location_bandwidth_m": 0.18,
    "categories": {
        "box": {
            "keyposes": [{"quat": [1, 0, 0, 0], "prob": 1.0}],
            "yaw_free": True,
            "anchors": [
                {"xyz": [-0.4, -0.4, 0.0], "surface": "floor", "prob": 0.6},
                {"xyz": [0.45, 0.35, 0.0], "surface": "floor", "prob": 0.4},
            ],
        },
        "crate": {
            "keyposes": [{"quat": [1, 0, 0, 0], "prob": 1.0}],
            "yaw_free": True,
            "anchors": [
                {"xyz": [0.4, -0.4, 0.0], "surface": "floor", "prob": 1.0},
            ],
        },
        "wedge": {
            "keyposes": [{"quat": [1, 0, 0, 0], "prob": 1.0}],
            "yaw_free": True,
            "anchors": [
                {"xyz": [0.0, 0.3, 0.0], "surface": "floor", "prob": 1.0},
            ],
        },
    },
    "pairs": [
        {"a": "box", "b": "crate", "occ_prob": 0.8, "sugg_dist_m": 0.45},
        {"a": "box", "b": "wedge", "occ_prob": 0.3, "sugg_dist_m": 0.2},
    ],
    "config": {"sigma": 0.1, "gamma": 0.5, "k_threshold": "calibrate",
               "seed": 0},
}


def _rot(axis, deg):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    half = np.deg2rad(deg) / 2.0
    return [float(np.cos(half))] + [float(x) for x in np.sin(half) * axis]


KB_RICH = {
    "pose_bandwidth": 0.3,
    "location_bandwidth_m": 0.12,
    "categories": {
        "box": {
            "keyposes": [{"quat": [1, 0, 0, 0], "prob": 0.9},
                         {"quat": _rot([1, 0, 0], 90), "prob": 0.5}],
            "yaw_free": False,
            "anchors": [
                {"xyz": [-0.3, -0.3, 0.0], "surface": "floor", "prob": 0.7},
                {"xyz": [0.0, 0.0, SHELF_Z], "surface": "shelf", "prob": 0.3},
            ],
        },
        "crate": {
            "keyposes": [{"quat": [1, 0, 0, 0], "prob": 0.8},
                         {"quat": _rot([0, 0, 1], 45), "prob": 0.3},
                         {"quat": _rot([0, 1, 0], 90), "prob": 0.6}],
            "yaw_free": True,
            "anchors": [
                {"xyz": [0.3, 0.3, 0.0], "surface": "floor", "prob": 1.0},
            ],
        },
        "wedge": {
            "keyposes": [{"quat": [1, 0, 0, 0], "prob": 1.0}],
            "yaw_free": True,
            "anchors": [
                {"xyz": [-0.2, 0.1, SHELF_Z], "surface": "shelf",
                 "prob": 0.5},
                {"xyz": [0.5, -0.5, 0.0], "surface": "floor", "prob": 0.5},
            ],
        },
    },
    "pairs": [
        {"a": "box", "b": "crate", "occ_prob": 0.9, "sugg_dist_m": 0.3},
        {"a": "box", "b": "wedge", "occ_prob": 0.5, "sugg_dist_m": 0.1},
        {"a": "crate", "b": "wedge", "occ_prob": 0.2, "sugg_dist_m": 0.0},
    ],
    "config": {"sigma": 0.1, "gamma": 0.5, "k_threshold": -6.0, "seed": 3},
}


@pytest.fixture(scope="session")
def asset_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("assets")
    write_faceted_obj(root / "cube.obj", cube_faces(0.1))
    write_faceted_obj(root / "cube_small.obj", cube_faces(0.06))
    write_faceted_obj(root / "crate.obj", cube_faces(0.16))
    write_faceted_obj(root / "tet.obj", tet_faces(0.06, 0.09))
    write_faceted_obj(root / "floor.obj", [floor_face()],
                      normal_hints=[(0, 0, 1)])
    write_faceted_obj(root / "shelf.obj", [floor_face(), shelf_face()],
                      normal_hints=[(0, 0, 1), (0, 0, 1)])

    objects = [
        {"id": "box-a", "category": "box", "path": "cube.obj"},
        {"id": "box-b", "category": "box", "path": "cube_small.obj"},
        {"id": "crate-a", "category": "crate", "path": "crate.obj"},
        {"id": "wedge-a", "category": "wedge", "path": "tet.obj"},
    ]
    half = FLOOR_HALF
    floor_surface = {"name": "floor",
                     "polygon": [[-half, -half, 0], [half, -half, 0],
                                 [half, half, 0], [-half, half, 0]]}
    x0, x1, y0, y1 = SHELF_RECT
    shelf_surface = {"name": "shelf",
                     "polygon": [[x0, y0, SHELF_Z], [x1, y0, SHELF_Z],
                                 [x1, y1, SHELF_Z], [x0, y1, SHELF_Z]]}
    (root / "index_floor.json").write_text(json.dumps({
        "objects": objects,
        "scene": {"path": "floor.obj", "scene_scale": 2.0,
                  "surfaces": [floor_surface]},
    }))
    (root / "index_shelf.json").write_text(json.dumps({
        "objects": objects,
        "scene": {"path": "shelf.obj", "scene_scale": 2.0,
                  "surfaces": [floor_surface, shelf_surface]},
    }))
    (root / "kb_flat.json").write_text(json.dumps(KB_FLAT))
    return root


@pytest.fixture(scope="session")
def floor_setup(asset_root):
    return load_asset_index(asset_root / "index_floor.json")


@pytest.fixture(scope="session")
def shelf_setup(asset_root):
    return load_asset_index(asset_root / "index_shelf.json")


@pytest.fixture(scope="session")
def kb_flat(asset_root, floor_setup):
    _, scene = floor_setup
    return load_knowledge(asset_root / "kb_flat.json", scene=scene)


@pytest.fixture(scope="session")
def kb_rich(shelf_setup):
    _, scene = shelf_setup
    return knowledge_from_dict(KB_RICH, scene=scene)


@pytest.fixture()
def gen_config_small():
    return GenConfig(categories=("box", "crate", "wedge"),
                     count_range=(2, 4), budget=5000, seed=7,
                     calibration_size=40)


def random_unit_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def random_layouts(library, scene, rng, n_layouts, max_objects=10):
    """Arbitrary (not necessarily physical) layouts for scoring tests."""
    cats = library.categories()
    x0, x1, y0, y1 = SHELF_RECT
    layouts = []
    for _ in range(n_layouts):
        k = int(rng.integers(2, max_objects + 1))
        placements = []
        for i in range(k):
            cat = cats[int(rng.integers(len(cats)))]
            models = library.by_category[cat]
            model = models[int(rng.integers(len(models)))]
            mode = rng.random()
            if mode < 0.4:
                loc = np.array([rng.uniform(-0.9, 0.9),
                                rng.uniform(-0.9, 0.9),
                                rng.uniform(0.0, 0.04)])
            elif mode < 0.7:
                loc = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1),
                                SHELF_Z + rng.uniform(0.0, 0.04)])
            else:
                loc = np.array([rng.uniform(-1.2, 1.2),
                                rng.uniform(-1.2, 1.2),
                                rng.uniform(0.0, 0.9)])
            placements.append(Placement(
                object=replace(model, id=f"{model.id}#{i}"),
                pose=random_unit_quat(rng),
                location=loc,
            ))
        layouts.append(Layout(scene=scene, placements=tuple(placements)))
    return layouts


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance gate's pass/fail lines at the end of the run."""
    try:
        import test_acceptance
    except ImportError:
        return
    lines = getattr(test_acceptance, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
