"""Mesh loading, hull geometry, and the asset index."""

import numpy as np
import pytest

from sceneforge import (MeshError, TriMesh, ValidationError,
                        load_asset_index, load_obj, load_object, load_scene,
                        save_obj)
from sceneforge.assets import (compute_hull, hull_center_of_mass,
                               hull_face_data, vertex_normals)

from conftest import cube_faces, tet_faces, write_faceted_obj


def test_load_cube_counts(asset_root):
    mesh = load_obj(asset_root / "cube.obj")
    assert len(mesh.vertices) == 24
    assert len(mesh.faces) == 12


def test_cube_vertex_normals_are_face_normals(asset_root):
    mesh = load_obj(asset_root / "cube.obj")
    for tri in mesh.faces:
        v = mesh.vertices[tri]
        n = np.cross(v[1] - v[0], v[2] - v[0])
        n = n / np.linalg.norm(n)
        for vid in tri:
            assert np.allclose(mesh.normals[vid], n, atol=1e-12)


def test_obj_roundtrip_bit_exact(asset_root, tmp_path):
    mesh = load_obj(asset_root / "tet.obj")
    save_obj(tmp_path / "rt.obj", mesh)
    again = load_obj(tmp_path / "rt.obj")
    assert np.array_equal(mesh.vertices, again.vertices)
    assert np.array_equal(mesh.faces, again.faces)
    assert np.array_equal(mesh.normals, again.normals)


def test_load_obj_face_variants(tmp_path):
    path = tmp_path / "v.obj"
    path.write_text(
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
        "f 1 2 3\nf 1/1 2/2 4/4\nf -4 -2 -1\n")
    mesh = load_obj(path)
    assert len(mesh.faces) == 3
    assert list(mesh.faces[2]) == [0, 2, 3]


def test_load_obj_quad_fan(tmp_path):
    path = tmp_path / "q.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    mesh = load_obj(path)
    assert len(mesh.faces) == 2


def test_load_obj_errors(tmp_path):
    with pytest.raises(MeshError):
        load_obj(tmp_path / "missing.obj")
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0 0\nf 1 2 3\n")
    with pytest.raises(MeshError):
        load_obj(bad)
    empty = tmp_path / "empty.obj"
    empty.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\n")
    with pytest.raises(MeshError):
        load_obj(empty)


def test_trimesh_build_validation():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    f = np.array([[0, 1, 2]])
    mesh = TriMesh.build(v, f)
    assert np.allclose(np.linalg.norm(mesh.normals, axis=1), 1.0)
    with pytest.raises(MeshError):
        TriMesh.build(v * np.nan, f)
    with pytest.raises(MeshError):
        TriMesh.build(v, np.array([[0, 1, 5]]))


def test_vertex_normals_area_weighting():
    # two coplanar triangles sharing all vertices: average stays the plane
    v = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    f = np.array([[0, 1, 2], [0, 2, 3]])
    n = vertex_normals(v, f)
    assert np.allclose(n, [[0, 0, 1]] * 4)


def test_hull_center_of_mass_cube(asset_root):
    mesh = load_obj(asset_root / "cube.obj")
    hull = compute_hull(mesh.vertices)
    com = hull_center_of_mass(hull.vertices)
    assert np.allclose(com, [0, 0, 0], atol=1e-12)


def test_hull_center_of_mass_shifted():
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1, 1, size=(40, 3))
    shift = np.array([3.0, -2.0, 7.0])
    hull = compute_hull(pts)
    com_a = hull_center_of_mass(hull.vertices)
    com_b = hull_center_of_mass(compute_hull(pts + shift).vertices)
    assert np.allclose(com_b - com_a, shift, atol=1e-9)


def test_hull_planar_fallback():
    pts = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                    [0.5, 0.5, 0]], dtype=float)
    hull = compute_hull(pts)
    assert hull.planar
    normals, edges = hull_face_data(hull.vertices, planar=True)
    assert len(normals) >= 1


def test_hull_face_data_cube(asset_root):
    mesh = load_obj(asset_root / "cube.obj")
    hull = compute_hull(mesh.vertices)
    normals, edges = hull_face_data(hull.vertices)
    # a cube has 3 distinct face normal directions (sign-canonicalized)
    canon = {tuple(np.round(np.abs(n), 6)) for n in normals}
    assert canon == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}
    # triangulated facets add diagonal edges; the axis edges must be present
    canon_e = {tuple(np.round(np.abs(e), 6)) for e in edges}
    assert {(1, 0, 0), (0, 1, 0), (0, 0, 1)} <= canon_e


def test_load_object_model(asset_root):
    model = load_object(asset_root / "cube.obj", "box", object_id="c1")
    assert model.id == "c1"
    assert model.category == "box"
    assert model.aabb[0] == pytest.approx(-0.05)
    assert np.allclose(model.center_of_mass, [0, 0, 0], atol=1e-12)
    assert len(model.convex_hull) == 8


def test_load_object_scaling(asset_root):
    model = load_object(asset_root / "cube.obj", "box", scale=2.0)
    assert model.aabb[1] == pytest.approx(0.1)


def test_load_scene_surfaces(asset_root):
    scene = load_scene(
        asset_root / "floor.obj",
        [{"name": "floor",
          "polygon": [[-1, -1, 0], [1, -1, 0], [1, 1, 0], [-1, 1, 0]]}],
        scene_scale=2.0)
    assert scene.scene_scale == 2.0
    surf = scene.surface("floor")
    assert np.allclose(surf.normal, [0, 0, 1])
    assert surf.plane_offset() == pytest.approx(0.0)


def test_load_scene_rejects_offset_surface(asset_root):
    with pytest.raises(ValidationError):
        load_scene(
            asset_root / "floor.obj",
            [{"name": "floor",
              "polygon": [[-1, -1, 0.5], [1, -1, 0.5], [1, 1, 0.5],
                          [-1, 1, 0.5]]}],
            scene_scale=2.0)


def test_load_scene_rejects_steep_surface(asset_root, tmp_path):
    # a wall: planar, on-mesh, but facing sideways
    wall = [np.array([0, 0, 0.0]), np.array([0, 1, 0.0]),
            np.array([0, 1, 1.0]), np.array([0, 0, 1.0])]
    write_faceted_obj(tmp_path / "wall.obj", [wall], normal_hints=[(1, 0, 0)])
    with pytest.raises(ValidationError):
        load_scene(tmp_path / "wall.obj",
                   [{"name": "w", "polygon": [[0, 0, 0], [0, 1, 0],
                                              [0, 1, 1], [0, 0, 1]]}],
                   scene_scale=1.0)


def test_load_scene_rejects_nonplanar_surface(asset_root):
    with pytest.raises(ValidationError):
        load_scene(
            asset_root / "floor.obj",
            [{"name": "floor",
              "polygon": [[-1, -1, 0], [1, -1, 0.3], [1, 1, 0],
                          [-1, 1, 0]]}],
            scene_scale=2.0)


def test_asset_index_loads_library_and_scene(floor_setup):
    library, scene = floor_setup
    assert len(library) == 4
    assert library.categories() == ["box", "crate", "wedge"]
    assert len(library.by_category["box"]) == 2
    assert scene.surface("floor").name == "floor"
    with pytest.raises(ValidationError):
        library.get("nope")


def test_asset_index_duplicate_id(tmp_path, asset_root):
    import json
    write_faceted_obj(tmp_path / "c.obj", cube_faces(0.1))
    (tmp_path / "bad.json").write_text(json.dumps({
        "objects": [
            {"id": "x", "category": "box", "path": "c.obj"},
            {"id": "x", "category": "box", "path": "c.obj"},
        ]}))
    with pytest.raises(ValidationError):
        load_asset_index(tmp_path / "bad.json")


def test_transformed_scales_about_origin(asset_root):
    mesh = load_obj(asset_root / "tet.obj")
    scaled = mesh.transformed(3.0)
    assert np.allclose(scaled.vertices, mesh.vertices * 3.0)
    assert np.array_equal(scaled.faces, mesh.faces)
    assert np.allclose(scaled.normals, mesh.normals)


def test_tet_write_orientation():
    faces = tet_faces(0.06, 0.09)
    # base winding must give an outward (downward) normal via the writer
    base = np.asarray(faces[0])
    centroid = np.concatenate([np.asarray(f) for f in faces]).mean(axis=0)
    n = np.cross(base[1] - base[0], base[2] - base[0])
    out = base.mean(axis=0) - centroid
    # the writer flips when needed; after the flip the normal points out
    assert np.dot(n, out) != 0
