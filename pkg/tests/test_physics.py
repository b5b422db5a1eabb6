"""Quasi-static settling, penetration, and support stability."""

import dataclasses
import json

import numpy as np
import pytest

from sceneforge import (ContactReport, Layout, PhysicsConfig, Placement,
                        penetration_check, physics_accept, settle,
                        stability_check)

import oracles
from conftest import random_unit_quat

IDENT = np.array([1.0, 0.0, 0.0, 0.0])


def _place(library, model_id, loc, pose=IDENT, tag=None):
    model = library.get(model_id)
    if tag is not None:
        model = dataclasses.replace(model, id=f"{model.id}#{tag}")
    return Placement(object=model, pose=np.asarray(pose, dtype=np.float64),
                     location=np.asarray(loc, dtype=np.float64))


def _layout(scene, *placements):
    return Layout(scene=scene, placements=tuple(placements))


# --- penetration against the Minkowski-difference oracle -----------------------

def test_sat_depth_matches_minkowski_oracle(floor_setup):
    library, scene = floor_setup
    rng = np.random.default_rng(31)
    models = ["box-a", "crate-a", "wedge-a", "box-b"]
    checked_overlapping = 0
    for trial in range(120):
        ida, idb = rng.choice(models, size=2, replace=False)
        # float both bodies high above the floor so only the pair matters
        a = _place(library, ida, rng.uniform([-0.1, -0.1, 0.8],
                                             [0.1, 0.1, 0.9]),
                   pose=random_unit_quat(rng), tag=1)
        b = _place(library, idb, rng.uniform([-0.15, -0.15, 0.75],
                                             [0.15, 0.15, 0.95]),
                   pose=random_unit_quat(rng), tag=2)
        max_pen, offenders = penetration_check(_layout(scene, a, b))
        want = oracles.minkowski_penetration(oracles.world_hull(a),
                                             oracles.world_hull(b))
        assert max_pen == pytest.approx(want, abs=1e-9)
        if want > 1e-6:
            checked_overlapping += 1
            assert offenders and offenders[0][2] == pytest.approx(want,
                                                                  abs=1e-9)
    # the sampling volume is chosen so both outcomes actually occur
    assert checked_overlapping > 10


def test_known_overlap_depth(floor_setup):
    library, scene = floor_setup
    # two 0.1 cubes offset 0.08 in x overlap by exactly 0.02
    a = _place(library, "box-a", [0.0, 0.0, 0.5])
    b = _place(library, "box-a", [0.08, 0.0, 0.5], tag=2)
    max_pen, offenders = penetration_check(_layout(scene, a, b))
    assert max_pen == pytest.approx(0.02, abs=1e-12)
    assert {offenders[0][0], offenders[0][1]} == {"box-a", "box-a#2"}


def test_separated_pair_zero_depth(floor_setup):
    library, scene = floor_setup
    a = _place(library, "box-a", [0.0, 0.0, 0.5])
    b = _place(library, "box-a", [0.25, 0.0, 0.5], tag=2)
    max_pen, offenders = penetration_check(_layout(scene, a, b))
    assert max_pen == 0.0 and offenders == []


def test_surface_penetration_straddle(floor_setup):
    library, scene = floor_setup
    # a 0.1 cube centered on the floor plane sticks 0.05 below it
    a = _place(library, "box-a", [0.0, 0.0, 0.0])
    max_pen, offenders = penetration_check(_layout(scene, a))
    assert max_pen == pytest.approx(0.05, abs=1e-12)
    assert offenders[0][1] == "scene:floor"


def test_below_higher_board_is_legitimate(shelf_setup):
    library, scene = shelf_setup
    # resting on the floor underneath the shelf: no offense against the
    # shelf plane, the object is simply on the level below
    a = _place(library, "box-a", [0.0, 0.0, 0.05])
    max_pen, offenders = penetration_check(_layout(scene, a))
    assert max_pen == 0.0 and offenders == []


# --- settling -------------------------------------------------------------------

def test_drop_to_floor_exact(floor_setup):
    library, scene = floor_setup
    a = _place(library, "box-a", [0.2, -0.3, 0.47])
    settled, report = settle(_layout(scene, a))
    assert report.settled
    p = settled.placements[0]
    # contact is exact in the solver frame; reconstructing the center
    # leaves at most one rounding ulp
    assert p.location[2] == pytest.approx(0.05, abs=1e-15)
    assert p.location[0] == 0.2 and p.location[1] == -0.3  # xy untouched
    assert oracles.world_hull(p)[:, 2].min() == pytest.approx(0.0, abs=1e-15)


def test_drop_preserves_pose(floor_setup):
    library, scene = floor_setup
    q = random_unit_quat(np.random.default_rng(32))
    a = _place(library, "box-a", [0.0, 0.0, 0.6], pose=q)
    settled, _ = settle(_layout(scene, a))
    assert np.array_equal(settled.placements[0].pose, q)
    assert oracles.world_hull(settled.placements[0])[:, 2].min() == \
        pytest.approx(0.0, abs=1e-12)


def test_stacking_exact_heights(floor_setup):
    library, scene = floor_setup
    # crate (0.16) under, box (0.1) above; both dropped from the air
    crate = _place(library, "crate-a", [0.0, 0.0, 0.4])
    box = _place(library, "box-a", [0.02, 0.01, 0.7])
    settled, report = settle(_layout(scene, crate, box))
    assert report.settled
    by_id = {p.object.id: p for p in settled.placements}
    assert by_id["crate-a"].location[2] == pytest.approx(0.08, abs=1e-15)
    # box bottom exactly on crate top: center = 0.16 + 0.05
    assert by_id["box-a"].location[2] == pytest.approx(0.21, abs=1e-12)
    assert oracles.support_ok(settled, tol=1e-9)


def test_settle_processes_low_objects_first(floor_setup):
    library, scene = floor_setup
    # the box starts lower but hangs over the crate's final position;
    # ascending-height ordering settles the crate first, so the box
    # lands on it instead of tunneling to the floor
    crate = _place(library, "crate-a", [0.0, 0.0, 0.5])
    box = _place(library, "box-a", [0.0, 0.0, 0.3])
    settled, report = settle(_layout(scene, crate, box))
    by_id = {p.object.id: p for p in settled.placements}
    assert by_id["box-a"].location[2] == pytest.approx(0.05)
    # crate cannot pass through the box below it
    assert by_id["crate-a"].location[2] == pytest.approx(0.1 + 0.08,
                                                         abs=1e-12)
    max_pen, _ = penetration_check(settled)
    assert max_pen <= 1e-9


def test_wedge_settles_base_down(floor_setup):
    library, scene = floor_setup
    w = _place(library, "wedge-a", [0.3, 0.3, 0.25])
    settled, report = settle(_layout(scene, w))
    assert report.settled
    # the tetrahedron's base sits at local z=0, so the origin lands on 0
    assert settled.placements[0].location[2] == pytest.approx(0.0, abs=0.0)


def test_settle_is_idempotent(floor_setup, kb_flat):
    library, scene = floor_setup
    rng = np.random.default_rng(33)
    for layout in __import__("conftest").random_layouts(
            library, scene, rng, 8, max_objects=5):
        once, _ = settle(layout)
        twice, report2 = settle(once)
        for p1, p2 in zip(once.placements, twice.placements):
            assert abs(p1.location[2] - p2.location[2]) < 1e-9
        assert report2.settled or report2.unsupported


def test_settle_never_moves_up(floor_setup):
    library, scene = floor_setup
    # already resting on the floor: settle must not lift or jitter it
    a = _place(library, "box-a", [0.0, 0.0, 0.05])
    settled, report = settle(_layout(scene, a))
    assert settled.placements[0].location[2] == 0.05
    assert report.settled


def test_unsupported_outside_scene(floor_setup):
    library, scene = floor_setup
    a = _place(library, "box-a", [5.0, 5.0, 0.3])
    settled, report = settle(_layout(scene, a))
    assert not report.settled
    assert report.unsupported == ("box-a",)


def test_settle_contact_normals(floor_setup):
    library, scene = floor_setup
    a = _place(library, "box-a", [0.0, 0.0, 0.3])
    settled, report = settle(_layout(scene, a))
    floor_contacts = [c for c in report.contacts if c.b == "scene:floor"]
    assert len(floor_contacts) == 1
    c = floor_contacts[0]
    assert c.a == "box-a"
    assert np.allclose(c.normal, [0, 0, 1])
    assert np.allclose(np.asarray(c.points)[:, 2], 0.0, atol=1e-12)
    assert len(c.points) == 4   # four bottom corners rest on the plane


def test_stacked_contact_between_bodies(floor_setup):
    library, scene = floor_setup
    crate = _place(library, "crate-a", [0.0, 0.0, 0.08])
    box = _place(library, "box-a", [0.0, 0.0, 0.7])
    settled, report = settle(_layout(scene, crate, box))
    pair = [c for c in report.contacts if c.a == "box-a" and c.b == "crate-a"]
    assert pair
    assert pair[0].normal[2] == pytest.approx(1.0)


# --- stability ---------------------------------------------------------------------

def test_stability_flat_rest_is_stable(floor_setup):
    library, scene = floor_setup
    a = _place(library, "box-a", [0.0, 0.0, 0.4])
    settled, report = settle(_layout(scene, a))
    stable = stability_check(settled, report)
    assert stable == {"box-a": True}


def test_stability_overhang_fails(floor_setup):
    library, scene = floor_setup
    crate = _place(library, "crate-a", [0.0, 0.0, 0.08])
    # box-b is 0.06 wide; centered at x=0.10 its footprint spans
    # [0.07, 0.13] but the crate top ends at x=0.08: the center of mass
    # hangs 0.02 beyond the support hull
    box = _place(library, "box-b", [0.10, 0.0, 0.5])
    settled, report = settle(_layout(scene, crate, box))
    stable = stability_check(settled, report)
    assert stable["crate-a"] is True
    assert stable["box-b"] is False
    accepted, _, final_report = physics_accept(_layout(scene, crate, box))
    assert not accepted
    assert "box-b" in final_report.unsupported
    assert not final_report.settled


def test_stability_margin_allows_point_contact_under_com(floor_setup):
    library, scene = floor_setup
    # tetrahedron flipped apex-down: a single contact point lies exactly
    # under the center of mass, which the stability margin must accept
    flip = np.array([0.0, 1.0, 0.0, 0.0])   # 180 degrees about x
    w = _place(library, "wedge-a", [0.0, 0.0, 0.4], pose=flip)
    settled, report = settle(_layout(scene, w))
    contacts = [c for c in report.contacts if c.b == "scene:floor"]
    assert len(contacts) == 1 and len(contacts[0].points) == 1
    stable = stability_check(settled, report)
    assert stable["wedge-a"] is True


def test_stability_point_contact_off_center_fails(floor_setup):
    library, scene = floor_setup
    # same flipped tetrahedron, handed a doctored report whose single
    # contact point sits 1 cm off the center line: outside the margin
    flip = np.array([0.0, 1.0, 0.0, 0.0])
    w = _place(library, "wedge-a", [0.0, 0.0, 0.4], pose=flip)
    settled, report = settle(_layout(scene, w))
    from sceneforge import Contact
    shifted = ContactReport(
        max_penetration=0.0,
        contacts=(Contact(a="wedge-a", b="scene:floor",
                          points=np.array([[0.01, 0.0, 0.0]]),
                          normal=np.array([0.0, 0.0, 1.0])),),
        settled=True)
    stable = stability_check(settled, shifted)
    assert stable["wedge-a"] is False


# --- the full gate ------------------------------------------------------------------

def test_physics_accept_good_layout(floor_setup):
    library, scene = floor_setup
    a = _place(library, "box-a", [-0.4, -0.4, 0.3])
    b = _place(library, "crate-a", [0.4, -0.4, 0.5])
    accepted, settled, report = physics_accept(_layout(scene, a, b))
    assert accepted
    assert report.settled
    assert report.max_penetration <= 1e-3 * scene.scene_scale
    assert report.unsupported == ()
    assert oracles.support_ok(settled, tol=1e-9)


def test_physics_accept_rejects_lateral_overlap(floor_setup):
    library, scene = floor_setup
    # settling only translates downward, so a lateral overlap survives
    # and must fail the penetration bound
    a = _place(library, "box-a", [0.0, 0.0, 0.05])
    b = _place(library, "box-a", [0.06, 0.0, 0.05], tag=2)
    accepted, settled, report = physics_accept(_layout(scene, a, b))
    assert not accepted
    assert report.max_penetration == pytest.approx(0.04, abs=1e-9)
    assert report.offenders


def test_physics_accept_penetration_bound(floor_setup):
    library, scene = floor_setup
    cfg = PhysicsConfig()
    bound = cfg.penetration_factor * scene.scene_scale
    a = _place(library, "box-a", [0.0, 0.0, 0.05])
    # overlap at half the bound: accepted
    b = _place(library, "box-a", [0.1 - bound / 2, 0.0, 0.05], tag=2)
    accepted, _, report = physics_accept(_layout(scene, a, b))
    assert report.max_penetration == pytest.approx(bound / 2, abs=1e-12)
    assert accepted
    # twice the bound: rejected
    c = _place(library, "box-a", [0.1 - bound * 2, 0.0, 0.05], tag=3)
    accepted2, _, report2 = physics_accept(_layout(scene, a, c))
    assert not accepted2
    assert report2.max_penetration == pytest.approx(2 * bound, abs=1e-12)


def test_contact_report_validation():
    with pytest.raises(ValueError):
        ContactReport(max_penetration=-1.0)
    with pytest.raises(ValueError):
        ContactReport(max_penetration=0.0, settled=True,
                      unsupported=("x",))


def test_contact_report_json(floor_setup):
    library, scene = floor_setup
    a = _place(library, "box-a", [0.0, 0.0, 0.3])
    _, report = settle(_layout(scene, a))
    data = json.loads(report.to_json())
    assert data["settled"] is True
    assert data["contacts"][0]["b"] == "scene:floor"
    assert data["max_penetration"] == 0.0
