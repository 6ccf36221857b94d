"""Generators for the bundled scenario and toy map files.

Maps are declarative JSON (see roadmap.py for the schema).  The geometry is
authored here once and written under gofisim/maps/; regenerate with
`python -m gofisim.mapgen <outdir>` after editing.
"""

from __future__ import annotations

import json
import math
import os
import sys


def _hermite(p0, h0, p1, h1, n=15):
    """Smooth connector polyline with prescribed end tangents."""
    d = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
    m0 = (d * math.cos(h0), d * math.sin(h0))
    m1 = (d * math.cos(h1), d * math.sin(h1))
    pts = []
    for i in range(n):
        t = i / (n - 1)
        t2, t3 = t * t, t * t * t
        a = 2 * t3 - 3 * t2 + 1
        b = t3 - 2 * t2 + t
        c = -2 * t3 + 3 * t2
        e = t3 - t2
        pts.append([
            round(a * p0[0] + b * m0[0] + c * p1[0] + e * m1[0], 3),
            round(a * p0[1] + b * m0[1] + c * p1[1] + e * m1[1], 3),
        ])
    return pts


def _line(p0, p1):
    return [[round(p0[0], 3), round(p0[1], 3)], [round(p1[0], 3), round(p1[1], 3)]]


def _lane(lid, centerline, width=3.5, successors=(), left=None, right=None, limit=10.0):
    return {
        "id": lid, "centerline": centerline, "width": width,
        "successors": list(successors), "left_neighbor": left,
        "right_neighbor": right, "speed_limit": limit,
    }


E, N, W, S = 0.0, math.pi / 2, math.pi, -math.pi / 2


def scenario1_map() -> dict:
    """Two-way road; pedestrian crossing east of a left-exit junction.

    The westbound non-ego yields to a pedestrian crossing at x=30 that the
    eastbound ego cannot see behind the non-ego's body.
    """
    lanes = [
        _lane("e1", _line((-45, -1.75), (70, -1.75)), limit=10.0),
        _lane("w1", _line((70, 1.75), (12, 1.75)), successors=["wc_straight", "wc_left"], limit=10.0),
        _lane("wc_straight", _line((12, 1.75), (8, 1.75)), successors=["w2"], limit=10.0),
        _lane("w2", _line((8, 1.75), (-45, 1.75)), limit=10.0),
        _lane("wc_left", _hermite((12, 1.75), W, (8.25, -6), S), successors=["s_out"], limit=7.0),
        _lane("s_out", _line((8.25, -6), (8.25, -40)), limit=8.0),
        # pedestrian crossing path, north to south across both lanes
        _lane("ped_path", _line((30, 9.0), (30, -7.0)), width=1.0, limit=2.0),
    ]
    goals = [
        {"id": "g1", "location": [-42.0, 1.75], "target_speed": 9.0, "radius": 3.0},
        {"id": "g2", "location": [8.25, -37.5], "target_speed": 7.0, "radius": 3.0},
        {"id": "ge", "location": [55.0, -1.75], "target_speed": 9.0, "radius": 2.5},
    ]
    sites = [{
        "id": "ped", "pose": [30.0, 9.0, -math.pi / 2],
        "behavior": {"kind": "constant_velocity", "speed": 1.4, "lane": "ped_path"},
        "footprint": [0.6, 0.6],
    }]
    return {"lanes": lanes, "goals": goals, "occlusion_sites": sites, "obstructions": []}


def scenario2_map() -> dict:
    """One-way dual carriageway with a slow right lane and a right-side exit.

    A stopped vehicle in the fast left lane (occluded from the following ego
    by the non-ego's body) forces the non-ego onto the slow lane and back.
    """
    lanes = [
        _lane("l1", _line((-30, 1.75), (100, 1.75)), right="r1a", limit=10.0),
        _lane("r1a", _line((-30, -1.75), (55, -1.75)),
              successors=["rc_straight", "rc_exit"], left="l1", limit=6.0),
        _lane("rc_straight", _line((55, -1.75), (59, -1.75)), successors=["r1b"], limit=6.0),
        _lane("r1b", _line((59, -1.75), (100, -1.75)), left="l1", limit=6.0),
        _lane("rc_exit", _hermite((55, -1.75), E, (58.9, -8), S), successors=["s2"], limit=6.0),
        _lane("s2", _line((58.9, -8), (58.9, -35)), limit=8.0),
    ]
    goals = [
        {"id": "g1", "location": [97.5, 1.75], "target_speed": 10.0, "radius": 3.0},
        {"id": "g2", "location": [58.9, -33.0], "target_speed": 8.0, "radius": 3.0},
        {"id": "ge", "location": [82.0, 1.75], "target_speed": 10.0, "radius": 3.0},
    ]
    sites = [{
        "id": "stopped_car", "pose": [45.0, 1.75, 0.0],
        "behavior": {"kind": "stationary"},
        "footprint": [4.0, 1.8],
    }]
    return {"lanes": lanes, "goals": goals, "occlusion_sites": sites, "obstructions": []}


def scenario3_map() -> dict:
    """T-junction with a building hiding eastbound traffic from the side road.

    The westbound non-ego waits at the junction to turn left across an
    oncoming eastbound vehicle that the northbound ego cannot see.
    """
    lanes = [
        _lane("me1", _line((-60, -1.75), (-8, -1.75)), successors=["mec"], limit=10.0),
        _lane("mec", _line((-8, -1.75), (8, -1.75)), successors=["me2"], limit=10.0),
        _lane("me2", _line((8, -1.75), (55, -1.75)), limit=10.0),
        _lane("mw1", _line((60, 1.75), (8, 1.75)),
              successors=["mwc_straight", "mwc_left"], limit=10.0),
        _lane("mwc_straight", _line((8, 1.75), (-8, 1.75)), successors=["mw2"], limit=10.0),
        _lane("mw2", _line((-8, 1.75), (-60, 1.75)), limit=10.0),
        _lane("mwc_left", _hermite((8, 1.75), W, (-1.9, -8), S), successors=["ss"], limit=6.0),
        _lane("ss", _line((-1.9, -8), (-1.9, -45)), limit=8.0),
        _lane("sn", _line((1.9, -45), (1.9, -8)),
              successors=["snc_left", "snc_right"], limit=8.0),
        _lane("snc_left", _hermite((1.9, -8), N, (-8, 1.75), W), successors=["mw2"], limit=6.0),
        _lane("snc_right", _hermite((1.9, -8), N, (8, -1.75), E), successors=["me2"], limit=6.0),
    ]
    goals = [
        {"id": "g1", "location": [-1.9, -42.5], "target_speed": 8.0, "radius": 3.0},
        {"id": "g2", "location": [-50.0, 1.75], "target_speed": 10.0, "radius": 3.0},
        {"id": "ge", "location": [40.0, -1.75], "target_speed": 10.0, "radius": 3.0},
    ]
    sites = [{
        "id": "oncoming", "pose": [-48.0, -1.75, 0.0],
        "behavior": {"kind": "constant_velocity", "speed": 9.5, "lane": "me1"},
        "footprint": [4.0, 1.8],
    }]
    obstructions = [
        [[-24.0, -13.0], [-5.0, -13.0], [-5.0, -4.2], [-24.0, -4.2]],
    ]
    return {"lanes": lanes, "goals": goals, "occlusion_sites": sites,
            "obstructions": obstructions}


def scenario4_map() -> dict:
    """Crossroads, then a second junction farther east.

    A crawling jam tail beyond the second junction (hidden from the south
    approach by a corner building) makes the eastbound non-ego brake and
    creep: the slow-down is also consistent with turning off at the second
    junction.  The ego crosses the eastbound lane heading straight north.
    """
    lanes = [
        _lane("e1", _line((-55, -1.75), (-2, -1.75)), successors=["ec_straight"], limit=10.0),
        _lane("ec_straight", _line((-2, -1.75), (6, -1.75)), successors=["e2a"], limit=10.0),
        _lane("e2a", _line((6, -1.75), (62, -1.75)),
              successors=["e2c_straight", "e2c_right"], limit=10.0),
        _lane("e2c_straight", _line((62, -1.75), (68, -1.75)), successors=["e3"], limit=10.0),
        _lane("e3", _line((68, -1.75), (92, -1.75)), limit=10.0),
        _lane("e2c_right", _hermite((62, -1.75), E, (65.9, -8), S), successors=["s3"], limit=5.0),
        _lane("s3", _line((65.9, -8), (65.9, -35)), limit=8.0),
        _lane("sn", _line((1.9, -40), (1.9, -7)),
              successors=["snc_straight", "snc_left"], limit=8.0),
        _lane("snc_straight", _line((1.9, -7), (1.9, 7)), successors=["nn"], limit=8.0),
        _lane("nn", _line((1.9, 7), (1.9, 85)), limit=8.0),
        _lane("snc_left", _hermite((1.9, -7), N, (-8, 1.75), W), successors=["w2"], limit=6.0),
        _lane("w1", _line((92, 1.75), (6, 1.75)), successors=["wc_straight"], limit=10.0),
        _lane("wc_straight", _line((6, 1.75), (-8, 1.75)), successors=["w2"], limit=10.0),
        _lane("w2", _line((-8, 1.75), (-55, 1.75)), limit=10.0),
    ]
    goals = [
        {"id": "g1", "location": [70.0, -1.75], "target_speed": 10.0, "radius": 3.0},
        {"id": "g2", "location": [65.9, -33.0], "target_speed": 8.0, "radius": 3.0},
        {"id": "ge", "location": [1.9, 74.0], "target_speed": 8.0, "radius": 3.0},
    ]
    sites = [{
        "id": "queued_car", "pose": [65.0, -1.75, 0.0],
        "behavior": {"kind": "constant_velocity", "speed": 0.3, "lane": "e2c_straight"},
        "footprint": [4.0, 1.8],
    }]
    obstructions = [
        [[6.0, -12.0], [58.0, -12.0], [58.0, -4.2], [6.0, -4.2]],
    ]
    return {"lanes": lanes, "goals": goals, "occlusion_sites": sites,
            "obstructions": obstructions}


def toy_straight_map() -> dict:
    """Two parallel same-direction lanes, goal at the fast lane's end."""
    lanes = [
        _lane("a", _line((0, 1.75), (70, 1.75)), right="b", limit=10.0),
        _lane("b", _line((0, -1.75), (70, -1.75)), left="a", limit=6.0),
    ]
    goals = [{"id": "g1", "location": [66.0, 1.75], "target_speed": 10.0, "radius": 3.0}]
    return {"lanes": lanes, "goals": goals, "occlusion_sites": [], "obstructions": []}


def toy_junction_map() -> dict:
    """Approach lane with left/straight/right exits; goal down the left exit."""
    lanes = [
        _lane("in", _line((-40, 0), (-6, 0)),
              successors=["cl", "cs", "cr"], limit=9.0),
        _lane("cl", _hermite((-6, 0), E, (3, 9), N), successors=["out_l"], limit=6.0),
        _lane("cs", _line((-6, 0), (6, 0)), successors=["out_s"], limit=9.0),
        _lane("cr", _hermite((-6, 0), E, (3, -9), S), successors=["out_r"], limit=6.0),
        _lane("out_l", _line((3, 9), (3, 40)), limit=9.0),
        _lane("out_s", _line((6, 0), (45, 0)), limit=9.0),
        _lane("out_r", _line((3, -9), (3, -40)), limit=9.0),
    ]
    goals = [
        {"id": "gl", "location": [3.0, 34.0], "target_speed": 9.0, "radius": 3.0},
        {"id": "gs", "location": [40.0, 0.0], "target_speed": 9.0, "radius": 3.0},
    ]
    return {"lanes": lanes, "goals": goals, "occlusion_sites": [], "obstructions": []}


def toy_blocked_map() -> dict:
    """Two-lane road with a candidate stopped vehicle in the fast lane."""
    lanes = [
        _lane("a", _line((0, 1.75), (80, 1.75)), right="b", limit=10.0),
        _lane("b", _line((0, -1.75), (80, -1.75)), left="a", limit=7.0),
    ]
    goals = [{"id": "g1", "location": [76.0, 1.75], "target_speed": 10.0, "radius": 3.0}]
    sites = [{
        "id": "block", "pose": [40.0, 1.75, 0.0],
        "behavior": {"kind": "stationary"},
        "footprint": [4.0, 1.8],
    }]
    return {"lanes": lanes, "goals": goals, "occlusion_sites": sites, "obstructions": []}


ALL_MAPS = {
    "scenario1": scenario1_map,
    "scenario2": scenario2_map,
    "scenario3": scenario3_map,
    "scenario4": scenario4_map,
    "toy_straight": toy_straight_map,
    "toy_junction": toy_junction_map,
    "toy_blocked": toy_blocked_map,
}


def write_all(outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    for name, fn in ALL_MAPS.items():
        path = os.path.join(outdir, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(fn(), fh, indent=1)
            fh.write("\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "maps")
    write_all(target)
