import json
import math

import pytest

from gofisim.roadmap import MapError, load_map, map_from_dict, save_map
from gofisim.scenarios import map_path


def minimal_map() -> dict:
    return {
        "lanes": [
            {"id": "a", "centerline": [[0, 0], [50, 0]], "width": 3.5,
             "successors": [], "left_neighbor": None, "right_neighbor": "b",
             "speed_limit": 10.0},
            {"id": "b", "centerline": [[0, -3.5], [50, -3.5]], "width": 3.5,
             "successors": [], "left_neighbor": "a", "right_neighbor": None,
             "speed_limit": 8.0},
        ],
        "goals": [{"id": "g", "location": [48.0, 0.0], "target_speed": 10.0,
                   "radius": 2.0}],
        "occlusion_sites": [],
        "obstructions": [],
    }


def bundled(name):
    import importlib.resources

    with importlib.resources.as_file(map_path(name)) as p:
        return load_map(p)


def test_minimal_two_lane_map_loads(tmp_path):
    path = tmp_path / "map.json"
    path.write_text(json.dumps(minimal_map()))
    road = load_map(path)
    assert len(road.lanes) == 2
    assert road.k == 0


def test_scenario3_map_has_one_site_and_building():
    road = bundled("scenario3")
    assert road.k == 1
    assert len(road.obstructions) == 1
    assert {g.id for g in road.goals} >= {"g1", "g2", "ge"}


def test_dangling_successor_rejected(tmp_path):
    data = minimal_map()
    data["lanes"][0]["successors"] = ["missing"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(MapError, match="missing"):
        load_map(path)


def test_unknown_keys_rejected():
    data = minimal_map()
    data["extra_stuff"] = 1
    with pytest.raises(MapError, match="unknown keys"):
        map_from_dict(data)


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"lanes": [,]}')
    with pytest.raises(MapError, match="line"):
        load_map(path)


def test_goal_off_road_rejected():
    data = minimal_map()
    data["goals"][0]["location"] = [25.0, 40.0]
    with pytest.raises(MapError, match="corridor"):
        map_from_dict(data)


@pytest.mark.parametrize("name", ["scenario1", "scenario2", "scenario3",
                                  "scenario4", "toy_straight", "toy_junction",
                                  "toy_blocked"])
def test_roundtrip_preserves_semantic_content(name, tmp_path):
    road = bundled(name)
    out = tmp_path / "roundtrip.json"
    save_map(road, out)
    again = load_map(out)
    assert again.to_dict() == road.to_dict()


def test_lane_frame_straight_geometry():
    road = map_from_dict(minimal_map())
    (x, y), h, k = road.lane_frame("a", 5.0)
    assert (x, y) == pytest.approx((5.0, 0.0))
    assert h == pytest.approx(0.0)
    assert k == pytest.approx(0.0)


def test_lane_frame_at_length_is_last_point():
    road = map_from_dict(minimal_map())
    lane = road.lanes["a"]
    (x, y), _, _ = road.lane_frame("a", lane.length)
    assert (x, y) == pytest.approx((50.0, 0.0))


def test_lane_frame_out_of_range():
    road = map_from_dict(minimal_map())
    with pytest.raises(ValueError, match="arclength"):
        road.lane_frame("a", 51.5)


def test_occludes_segment_through_box():
    road = map_from_dict(minimal_map())
    assert road.occludes((0, 0), (10, 0), [(5.0, 0.0, 0.0, 2.0, 2.0)])
    assert not road.occludes((0, 0), (10, 0), [(5.0, 5.0, 0.0, 2.0, 2.0)])


def test_occludes_building_line_of_sight_scenario3():
    road = bundled("scenario3")
    ego = (1.9, -12.0)
    far_car = (-30.0, -1.75)
    near_car = (-4.0, -1.75)
    assert road.occludes(ego, far_car)
    assert not road.occludes(ego, near_car)


def test_occludes_symmetric():
    road = bundled("scenario3")
    a, b = (1.9, -12.0), (-30.0, -1.75)
    assert road.occludes(a, b) == road.occludes(b, a)
    c, d = (0.0, 0.0), (10.0, 0.0)
    box = [(5.0, 0.4, 0.3, 2.0, 1.0)]
    assert road.occludes(c, d, box) == road.occludes(d, c, box)
