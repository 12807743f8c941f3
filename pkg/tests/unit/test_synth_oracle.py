import math
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from canopyvol.exceptions import InputValidationError, PlacementError, SceneError
from canopyvol.mask_raster import GeoTransform, LabelClass, connected_components, shadow_candidates
from canopyvol.solar_geometry import GeoLocation, SolarPosition, UtcInstant
from canopyvol.synth_oracle import (
    GROUND_TRUTH_COLUMNS,
    SceneSpec,
    TreeSpec,
    apportion,
    ground_truth_frame,
    monte_carlo_split,
    random_scene,
    render_scene,
    shadow_distance_m,
    write_ground_truth_csv,
)
from canopyvol.tree_metrics import HeightMode, HeightModel, measure_scene_detailed

GSD = 0.05
SUN = SolarPosition.from_angles(60.0, 135.0)
SUN_SOUTH = SolarPosition.from_angles(60.0, 180.0)
ANY_INSTANT = UtcInstant(2022, 5, 22, 7, 46, 0)
ANY_PLACE = GeoLocation(43.7131, 10.5825)


def _height_tolerance(height: float, sun: SolarPosition, gsd: float) -> float:
    tan_elev = math.tan(math.radians(sun.elevation_deg))
    return max(2 * gsd * max(tan_elev, 1 / tan_elev), 0.02 * height)


def test_round_trip_recovers_geometry_and_heights():
    for seed in range(20):
        scene = random_scene(10, (80.0, 80.0), GSD, SUN, seed)
        labels, _ = render_scene(scene)
        d = scene.shadow_direction

        result = measure_scene_detailed(labels, GeoTransform.square(GSD), ANY_INSTANT, ANY_PLACE, HeightModel(trunk_offset_m=0.0), sun=SUN)
        crowns = connected_components(labels, LabelClass.CROWN)
        shadows = {s.id: s for s in connected_components(labels, LabelClass.SHADOW)}

        assert len(crowns) == len(scene.trees) == 10, seed
        assert len(shadows) == 10, seed
        assert result.warnings == [], seed

        for crown, pairing, record in zip(crowns, result.pairings, result.records, strict=True):
            cx, cy = crown.centroid_px
            tree = min(scene.trees, key=lambda t: math.hypot(t.base_x_m - cx * GSD, t.base_y_m - cy * GSD))
            distance = scene.shadow_distance(tree)

            # the paired shadow is this tree's: it holds the strip's tip region
            tip_x = int((tree.base_x_m + d[0] * (distance - 2 * GSD)) / GSD)
            tip_y = int((tree.base_y_m + d[1] * (distance - 2 * GSD)) / GSD)
            paired = shadows[pairing.shadow_id]
            assert np.any((paired.xs == tip_x) & (paired.ys == tip_y)), (seed, crown.id)

            assert abs(record.shadow_length_m - distance) <= 2 * GSD, (seed, crown.id)
            assert abs(record.height_m - tree.height_m) <= _height_tolerance(tree.height_m, SUN, GSD), (seed, crown.id)


def test_single_tree_shadow_tip():
    sun = SolarPosition.from_angles(45.0, 90.0)
    scene = SceneSpec(6.0, 6.0, 0.01, (TreeSpec(4.5, 3.0, 1.0, 2.0),), sun)
    labels, _ = render_scene(scene)

    result = measure_scene_detailed(labels, GeoTransform.square(0.01), ANY_INSTANT, ANY_PLACE, HeightModel(trunk_offset_m=0.0), sun=sun)

    (record,) = result.records
    assert record.shadow_length_m == pytest.approx(2.0, abs=0.02)
    assert record.height_m == pytest.approx(2.0, abs=0.02)
    assert record.crown_area_m2 == pytest.approx(math.pi, abs=2 * math.pi * 0.01)


def test_physical_mode_round_trip():
    sun = SolarPosition.from_angles(35.0, 200.0)
    scene = random_scene(6, (60.0, 60.0), GSD, sun, 3, height_mode=HeightMode.PHYSICAL)
    labels, _ = render_scene(scene)

    result = measure_scene_detailed(labels, GeoTransform.square(GSD), ANY_INSTANT, ANY_PLACE, HeightModel(mode="physical", trunk_offset_m=0.0), sun=sun)

    recovered = sorted(rec.height_m for rec in result.records)
    expected = sorted(tree.height_m for tree in scene.trees)
    for got, want in zip(recovered, expected, strict=True):
        assert abs(got - want) <= _height_tolerance(want, sun, GSD)


def test_rendered_rgb_thresholds_to_shadow_labels():
    for seed in (0, 1, 2):
        scene = random_scene(8, (50.0, 50.0), GSD, SUN, seed)
        labels, rgb = render_scene(scene)

        disagreements = np.count_nonzero(shadow_candidates(rgb, 0.5) != labels.mask(LabelClass.SHADOW))
        assert disagreements == 0


def test_rendering_is_deterministic():
    first = render_scene(random_scene(10, (80.0, 80.0), GSD, SUN, 1))
    second = render_scene(random_scene(10, (80.0, 80.0), GSD, SUN, 1))

    assert first[0] == second[0]
    assert np.array_equal(first[1].pixels, second[1].pixels)


def test_shadow_distance_laws():
    tree = TreeSpec(10.0, 10.0, 1.0, 2.0)
    sun = SolarPosition.from_angles(60.0, 180.0)

    assert shadow_distance_m(tree, sun, "paper") == pytest.approx(2.0 * math.sqrt(3))
    assert shadow_distance_m(tree, sun, "physical") == pytest.approx(2.0 / math.sqrt(3))


def test_scene_validation():
    inside = TreeSpec(10.0, 10.0, 1.0, 2.0)

    with pytest.raises(SceneError, match="elevation"):
        SceneSpec(20.0, 20.0, GSD, (inside,), SolarPosition.from_angles(88.0, 180.0))
    with pytest.raises(SceneError, match="shadow exits"):
        # sun in the south, shadow runs north (toward y = 0) by 2 * tan(60) = 3.46 m
        SceneSpec(20.0, 20.0, GSD, (TreeSpec(10.0, 3.0, 1.0, 2.0),), SUN_SOUTH)
    with pytest.raises(SceneError, match="overlap"):
        SceneSpec(20.0, 20.0, GSD, (inside, TreeSpec(11.0, 10.0, 1.0, 2.0)), SUN_SOUTH)
    with pytest.raises(SceneError, match="leaves"):
        SceneSpec(20.0, 20.0, GSD, (TreeSpec(0.5, 10.0, 1.0, 2.0),), SUN_SOUTH)
    with pytest.raises(SceneError):
        TreeSpec(1.0, 1.0, 0.0, 2.0)


def test_crowns_overwrite_shadows():
    scene = SceneSpec(20.0, 20.0, 0.1, (TreeSpec(10.0, 12.0, 1.5, 2.0),), SUN_SOUTH)
    labels, _ = render_scene(scene)

    # base pixel is crown even though the shadow strip starts there
    assert labels.labels[120, 100] == LabelClass.CROWN
    # shadow runs north: pixel well beyond the crown toward y = 0
    assert labels.labels[90, 100] == LabelClass.SHADOW
    assert labels.labels[145, 100] == LabelClass.BACKGROUND


def test_random_scene_reports_infeasible_density():
    with pytest.raises(PlacementError) as exc_info:
        random_scene(200, (10.0, 10.0), GSD, SUN, 0, max_attempts=500)

    assert "trees/ha" in str(exc_info.value)
    assert exc_info.value.details["requested"] == 200


def test_random_scene_respects_separation_constraints():
    for seed in (0, 1, 2):
        scene = random_scene(10, (40.0, 40.0), GSD, SUN, seed)

        assert len(scene.trees) == 10
        for tree in scene.trees:
            assert 0.8 <= tree.crown_radius_m <= 2.0
            assert 1.5 <= tree.height_m <= 4.0
        for i, a in enumerate(scene.trees):
            for b in scene.trees[i + 1 :]:
                spacing = math.hypot(a.base_x_m - b.base_x_m, a.base_y_m - b.base_y_m)
                assert spacing >= 2 * (a.crown_radius_m + b.crown_radius_m)


def test_random_scene_with_no_trees():
    labels, _ = render_scene(random_scene(0, (10.0, 10.0), GSD, SUN, 0))

    assert not labels.labels.any()


def test_random_scene_is_seeded():
    a = random_scene(5, (50.0, 50.0), GSD, SUN, 42)
    b = random_scene(5, (50.0, 50.0), GSD, SUN, 42)
    c = random_scene(5, (50.0, 50.0), GSD, SUN, 43)

    assert a.trees == b.trees
    assert a.trees != c.trees


def test_ground_truth_table(tmp_path: Path):
    scene = random_scene(4, (40.0, 40.0), GSD, SUN, 7)

    frame = ground_truth_frame(scene)
    assert list(frame.columns) == GROUND_TRUTH_COLUMNS
    assert frame["tree_id"].tolist() == [1, 2, 3, 4]

    path = tmp_path / "truth.csv"
    write_ground_truth_csv(scene, path)
    loaded = pd.read_csv(path)
    assert loaded["height_m"].tolist() == pytest.approx([t.height_m for t in scene.trees], abs=1e-4)


def test_split_sizes_and_partition():
    items = [f"tile_{i:03d}.png" for i in range(333)]

    split = monte_carlo_split(items, (0.7, 0.2, 0.1), seed=5)

    assert (len(split.train), len(split.val), len(split.test)) == (233, 67, 33)
    assert sorted(split.train + split.val + split.test) == items
    assert not set(split.train) & set(split.val)
    assert not set(split.val) & set(split.test)
    assert monte_carlo_split(items, (0.7, 0.2, 0.1), seed=5) == split
    assert monte_carlo_split(items, (0.7, 0.2, 0.1), seed=6) != split


def test_apportionment():
    assert apportion(333, (0.7, 0.2, 0.1)) == [233, 67, 33]
    assert apportion(10, (0.7, 0.2, 0.1)) == [7, 2, 1]
    assert apportion(0, (0.7, 0.2, 0.1)) == [0, 0, 0]
    for n in range(1, 60):
        assert sum(apportion(n, (0.5, 0.3, 0.2))) == n


def test_split_validates_ratios():
    with pytest.raises(InputValidationError):
        monte_carlo_split(["a"], (0.5, 0.5))
    with pytest.raises(InputValidationError):
        monte_carlo_split(["a"], (0.7, 0.2, 0.2))
    with pytest.raises(InputValidationError):
        monte_carlo_split(["a"], (1.0, 0.0, 0.0))


def test_scene_rejects_shadows_hidden_under_the_crown():
    # paper mode at 8 deg: a 3 m tree casts 0.42 m, inside its own 1.2 m crown
    with pytest.raises(SceneError, match="past the crown edge") as exc_info:
        SceneSpec(20.0, 20.0, GSD, (TreeSpec(10.0, 10.0, 1.2, 3.0),), SolarPosition.from_angles(8.0, 135.0))
    assert exc_info.value.details["tree"] == 1

    # physical mode near the zenith: 3 m / tan(84) = 0.32 m
    with pytest.raises(SceneError, match="past the crown edge"):
        SceneSpec(20.0, 20.0, GSD, (TreeSpec(10.0, 10.0, 1.2, 3.0),), SolarPosition.from_angles(84.0, 135.0), height_mode=HeightMode.PHYSICAL)

    # at least four pixels of shadow must show past the crown
    sun = SolarPosition.from_angles(45.0, 180.0)
    SceneSpec(20.0, 20.0, GSD, (TreeSpec(10.0, 10.0, 1.0, 1.25),), sun)
    with pytest.raises(SceneError):
        SceneSpec(20.0, 20.0, GSD, (TreeSpec(10.0, 10.0, 1.0, 1.15),), sun)


def test_random_scene_refuses_sun_too_low_for_visible_shadows():
    with pytest.raises(SceneError, match="casts a shadow past its crown"):
        random_scene(10, (60.0, 60.0), GSD, SolarPosition.from_angles(8.0, 135.0), 0)


def test_low_sun_scenes_stay_measurable():
    sun = SolarPosition.from_angles(20.0, 135.0)
    for seed in (0, 1):
        scene = random_scene(6, (40.0, 40.0), GSD, sun, seed)
        for tree in scene.trees:
            assert scene.shadow_distance(tree) - tree.crown_radius_m >= 4 * GSD

        labels, _ = render_scene(scene)
        result = measure_scene_detailed(labels, GeoTransform.square(GSD), ANY_INSTANT, ANY_PLACE, HeightModel(trunk_offset_m=0.0), sun=sun)

        assert result.warnings == [], seed
        assert len(result.records) == 6
        assert all(record.height_m is not None for record in result.records)
