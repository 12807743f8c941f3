import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from canopyvol.exceptions import GeometryError, InputValidationError
from canopyvol.mask_raster import GeoTransform, InstanceMask, LabelClass, LabelRaster, crown_area_m2
from canopyvol.solar_geometry import GeoLocation, SolarPosition, UtcInstant, solar_position
from canopyvol.tree_metrics import (
    RECORD_COLUMNS,
    HeightMode,
    HeightModel,
    OffsetTarget,
    PairingParams,
    TreeRecord,
    biovolume_m3,
    inventory_summary,
    measure_scene,
    measure_scene_detailed,
    pair_crowns_shadows,
    records_to_csv,
    records_to_frame,
    records_to_json,
    shadow_length_m,
    tree_height_m,
    write_records_json,
)

ORCHARD = GeoLocation(43.7131, 10.5825)
ACQUISITION = UtcInstant(2022, 5, 22, 7, 46, 0)

# (crown area m2, shadow length m, published height m, published biovolume m3)
PUBLISHED_TREES = [
    (2.326, 2.326, 1.874, 4.360),
    (5.149, 3.382, 3.088, 15.902),
    (8.895, 2.326, 1.874, 16.673),
    (7.754, 3.428, 3.140, 24.349),
    (3.856, 2.288, 1.830, 7.057),
]


def _rect(inst_id: int, cls: LabelClass, x0: int, y0: int, w: int, h: int) -> InstanceMask:
    ys, xs = np.mgrid[y0 : y0 + h, x0 : x0 + w]
    return InstanceMask(inst_id, cls, xs.ravel(), ys.ravel())


def test_published_inventory_with_pinned_sun():
    sun = SolarPosition.from_angles(41.0, 101.3)

    for area, length, height, volume in PUBLISHED_TREES:
        h = tree_height_m(length, sun, HeightModel())
        assert h == pytest.approx(height, abs=0.02)
        assert biovolume_m3(area, h) == pytest.approx(volume, abs=0.05)


def test_published_heights_with_computed_sun():
    sun = solar_position(ACQUISITION, ORCHARD)

    for _, length, height, _ in PUBLISHED_TREES:
        assert tree_height_m(length, sun, HeightModel(mode="paper", trunk_offset_m=0.8)) == pytest.approx(height, abs=0.02)


def test_height_modes_and_offset_targets():
    sun = SolarPosition.from_angles(45.0, 180.0)

    assert tree_height_m(3.0, sun, HeightModel(trunk_offset_m=0.0)) == pytest.approx(3.0)
    assert tree_height_m(3.0, sun, HeightModel(mode=HeightMode.PHYSICAL, trunk_offset_m=0.5)) == pytest.approx(2.5)
    assert tree_height_m(3.0, sun, HeightModel(trunk_offset_m=0.8, offset_on=OffsetTarget.LENGTH)) == pytest.approx(2.2)
    # short shadows clamp at zero rather than going negative
    assert tree_height_m(0.2, sun, HeightModel()) == 0.0
    assert tree_height_m(0.5, sun, HeightModel(offset_on="length")) == 0.0


def test_height_is_monotone_in_shadow_length():
    sun = SolarPosition.from_angles(41.0, 101.3)
    for mode in HeightMode:
        heights = [tree_height_m(length, sun, HeightModel(mode=mode)) for length in np.linspace(0.0, 10.0, 51)]
        assert all(a <= b for a, b in zip(heights, heights[1:]))


def test_paper_height_inverts_the_shadow_length():
    for elevation in (12.0, 41.0, 63.5, 80.0):
        sun = SolarPosition.from_angles(elevation, 101.0)
        tan_elev = math.tan(math.radians(elevation))
        for length in (0.3, 2.326, 9.7):
            assert tree_height_m(length, sun, HeightModel(trunk_offset_m=0.0)) * tan_elev == pytest.approx(length, abs=1e-12)


def test_doubling_the_shadow_doubles_the_height():
    sun = SolarPosition.from_angles(41.0, 101.3)
    for mode in HeightMode:
        model = HeightModel(mode=mode, trunk_offset_m=0.0)
        for length in (0.5, 1.7, 3.428):
            assert tree_height_m(2 * length, sun, model) == pytest.approx(2 * tree_height_m(length, sun, model), rel=1e-12)


def test_height_rejects_bad_inputs():
    with pytest.raises(GeometryError):
        tree_height_m(2.0, SolarPosition.from_angles(-3.0, 90.0))
    with pytest.raises(GeometryError):
        tree_height_m(2.0, SolarPosition.from_angles(90.0, 0.0))
    with pytest.raises(InputValidationError):
        tree_height_m(-1.0, SolarPosition.from_angles(40.0, 90.0))
    with pytest.raises(InputValidationError):
        HeightModel(trunk_offset_m=-0.1)


def test_biovolume_scales_linearly():
    assert biovolume_m3(2.0, 3.0) == pytest.approx(6.0)
    assert biovolume_m3(2.0, 3.0, form_factor=0.5) == pytest.approx(3.0)
    assert biovolume_m3(0.0, 3.0) == 0.0
    with pytest.raises(InputValidationError):
        biovolume_m3(-1.0, 3.0)
    with pytest.raises(InputValidationError):
        biovolume_m3(1.0, 3.0, form_factor=0.0)


def test_shadow_length_from_centroid_to_farthest_pixel():
    gt = GeoTransform.square(0.1)
    crown = _rect(1, LabelClass.CROWN, 10, 10, 10, 10)  # centroid (15, 15)
    shadow = _rect(1, LabelClass.SHADOW, 0, 13, 10, 4)

    # farthest shadow pixel center along -x is 0.5 px, so 14.5 px from the centroid
    assert shadow_length_m(crown, shadow, (-1.0, 0.0), gt) == pytest.approx(1.45)

    with pytest.raises(GeometryError, match="non-positive projection"):
        shadow_length_m(crown, shadow, (1.0, 0.0), gt)
    with pytest.raises(InputValidationError):
        shadow_length_m(crown, shadow, (0.6, 0.6), gt)
    with pytest.raises(InputValidationError, match="isotropic"):
        shadow_length_m(crown, shadow, (-1.0, 0.0), GeoTransform(0.1, 0.2))


def test_shadow_length_at_orthophoto_resolution():
    gt = GeoTransform.square(0.0055)
    crown = _rect(1, LabelClass.CROWN, 500, 0, 1, 1)  # centroid x = 500.5
    shadow = _rect(1, LabelClass.SHADOW, 77, 0, 1, 1)  # center x = 77.5, 423 px down-sun

    length = shadow_length_m(crown, shadow, (-1.0, 0.0), gt)
    assert length == pytest.approx(2.3265, abs=1e-9)

    # moving the shadow 10 px further along the shadow direction adds 10 pixels of length
    assert shadow_length_m(crown, shadow.translated(-10, 0), (-1.0, 0.0), gt) == pytest.approx(length + 10 * 0.0055, abs=1e-12)


def test_larger_crown_never_loses_area_or_volume():
    rng = np.random.default_rng(17)
    gt = GeoTransform.square(0.02)
    for _ in range(200):
        pixels = rng.random((60, 60)) < 0.2
        pixels[30, 30] = True
        superset = pixels | (rng.random((60, 60)) < 0.05)
        crown = InstanceMask(1, LabelClass.CROWN, *np.nonzero(pixels)[::-1])
        grown = InstanceMask(1, LabelClass.CROWN, *np.nonzero(superset)[::-1])
        height = float(rng.uniform(0.5, 5.0))

        assert crown_area_m2(grown, gt) >= crown_area_m2(crown, gt)
        assert biovolume_m3(crown_area_m2(grown, gt), height) >= biovolume_m3(crown_area_m2(crown, gt), height)


def test_pairing_takes_the_shadow_down_sun():
    gt = GeoTransform.square(0.1)
    crowns = [_rect(1, LabelClass.CROWN, 20, 0, 10, 10), _rect(2, LabelClass.CROWN, 20, 40, 10, 10)]
    shadows = [
        _rect(1, LabelClass.SHADOW, 5, 2, 15, 6),  # west of crown 1
        _rect(2, LabelClass.SHADOW, 32, 42, 10, 6),  # east of crown 2, up-sun
        _rect(3, LabelClass.SHADOW, 8, 42, 12, 6),  # west of crown 2
    ]

    pairings = pair_crowns_shadows(crowns, shadows, (-1.0, 0.0), gt)

    assert [(p.crown_id, p.shadow_id) for p in pairings] == [(1, 1), (2, 3)]
    assert pairings[0].axial_gap_m == pytest.approx(0.55)


def test_pairing_is_one_to_one_and_prefers_smaller_gap():
    gt = GeoTransform.square(0.1)
    # two crowns on the same row, both looking west at the same shadow
    near = _rect(1, LabelClass.CROWN, 30, 0, 10, 10)
    far = _rect(2, LabelClass.CROWN, 50, 0, 10, 10)
    shadow = _rect(1, LabelClass.SHADOW, 10, 2, 20, 6)

    pairings = pair_crowns_shadows([near, far], [shadow], (-1.0, 0.0), gt, PairingParams(max_lateral_m=1.0, max_gap_m=5.0))

    assert [(p.crown_id, p.shadow_id) for p in pairings] == [(1, 1), (2, None)]
    assert pairings[1].axial_gap_m is None


def test_pairing_respects_gap_and_lateral_limits():
    gt = GeoTransform.square(0.1)
    crown = _rect(1, LabelClass.CROWN, 60, 0, 10, 10)
    distant = _rect(1, LabelClass.SHADOW, 0, 2, 10, 6)  # 5.55 m away
    sideways = _rect(2, LabelClass.SHADOW, 50, 30, 10, 6)  # 2.5 m off-axis

    assert pair_crowns_shadows([crown], [distant, sideways], (-1.0, 0.0), gt)[0].shadow_id is None
    assert pair_crowns_shadows([crown], [distant], (-1.0, 0.0), gt, PairingParams(max_gap_m=6.0))[0].shadow_id == 1
    assert pair_crowns_shadows([crown], [sideways], (-1.0, 0.0), gt, PairingParams(max_lateral_m=3.0))[0].shadow_id == 2


def test_pairing_validates_params():
    with pytest.raises(InputValidationError):
        PairingParams(max_lateral_m=0.0)
    with pytest.raises(InputValidationError):
        PairingParams(max_gap_m=-1.0)
    with pytest.raises(InputValidationError):
        pair_crowns_shadows([], [], (2.0, 0.0), GeoTransform.square(0.1))


def test_tree_record_optionals_are_all_or_none():
    TreeRecord(1, 2.0)
    TreeRecord(1, 2.0, 1.0, 1.2, 2.4)
    with pytest.raises(InputValidationError):
        TreeRecord(1, 2.0, shadow_length_m=1.0)
    with pytest.raises(InputValidationError):
        TreeRecord(1, -2.0)


def _scene_raster() -> LabelRaster:
    labels = np.zeros((40, 60), dtype=np.uint8)
    labels[5:15, 30:40] = LabelClass.CROWN  # tree 1, shadow to the west
    labels[7:13, 12:30] = LabelClass.SHADOW
    labels[25:35, 30:40] = LabelClass.CROWN  # tree 2, no shadow
    return LabelRaster(labels)


def test_measure_scene_degrades_unmatched_crowns(caplog: pytest.LogCaptureFixture):
    sun = SolarPosition.from_angles(45.0, 90.0)

    with caplog.at_level(logging.WARNING, logger="canopyvol"):
        result = measure_scene_detailed(_scene_raster(), GeoTransform.square(0.1), ACQUISITION, ORCHARD, HeightModel(trunk_offset_m=0.0), sun=sun)

    measured, bare = result.records
    assert measured.tree_id == 1
    assert measured.crown_area_m2 == pytest.approx(1.0)
    # centroid x = 35, farthest shadow pixel center 12.5 -> 22.5 px
    assert measured.shadow_length_m == pytest.approx(2.25)
    assert measured.height_m == pytest.approx(2.25)
    assert measured.biovolume_m3 == pytest.approx(2.25)
    assert bare.tree_id == 2
    assert not bare.is_measured
    assert result.warnings == ["tree 2: no shadow matched; height and biovolume omitted"]
    assert "tree 2" in caplog.text
    assert result.sun is sun


def test_measure_scene_ignores_where_the_content_sits():
    sun = SolarPosition.from_angles(45.0, 90.0)
    original = _scene_raster()
    padded = np.zeros((70, 100), dtype=np.uint8)
    padded[13:53, 17:77] = original.labels

    before = measure_scene(original, GeoTransform.square(0.1), ACQUISITION, ORCHARD, sun=sun)
    after = measure_scene(LabelRaster(padded), GeoTransform.square(0.1), ACQUISITION, ORCHARD, sun=sun)

    assert len(after) == len(before) == 2
    for a, b in zip(before, after, strict=True):
        assert b.tree_id == a.tree_id
        for name in ("crown_area_m2", "shadow_length_m", "height_m", "biovolume_m3"):
            if getattr(a, name) is None:
                assert getattr(b, name) is None
            else:
                assert getattr(b, name) == pytest.approx(getattr(a, name), abs=1e-9)


def test_measure_scene_rejects_sun_below_horizon_and_anisotropic_gsd():
    night = UtcInstant(2022, 5, 22, 23, 0, 0)

    with pytest.raises(GeometryError):
        measure_scene(_scene_raster(), GeoTransform.square(0.1), night, ORCHARD)
    with pytest.raises(InputValidationError, match="isotropic"):
        measure_scene(_scene_raster(), GeoTransform(0.1, 0.12), ACQUISITION, ORCHARD)


def test_measure_empty_scene_gives_header_only_csv():
    records = measure_scene(LabelRaster.empty(20, 10), GeoTransform.square(0.05), ACQUISITION, ORCHARD)

    assert records == []
    assert records_to_csv(records) == ",".join(RECORD_COLUMNS) + "\n"


def test_record_outputs(tmp_path: Path):
    records = [TreeRecord(1, 2.3256, 2.3264, 1.87551, 4.36172), TreeRecord(2, 0.5)]

    assert records_to_csv(records).splitlines() == [
        "tree_id,crown_area_m2,shadow_length_m,height_m,biovolume_m3",
        "1,2.326,2.326,1.876,4.362",
        "2,0.500,,,",
    ]
    frame = records_to_frame(records)
    assert list(frame.columns) == RECORD_COLUMNS
    assert frame["tree_id"].tolist() == [1, 2]

    assert records_to_json(records)[1] == {"tree_id": 2, "crown_area_m2": 0.5, "shadow_length_m": None, "height_m": None, "biovolume_m3": None}

    path = tmp_path / "trees.json"
    write_records_json(records, path, warnings=["tree 2: no shadow matched"])
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["trees"][0]["height_m"] == 1.876
    assert payload["warnings"] == ["tree 2: no shadow matched"]

    assert inventory_summary(records) == {"trees": 2, "measured_trees": 1, "total_crown_area_m2": 2.826, "total_biovolume_m3": 4.362}
