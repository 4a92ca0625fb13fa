import numpy as np
import pytest

import seaforge


def test_box_geometry():
    a = seaforge.BoundingBox(0, 0, 10, 10)
    b = seaforge.BoundingBox(5, 5, 10, 10)
    assert seaforge.intersect_area(a, b) == 25
    assert seaforge.iou(a, b) == pytest.approx(25 / 175)
    assert seaforge.box_from_floating(1.7, 2.2, 3.9, 4.1) == seaforge.BoundingBox(1, 2, 3, 4)


def test_mask_counts_union():
    mask = seaforge.build_mask(8, 6, [seaforge.BoundingBox(0, 0, 2, 2), seaforge.BoundingBox(1, 1, 2, 2)])
    assert mask.shape == (6, 8)
    assert int((mask == 0).sum()) == 7
    assert set(np.unique(mask)) == {0, 255}


def test_filter_and_review_arithmetic():
    assert seaforge.filter_decision(["not_boat", "boat"])
    assert not seaforge.filter_decision([])
    mean, std = seaforge.good_image_rate([50.0, 70.0])
    assert mean == pytest.approx(60.0)
    assert std == pytest.approx(np.std([50.0, 70.0], ddof=1))
    assert seaforge.verdict_good(True, True, True)
    assert not seaforge.verdict_good(True, False, True)


def test_passing_rate_and_ap():
    rate = seaforge.passing_rate([2336, 25114, 65275, 4275], [2087, 19390, 45066, 3151])
    assert rate == pytest.approx(71.85, abs=0.01)
    assert seaforge.average_precision([(0.9, True), (0.8, True)], 2) == pytest.approx(1.0)
    assert seaforge.average_precision([], 0) is None


def test_quarter_negative_overlap():
    image = np.zeros((200, 200, 3), dtype=np.uint8)
    box = seaforge.BoundingBox(100, 100, 40, 20)
    region, pixels = seaforge.synthesize_quarter_negative(image, box, 3)
    assert pixels.shape == (20, 40, 3)
    assert 4 * seaforge.intersect_area(region, box) == box.area()


def test_pipeline_end_to_end(tmp_path):
    ann, root = seaforge.write_fixture_dataset(tmp_path / "data", 3, seed=2)
    summary = seaforge.run_pipeline(ann, root, tmp_path / "out", "[pipeline]\nimages_per_source = 2\n", seed=9)
    assert summary["total_generated"] == 6
    assert summary["total_filtered"] == 6
    stats = seaforge.dataset_stats(tmp_path / "out" / "manifest.jsonl")
    assert stats["total_generated"] == 6

    bad = seaforge.run_pipeline(ann, root, tmp_path / "bad", "[backend.mock]\ncorrupt_objects = true\n")
    assert bad["total_filtered"] == 0


def test_errors_carry_codes(tmp_path):
    with pytest.raises(seaforge.SeaforgeError, match="ConfigError"):
        seaforge.run_pipeline(tmp_path / "a.json", tmp_path, tmp_path / "out", "[pipeline]\nbogus = 1\n")


def test_cli_in_process():
    code, out, _ = seaforge.cli(["--help"])
    assert code == 0
    assert "train-checker" in out


def test_sea_state_of_calm_and_rough():
    rng = np.random.default_rng(0)
    calm = np.full((64, 64, 3), 120, dtype=np.uint8)
    rough = rng.integers(0, 255, size=(64, 64, 3), dtype=np.uint8)
    assert seaforge.classify_sea_state(calm)[0] == 1
    assert seaforge.classify_sea_state(rough)[0] == 4
