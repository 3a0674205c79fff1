import json

import pytest

from dialog_forge.dataset_io import records_for_scene
from dialog_forge.engine import GenerationConfig, generate_dialogs
from dialog_forge.stats import compute_stats, render_report, report_from_json

from conftest import random_scene


@pytest.fixture(scope="module")
def records():
    scene = random_scene(14, 6, 9)
    return records_for_scene(generate_dialogs(scene, GenerationConfig(seed=4, beams=30)))


def test_counts(records):
    report = compute_stats(records[:1])
    assert report.num_images == 1
    assert report.num_dialogs == 1
    assert report.num_questions == 10
    report = compute_stats(records)
    assert report.num_dialogs == 5
    assert report.num_questions == 50


def test_coref_histogram_support(records):
    report = compute_stats(records)
    assert report.coref_distances
    for distance in report.coref_distances:
        assert 1 <= distance <= 10
    total = sum(report.coref_distances.values())
    expected_mean = sum(k * v for k, v in report.coref_distances.items()) / total
    assert report.mean_coref_distance == pytest.approx(expected_mean)


def test_histogram_masses_sum(records):
    report = compute_stats(records)
    assert sum(report.question_categories.values()) == report.num_questions
    assert sum(report.question_types.values()) == report.num_questions
    assert sum(report.answers.values()) == report.num_questions
    assert sum(report.dependency_kinds.values()) == report.num_questions
    assert sum(report.caption_families.values()) == report.num_dialogs


def test_json_round_trip(records):
    report = compute_stats(records)
    payload = json.loads(render_report(report, "json"))
    assert report_from_json(payload) == report


def test_text_report_has_one_row_per_type(records):
    report = compute_stats(records)
    text = render_report(report, "text")
    for label in report.question_types:
        assert f"\n{label}\t" in text


def test_text_shares_sum_to_one_hundred(records):
    report = compute_stats(records)
    text = render_report(report, "text")
    lines = text.splitlines()
    start = lines.index("Question types") + 2
    shares = []
    for line in lines[start:]:
        if not line or "\t" not in line:
            break
        shares.append(float(line.split("\t")[2].rstrip("%")))
    assert len(shares) == len(report.question_types)
    assert sum(shares) == pytest.approx(100.0, abs=0.5)


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        compute_stats([])


def test_figures_render(tmp_path, records):
    figures = pytest.importorskip("dialog_forge.figures")
    report = compute_stats(records)
    paths = figures.render_figures(report, tmp_path / "figs")
    assert paths
    for path in paths:
        assert path.exists() and path.stat().st_size > 0
    names = {p.name for p in paths}
    assert "question_categories.png" in names
    assert "coref_distances.png" in names
