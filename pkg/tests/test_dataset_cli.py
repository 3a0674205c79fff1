import json
import copy

import pytest

from dialog_forge.cli import main
from dialog_forge.dataset_io import read_dataset, validate_dataset, write_dataset
from dialog_forge.util import canonical_json


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "dataset.json"
    code = main(["generate", "--synthesize", "10", "--seed", "1",
                 "--output", str(path)])
    assert code == 0
    return path


def test_generate_shape(generated):
    data = read_dataset(generated)
    assert len(data["scenes"]) == 10
    assert len(data["records"]) == 50  # 5 dialogs per image
    for record in data["records"]:
        assert len(record["rounds"]) == 10
        for round_record in record["rounds"]:
            assert round_record["answer"]
            assert round_record["program"]


def test_generate_rerun_is_byte_identical(generated, tmp_path):
    again = tmp_path / "again.json"
    assert main(["generate", "--synthesize", "10", "--seed", "1",
                 "--output", str(again)]) == 0
    assert again.read_bytes() == generated.read_bytes()


def test_generate_with_workers_is_byte_identical(generated, tmp_path):
    parallel = tmp_path / "parallel.json"
    assert main(["generate", "--synthesize", "10", "--seed", "1",
                 "--workers", "3", "--output", str(parallel)]) == 0
    assert parallel.read_bytes() == generated.read_bytes()


def test_env_seed_fallback(tmp_path, monkeypatch, generated):
    monkeypatch.setenv("DIALOG_FORGE_SEED", "1")
    out = tmp_path / "env.json"
    assert main(["generate", "--synthesize", "10", "--output", str(out)]) == 0
    assert out.read_bytes() == generated.read_bytes()


def test_validate_fresh_file_passes(generated, capsys):
    assert main(["validate", "--input", str(generated)]) == 0
    assert "zero violations" in capsys.readouterr().out


def test_validate_reports_exactly_one_oracle_violation_per_flip(generated, tmp_path):
    data = read_dataset(generated)
    record = data["records"][7]
    round_record = record["rounds"][4]
    original = round_record["answer"]
    replacement = "no" if original != "no" else "yes"
    if original.isdigit():
        replacement = str((int(original) + 1) % 11)
    round_record["answer"] = replacement
    mutated = tmp_path / "mutated.json"
    write_dataset(mutated, data)
    violations = validate_dataset(read_dataset(mutated))
    oracle = [v for v in violations if v.kind == "oracle"]
    assert len(oracle) == 1
    assert oracle[0].scene_id == record["scene_id"]
    assert oracle[0].round_index == round_record["round"]
    assert main(["validate", "--input", str(mutated)]) == 1


def test_validate_flags_missing_round(generated, tmp_path):
    data = read_dataset(generated)
    data["records"][0]["rounds"] = data["records"][0]["rounds"][:9]
    broken = tmp_path / "nine.json"
    write_dataset(broken, data)
    violations = validate_dataset(read_dataset(broken))
    assert any(v.kind == "schema" and "9" in v.message for v in violations)


def test_validate_flags_tampered_question_text(generated, tmp_path):
    data = read_dataset(generated)
    data["records"][1]["rounds"][0]["question"] = "What is the meaning of life?"
    broken = tmp_path / "tampered.json"
    write_dataset(broken, data)
    violations = validate_dataset(read_dataset(broken))
    assert any(v.kind == "schema" and "parse" in v.message for v in violations)


def test_validate_flags_duplicate_dialog(generated, tmp_path):
    data = read_dataset(generated)
    clone = copy.deepcopy(data["records"][0])
    clone["dialog_index"] = data["records"][4]["dialog_index"]
    data["records"][4] = clone
    broken = tmp_path / "dup.json"
    write_dataset(broken, data)
    violations = validate_dataset(read_dataset(broken))
    assert any(v.kind == "distinct" for v in violations)


def test_stats_command_outputs(generated, tmp_path, capsys):
    json_out = tmp_path / "report.json"
    text_out = tmp_path / "report.txt"
    assert main(["stats", "--input", str(generated), "--json", str(json_out),
                 "--text", str(text_out)]) == 0
    payload = json.loads(json_out.read_text())
    assert payload["num_questions"] == 500
    assert payload["coref_distances"]
    text = text_out.read_text()
    assert "Coreference distances" in text


def test_stats_command_renders_figures(generated, tmp_path):
    figure_dir = tmp_path / "figures"
    assert main(["stats", "--input", str(generated), "--text",
                 str(tmp_path / "r.txt"), "--figures", str(figure_dir)]) == 0
    rendered = list(figure_dir.glob("*.png"))
    assert len(rendered) >= 5


def test_stats_empty_dataset_is_usage_error(tmp_path):
    data = {"version": "dialog-forge-1", "config": {}, "scenes": [], "records": []}
    path = tmp_path / "empty.json"
    path.write_text(canonical_json(data))
    assert main(["stats", "--input", str(path)]) == 2


def test_stats_shares_match_validation_counts(generated):
    from dialog_forge.stats import compute_stats

    data = read_dataset(generated)
    report = compute_stats(data["records"])
    recounted = {}
    for record in data["records"]:
        for round_record in record["rounds"]:
            category = round_record["category"]
            recounted[category] = recounted.get(category, 0) + 1
    assert recounted == report.question_categories


def test_validate_rejects_unknown_file(tmp_path):
    path = tmp_path / "nonsense.json"
    path.write_text('{"hello": 1}')
    assert main(["validate", "--input", str(path)]) == 2


def test_generate_rejects_oversized_objects(tmp_path):
    assert main(["generate", "--synthesize", "2", "--max-objects", "12",
                 "--output", str(tmp_path / "x.json")]) == 2


def test_debug_state_dump(tmp_path):
    out = tmp_path / "small.json"
    states = tmp_path / "states.jsonl"
    assert main(["generate", "--synthesize", "2", "--seed", "4",
                 "--output", str(out), "--debug-states", str(states)]) == 0
    lines = [json.loads(line) for line in states.read_text().splitlines()]
    assert len(lines) == 10  # one snapshot per dialog
    for snapshot in lines:
        state = snapshot["state"]
        assert state["round"] == 10
        assert state["entities"]
        for entity in state["entities"]:
            assert entity["pinned_id"] is not None


def test_grounding_command(tmp_path, generated):
    from dialog_forge.grounding import coref_rounds, textual_ground_truth, visual_ground_truth
    from dialog_forge.util import tokenize

    data = read_dataset(generated)
    scenes = {payload["scene_id"]: payload for payload in data["scenes"]}
    dumps_path = tmp_path / "dumps.jsonl"
    with dumps_path.open("w") as handle:
        for record, round_record in coref_rounds(data):
            relevant = visual_ground_truth(
                scenes[record["scene_id"]], round_record["referent_ids"]
            )
            tokens = tokenize(round_record["question"])
            relevant_tokens = textual_ground_truth(round_record)
            handle.write(json.dumps({
                "scene_id": record["scene_id"],
                "dialog_index": record["dialog_index"],
                "round": round_record["round"],
                "visual": [1.0 if c in relevant else 0.0 for c in range(196)],
                "textual": [1.0 if i in relevant_tokens else 0.0 for i in range(len(tokens))],
            }) + "\n")
    report_path = tmp_path / "grounding.json"
    assert main(["grounding", "--input", str(generated), "--dumps", str(dumps_path),
                 "--output", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["visual"]["overall"]["mean_ndcg"] == pytest.approx(1.0)
    assert report["textual"]["overall"]["mean_ndcg"] == pytest.approx(1.0)
