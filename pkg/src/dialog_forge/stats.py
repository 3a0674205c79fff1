"""Dataset-level statistics: counts, lengths, vocabulary, distributions."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .util import tokenize


@dataclass
class StatsReport:
    num_images: int = 0
    num_dialogs: int = 0
    num_questions: int = 0
    num_unique_questions: int = 0
    num_unique_answers: int = 0
    vocab_size: int = 0
    mean_question_length: float = 0.0
    mean_coref_distance: float = 0.0
    caption_families: dict = field(default_factory=dict)
    question_categories: dict = field(default_factory=dict)
    question_types: dict = field(default_factory=dict)
    answers: dict = field(default_factory=dict)
    coref_distances: dict = field(default_factory=dict)
    dependency_kinds: dict = field(default_factory=dict)


def _bump(hist: dict, key) -> None:
    hist[key] = hist.get(key, 0) + 1


def compute_stats(records: list[dict]) -> StatsReport:
    """Fold dialog records into a report; a pure, deterministic pass."""
    if not records:
        raise ValueError("cannot compute statistics over an empty dataset")
    report = StatsReport()
    images = set()
    questions = set()
    answers = set()
    vocabulary = set()
    total_tokens = 0
    coref_total = 0
    coref_count = 0
    for record in records:
        images.add(record["scene_id"])
        report.num_dialogs += 1
        caption = record["caption"]
        _bump(report.caption_families, caption["template"])
        vocabulary.update(tokenize(caption["text"]))
        for round_record in record["rounds"]:
            report.num_questions += 1
            text = round_record["question"]
            questions.add(text)
            tokens = tokenize(text)
            total_tokens += len(tokens)
            vocabulary.update(tokens)
            answers.add(round_record["answer"])
            _bump(report.answers, round_record["answer"])
            label = round_record["template"]
            _bump(report.question_types, label)
            _bump(report.question_categories, round_record.get("category", label.split("-")[0]))
            dependency = round_record["dependency"]
            _bump(report.dependency_kinds, dependency["kind"])
            if dependency["kind"] == "coref":
                distance = dependency["distance"]
                _bump(report.coref_distances, distance)
                coref_total += distance
                coref_count += 1
    report.num_images = len(images)
    report.num_unique_questions = len(questions)
    report.num_unique_answers = len(answers)
    report.vocab_size = len(vocabulary)
    report.mean_question_length = total_tokens / report.num_questions
    report.mean_coref_distance = coref_total / coref_count if coref_count else 0.0
    return report


def report_from_json(payload: dict) -> StatsReport:
    payload = dict(payload)
    payload["coref_distances"] = {int(k): v for k, v in payload["coref_distances"].items()}
    return StatsReport(**payload)


def _section(lines: list[str], title: str, hist: dict, total: int, key=str) -> None:
    lines.append("")
    lines.append(title)
    lines.append("-" * len(title))
    for name in sorted(hist, key=key):
        count = hist[name]
        lines.append(f"{name}\t{count}\t{100.0 * count / total:.1f}%")


def render_report(report: StatsReport, format: str = "text") -> str:
    """Render the report as lossless JSON or a tab-delimited text table."""
    if format == "json":
        return json.dumps(asdict(report), sort_keys=True, indent=2) + "\n"
    if format != "text":
        raise ValueError(f"unknown report format {format!r}")
    lines = ["Dataset statistics", "=================="]
    lines.append(f"images\t{report.num_images}")
    lines.append(f"dialogs\t{report.num_dialogs}")
    lines.append(f"questions\t{report.num_questions}")
    lines.append(f"unique questions\t{report.num_unique_questions}")
    lines.append(f"unique answers\t{report.num_unique_answers}")
    lines.append(f"vocabulary size\t{report.vocab_size}")
    lines.append(f"mean question length\t{report.mean_question_length:.2f}")
    lines.append(f"mean coref distance\t{report.mean_coref_distance:.2f}")
    _section(lines, "Caption families", report.caption_families, report.num_dialogs)
    _section(lines, "Question categories", report.question_categories, report.num_questions)
    _section(lines, "Question types", report.question_types, report.num_questions)
    _section(lines, "Answers", report.answers, report.num_questions)
    coref_total = sum(report.coref_distances.values())
    if coref_total:
        _section(lines, "Coreference distances", report.coref_distances, coref_total, key=int)
    _section(lines, "History dependency", report.dependency_kinds, report.num_questions)
    return "\n".join(lines) + "\n"
