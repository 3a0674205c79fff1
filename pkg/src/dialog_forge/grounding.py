"""Grounding evaluation: NDCG over ranked attention cells and tokens.

Predicted attention (a 14x14 visual map, or one weight per question token)
is ranked and scored against the generator's ground truth: the grid cells
around each referent's projected position, and the tokens of the referring
phrases.  NDCG uses binary gains with the 1/log2(rank+1) discount; it only
sees the ranking, so any positive rescaling of the attention leaves the
score unchanged.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .scenes import project_to_pixels, IMAGE_HEIGHT, IMAGE_WIDTH

GRID = 14
VISUAL_CELLS = GRID * GRID


class GroundingError(ValueError):
    pass


class AlignmentError(GroundingError):
    """Attention dumps do not line up with the dataset's coref rounds."""

    def __init__(self, index: int, message: str):
        super().__init__(f"dump record {index}: {message}")
        self.index = index


def ndcg(relevances) -> float:
    """Normalized discounted cumulative gain of a binary relevance ranking.

    ``relevances`` lists, in predicted-rank order, whether each item is
    relevant.  At least one item must be relevant.
    """
    total_relevant = sum(1 for r in relevances if r)
    if total_relevant == 0:
        raise GroundingError("NDCG is undefined with no relevant items")
    dcg = 0.0
    for position, relevant in enumerate(relevances, start=1):
        if relevant:
            dcg += 1.0 / math.log2(position + 1)
    ideal = sum(1.0 / math.log2(position + 1) for position in range(1, total_relevant + 1))
    return dcg / ideal


def rank_by_weight(weights) -> list[int]:
    """Indices sorted by descending weight; ties broken by index (stable)."""
    return sorted(range(len(weights)), key=lambda i: (-weights[i], i))


def object_cell(obj: dict) -> int:
    """Grid cell of an object payload, via pixels or the fixed projection."""
    if obj.get("position2d"):
        px, py = obj["position2d"][0], obj["position2d"][1]
    else:
        px, py = project_to_pixels(obj["position3d"])
    col = min(max(int(px / IMAGE_WIDTH * GRID), 0), GRID - 1)
    row = min(max(int(py / IMAGE_HEIGHT * GRID), 0), GRID - 1)
    return row * GRID + col


def visual_ground_truth(scene_payload: dict, referent_ids) -> set[int]:
    """Relevant cells: the 3x3 neighborhood around each referent's cell."""
    cells: set[int] = set()
    for object_id in referent_ids:
        center = object_cell(scene_payload["objects"][object_id])
        row, col = divmod(center, GRID)
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                r, c = row + dr, col + dc
                if 0 <= r < GRID and 0 <= c < GRID:
                    cells.add(r * GRID + c)
    return cells


def textual_ground_truth(round_record: dict) -> set[int]:
    """Relevant token indices: the referring phrases of the question."""
    indices: set[int] = set()
    for span in round_record.get("referring_spans", ()):
        indices.update(range(span["start"], span["end"]))
    return indices


def coref_rounds(dataset: dict) -> list[tuple[dict, dict]]:
    """(record, round) pairs with coref labels, in file order."""
    out = []
    for record in dataset["records"]:
        for round_record in record["rounds"]:
            if round_record["dependency"]["kind"] == "coref":
                out.append((record, round_record))
    return out


def read_attention_dumps(path) -> list[dict]:
    dumps = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle):
            line = line.strip()
            if not line:
                continue
            try:
                dumps.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise GroundingError(f"line {line_number + 1} is not JSON: {exc}") from exc
    return dumps


def evaluate_grounding(dumps: list[dict], dataset: dict) -> dict:
    """Mean NDCG per question type for visual and textual grounding.

    ``dumps`` must align one-to-one, in order, with the dataset rounds that
    carry a coref label.
    """
    targets = coref_rounds(dataset)
    if len(dumps) != len(targets):
        raise AlignmentError(
            min(len(dumps), len(targets)),
            f"{len(dumps)} dump records for {len(targets)} coref rounds",
        )
    scenes = {payload["scene_id"]: payload for payload in dataset["scenes"]}
    from .util import tokenize

    visual: dict[str, list[float]] = {}
    textual: dict[str, list[float]] = {}
    skipped_textual = 0
    for index, (dump, (record, round_record)) in enumerate(zip(dumps, targets)):
        expected = (record["scene_id"], record["dialog_index"], round_record["round"])
        actual = (dump.get("scene_id"), dump.get("dialog_index"), dump.get("round"))
        if expected != actual:
            raise AlignmentError(index, f"dump is for {actual}, dataset has {expected}")
        label = round_record["template"]

        weights = dump.get("visual")
        if not isinstance(weights, list) or len(weights) != VISUAL_CELLS:
            raise AlignmentError(index, f"visual attention must have {VISUAL_CELLS} weights")
        relevant = visual_ground_truth(scenes[record["scene_id"]], round_record["referent_ids"])
        if relevant:
            ranking = rank_by_weight(weights)
            visual.setdefault(label, []).append(
                ndcg([cell in relevant for cell in ranking])
            )

        token_weights = dump.get("textual")
        tokens = tokenize(round_record["question"])
        if not isinstance(token_weights, list) or len(token_weights) != len(tokens):
            raise AlignmentError(index, f"textual attention must have {len(tokens)} weights")
        relevant_tokens = textual_ground_truth(round_record)
        if relevant_tokens:
            ranking = rank_by_weight(token_weights)
            textual.setdefault(label, []).append(
                ndcg([position in relevant_tokens for position in ranking])
            )
        else:
            skipped_textual += 1

    def summarize(per_label: dict) -> dict:
        out = {}
        values_all: list[float] = []
        for label in sorted(per_label):
            values = per_label[label]
            out[label] = {"mean_ndcg": sum(values) / len(values), "n": len(values)}
            values_all.extend(values)
        out["overall"] = {
            "mean_ndcg": sum(values_all) / len(values_all) if values_all else 0.0,
            "n": len(values_all),
        }
        return out

    return {
        "visual": summarize(visual),
        "textual": summarize(textual),
        "textual_skipped": skipped_textual,
    }
