"""Dataset file format, serialization, and full re-validation.

A dataset file is a single canonical-JSON document: a version tag, the
generation config echo (sufficient to regenerate the file bit-exactly for
synthesized scenes), the scenes, and one record per dialog with the caption
and its ten annotated rounds.

Validation re-derives everything derivable: every answer is re-computed by
the scan-based naive evaluator, every round's text is parsed back to its
template and bindings, the questioner state is replayed and audited against
the scene after every round, and dialog-level constraints are re-checked.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .engine import Dialog, GenerationConfig
from .grammar import QuestionCandidate, get_template, parse_utterance
from .naive import NaiveError, naive_answer, objects_from_scene
from .oracle import answer_vocabulary
from .programs import PrimitiveProgram, ProgramError
from .scenes import Object, Scene, immediate_neighbor
from .state import (
    StateConsistencyError,
    apply_caption,
    apply_qa,
    is_redundant,
    label_dependency,
    verify_against_scene,
)
from .util import canonical_json, tokenize

FORMAT_VERSION = "dialog-forge-1"


class DatasetFormatError(ValueError):
    """The file is not a dataset this package understands."""


# -- serialization -----------------------------------------------------------


def scene_payload(scene: Scene) -> dict:
    return {
        "scene_id": scene.scene_id,
        "objects": [
            {
                "shape": obj.shape,
                "color": obj.color,
                "size": obj.size,
                "material": obj.material,
                "position3d": list(obj.position3d),
                "position2d": list(obj.position2d) if obj.position2d else None,
            }
            for obj in scene.objects
        ],
    }


def scene_from_payload(payload: dict) -> Scene:
    objects = tuple(
        Object(
            index=pos,
            shape=record["shape"],
            color=record["color"],
            size=record["size"],
            material=record["material"],
            position3d=tuple(record["position3d"]),
            position2d=tuple(record["position2d"]) if record.get("position2d") else None,
        )
        for pos, record in enumerate(payload["objects"])
    )
    return Scene(payload["scene_id"], objects)


def _span_payload(spans, entity_ids: dict, group_ids: tuple) -> list[dict]:
    out = []
    for start, end, kind, handle in spans:
        if kind == "group":
            object_ids = list(group_ids)
        else:
            object_ids = [entity_ids[handle]] if handle in entity_ids else []
        out.append(
            {"start": start, "end": end, "kind": kind, "handle": handle,
             "object_ids": object_ids}
        )
    return out


def _caption_payload(dialog: Dialog) -> dict:
    caption = dialog.caption
    entity_ids = {}
    group_ids: tuple = ()
    facts = []
    for fact in caption.revealed_facts:
        if fact["kind"] == "entity":
            entity_ids[fact["handle"]] = fact["pinned_id"]
        elif fact["kind"] == "group":
            group_ids = tuple(fact["true_ids"])
        if fact["kind"] != "program":
            facts.append(fact)
    spans = _span_payload(caption.referring_spans, entity_ids, group_ids)
    referent_ids = sorted({i for span in spans for i in span["object_ids"]})
    return {
        "text": caption.text,
        "template": caption.template_label,
        "bindings": caption.bindings,
        "program": dialog.caption_program,
        "facts": facts,
        "referring_spans": spans,
        "referent_ids": referent_ids,
    }


def _round_payload(position: int, entry) -> dict:
    question = entry.question
    entity_ids = {}
    if question.anchor_handle is not None and question.anchor_id is not None:
        entity_ids[question.anchor_handle] = question.anchor_id
    spans = _span_payload(question.referring_spans, entity_ids, question.group_ids)
    referent_ids = sorted({i for span in spans for i in span["object_ids"]})
    dependency = {"kind": entry.dependency.kind}
    if entry.dependency.distance is not None:
        dependency["distance"] = entry.dependency.distance
    return {
        "round": position,
        "question": question.text,
        "template": question.label,
        "category": question.category,
        "independent": question.independent,
        "bindings": question.bindings,
        "program": question.program.to_json(),
        "answer": entry.answer,
        "dependency": dependency,
        "referring_spans": spans,
        "referent_ids": referent_ids,
        "state_update": {
            "anchor": question.anchor_handle,
            "relation": question.relation,
            "attribute": question.attribute,
            "conj": question.conj,
            "group": question.group_handle,
            "group_conj": question.group_conj,
            "mentions": list(question.mention_handles),
            "excl_ids": list(question.excl_ids),
        },
    }


def dialog_record(dialog: Dialog, index: int) -> dict:
    return {
        "scene_id": dialog.scene_id,
        "dialog_index": index,
        "caption": _caption_payload(dialog),
        "rounds": [_round_payload(pos + 1, entry) for pos, entry in enumerate(dialog.rounds)],
    }


def config_echo(config: GenerationConfig, scene_source: dict) -> dict:
    return {
        "seed": config.seed,
        "scene_source": scene_source,
        "dialogs_per_image": config.dialogs_per_image,
        "rounds": config.rounds,
        "beams": config.beams,
        "count_range": list(config.count_range),
        "exist_range": list(config.exist_range),
        "seek_range": list(config.seek_range),
        "independent_cap": config.independent_cap,
        "bonus_templates": list(config.bonus_templates),
        "bonus_weight": config.bonus_weight,
        "diversity_weight": config.diversity_weight,
        "early_weight": config.early_weight,
        "repeat_penalty": config.repeat_penalty,
        "opener_weight": config.opener_weight,
    }


def config_from_echo(echo: dict) -> GenerationConfig:
    return GenerationConfig(
        seed=echo["seed"],
        dialogs_per_image=echo["dialogs_per_image"],
        rounds=echo["rounds"],
        beams=echo["beams"],
        count_range=tuple(echo["count_range"]),
        exist_range=tuple(echo["exist_range"]),
        seek_range=tuple(echo["seek_range"]),
        independent_cap=echo["independent_cap"],
        bonus_templates=tuple(echo["bonus_templates"]),
        bonus_weight=echo["bonus_weight"],
        diversity_weight=echo["diversity_weight"],
        early_weight=echo["early_weight"],
        repeat_penalty=echo.get("repeat_penalty", 0.3),
        opener_weight=echo.get("opener_weight", 0.4),
    )


def records_for_scene(dialogs) -> list[dict]:
    return [dialog_record(dialog, index) for index, dialog in enumerate(dialogs)]


def build_dataset(config: GenerationConfig, scene_source: dict,
                  scene_payloads: list[dict], records: list[dict]) -> dict:
    return {
        "version": FORMAT_VERSION,
        "config": config_echo(config, scene_source),
        "scenes": sorted(scene_payloads, key=lambda s: s["scene_id"]),
        "records": sorted(records, key=lambda r: (r["scene_id"], r["dialog_index"])),
    }


def write_dataset(path, dataset: dict) -> None:
    Path(path).write_text(canonical_json(dataset), encoding="utf-8")


def read_dataset(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or data.get("version") != FORMAT_VERSION:
        raise DatasetFormatError(f"{path} is not a {FORMAT_VERSION} dataset")
    return data


def replay_final_states(data: dict):
    """Yield (scene_id, dialog_index, final PartialScene) per dialog record.

    Used by the debug-state dump; assumes a valid dataset.
    """
    scenes = {payload["scene_id"]: scene_from_payload(payload) for payload in data["scenes"]}
    for record in data["records"]:
        scene = scenes[record["scene_id"]]
        state = apply_caption(_CaptionView(record["caption"]))
        for round_record in record["rounds"]:
            question = _replay_question(round_record, state)
            answer = round_record["answer"]
            resolution = {"answer": answer}
            if question.label in ("seek-attr-rel-imm", "seek-attr-rel-early"):
                resolution["neighbor_id"] = immediate_neighbor(
                    scene, question.anchor_id, question.relation
                )
            else:
                conj = dict(question.group_conj)
                conj.update(question.conj)
                resolution["group_ids"] = scene.conjunction_ids(conj)
            state = apply_qa(state, question, answer, resolution)
        yield record["scene_id"], record["dialog_index"], state


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # schema | oracle | soundness | redundancy | dependency | constraint | distinct
    scene_id: str
    dialog_index: int | None
    round_index: int | None
    message: str

    def __str__(self) -> str:
        where = self.scene_id
        if self.dialog_index is not None:
            where += f"/dialog{self.dialog_index}"
        if self.round_index is not None:
            where += f"/round{self.round_index}"
        return f"[{self.kind}] {where}: {self.message}"


class _CaptionView:
    def __init__(self, payload: dict):
        self.revealed_facts = tuple(payload["facts"])
        self.template_label = payload["template"]


def _replay_question(record: dict, state) -> QuestionCandidate:
    update = record["state_update"]
    template = get_template(record["template"])
    anchor = update.get("anchor")
    anchor_id = None
    if anchor is not None:
        anchor_id = state.entity(anchor).pinned_id
    return QuestionCandidate(
        label=record["template"],
        category=template.category,
        independent=template.independent,
        history_need=template.history_need,
        text=record["question"],
        tokens=tuple(tokenize(record["question"])),
        bindings=record["bindings"],
        anchor_handle=anchor,
        anchor_id=anchor_id,
        attribute=update.get("attribute"),
        relation=update.get("relation"),
        conj=dict(update.get("conj", {})),
        group_handle=update.get("group"),
        group_conj=dict(update.get("group_conj", {})),
        excl_ids=tuple(update.get("excl_ids", ())),
        mention_handles=tuple(update.get("mentions", ())),
        program=PrimitiveProgram.from_json(record["program"]),
    )


def _check_spans(record: dict, token_count: int) -> list[str]:
    problems = []
    for span in record.get("referring_spans", ()):
        if not 0 <= span["start"] < span["end"] <= token_count:
            problems.append(
                f"span [{span['start']}, {span['end']}) outside {token_count} tokens"
            )
    return problems


def validate_dataset(data: dict) -> list[Violation]:
    """Re-check every derivable property of a dataset file."""
    violations: list[Violation] = []

    def flag(kind, scene_id, dialog_index, round_index, message):
        violations.append(Violation(kind, scene_id, dialog_index, round_index, message))

    try:
        config = config_from_echo(data["config"])
    except (KeyError, TypeError) as exc:
        flag("schema", "-", None, None, f"config echo unusable: {exc}")
        return violations

    scenes: dict[str, Scene] = {}
    raw_objects: dict[str, list[dict]] = {}
    for payload in data.get("scenes", ()):
        try:
            scene = scene_from_payload(payload)
        except Exception as exc:
            flag("schema", payload.get("scene_id", "-"), None, None, f"bad scene: {exc}")
            continue
        scenes[scene.scene_id] = scene
        raw_objects[scene.scene_id] = objects_from_scene(payload)

    vocabulary = set(answer_vocabulary())
    bounds = config.category_bounds()
    seen_signatures: dict[str, set] = {}
    records = data.get("records", ())
    order = [(r.get("scene_id", ""), r.get("dialog_index", 0)) for r in records]
    if order != sorted(order):
        flag("schema", "-", None, None, "records are not sorted by scene and dialog")

    for record in records:
        scene_id = record.get("scene_id", "-")
        dialog_index = record.get("dialog_index")
        scene = scenes.get(scene_id)
        if scene is None:
            flag("schema", scene_id, dialog_index, None, "scene missing from file")
            continue
        objects = raw_objects[scene_id]

        rounds = record.get("rounds", ())
        if len(rounds) != config.rounds:
            flag(
                "schema", scene_id, dialog_index, None,
                f"expected {config.rounds} rounds, found {len(rounds)}",
            )
            continue

        caption = record["caption"]
        caption_bindings = parse_utterance(caption["template"], caption["text"])
        if caption_bindings is None:
            flag("schema", scene_id, dialog_index, None, "caption does not parse")
        for problem in _check_spans(caption, len(tokenize(caption["text"]))):
            flag("schema", scene_id, dialog_index, None, problem)
        try:
            state = apply_caption(_CaptionView(caption))
        except Exception as exc:
            flag("soundness", scene_id, dialog_index, None, f"caption replay failed: {exc}")
            continue
        for problem in verify_against_scene(state, scene):
            flag("soundness", scene_id, dialog_index, None, problem)

        signature = [caption["text"]]
        counts = {"count": 0, "exist": 0, "seek": 0}
        independents = 0
        for round_record in rounds:
            round_index = round_record.get("round")
            text = round_record.get("question", "")
            label = round_record.get("template", "")
            answer = round_record.get("answer")
            signature.append(f"{text}|{answer}")

            if answer not in vocabulary:
                flag("schema", scene_id, dialog_index, round_index,
                     f"answer {answer!r} outside the vocabulary")
            parsed = parse_utterance(label, text) if label else None
            if parsed is None:
                flag("schema", scene_id, dialog_index, round_index,
                     "question does not parse back to its template")
            elif parsed != round_record.get("bindings"):
                flag("schema", scene_id, dialog_index, round_index,
                     f"parsed bindings {parsed} != recorded {round_record.get('bindings')}")
            for problem in _check_spans(round_record, len(tokenize(text))):
                flag("schema", scene_id, dialog_index, round_index, problem)

            try:
                question = _replay_question(round_record, state)
            except Exception as exc:
                flag("schema", scene_id, dialog_index, round_index,
                     f"cannot rebuild question: {exc}")
                break

            counts[question.category] = counts.get(question.category, 0) + 1
            independents += 1 if question.independent else 0

            try:
                recomputed = naive_answer(round_record["program"], objects)
            except (NaiveError, ProgramError, KeyError, ValueError) as exc:
                flag("oracle", scene_id, dialog_index, round_index,
                     f"program cannot be evaluated: {exc}")
                recomputed = None
            if recomputed is not None and recomputed != answer:
                flag("oracle", scene_id, dialog_index, round_index,
                     f"recorded answer {answer!r} but the scene says {recomputed!r}")

            if is_redundant(question, state):
                flag("redundancy", scene_id, dialog_index, round_index,
                     "question was already answerable from the dialog")
            dependency = label_dependency(question, state)
            recorded = round_record.get("dependency", {})
            if dependency.kind != recorded.get("kind") or (
                dependency.kind == "coref"
                and dependency.distance != recorded.get("distance")
            ):
                flag("dependency", scene_id, dialog_index, round_index,
                     f"recomputed {dependency} != recorded {recorded}")

            try:
                resolution = {"answer": answer}
                if question.label in ("seek-attr-rel-imm", "seek-attr-rel-early"):
                    resolution["neighbor_id"] = immediate_neighbor(
                        scene, question.anchor_id, question.relation
                    )
                else:
                    conj = dict(question.group_conj)
                    conj.update(question.conj)
                    resolution["group_ids"] = scene.conjunction_ids(conj)
                state = apply_qa(state, question, answer, resolution)
            except (StateConsistencyError, ValueError) as exc:
                # A contradictory or type-inconsistent answer cannot be
                # assimilated; the remaining rounds cannot be replayed.
                flag("soundness", scene_id, dialog_index, round_index, str(exc))
                break
            for problem in verify_against_scene(state, scene):
                flag("soundness", scene_id, dialog_index, round_index, problem)

        total = len(rounds)
        if total == config.rounds:
            for name, (lo, hi) in bounds.items():
                if not lo <= counts.get(name, 0) <= hi:
                    flag("constraint", scene_id, dialog_index, None,
                         f"{name} share {counts.get(name, 0)}/{total} outside "
                         f"[{lo}, {hi}]")
            if independents > config.independent_max():
                flag("constraint", scene_id, dialog_index, None,
                     f"{independents} independent questions exceed the cap")

        bucket = seen_signatures.setdefault(scene_id, set())
        key = tuple(signature)
        if key in bucket:
            flag("distinct", scene_id, dialog_index, None,
                 "dialog duplicates another dialog for this scene")
        bucket.add(key)

    return violations
