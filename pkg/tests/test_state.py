import pytest

from dialog_forge.grammar import QuestionCandidate, get_template
from dialog_forge.state import (
    HistoryDependency,
    StateConsistencyError,
    apply_caption,
    apply_qa,
    is_redundant,
    label_dependency,
    verify_against_scene,
)


class FakeCaption:
    def __init__(self, facts):
        self.revealed_facts = tuple(facts)
        self.template_label = "obj-unique"


def _question(label, **fields):
    template = get_template(label)
    defaults = dict(
        label=label, category=template.category, independent=template.independent,
        history_need=template.history_need, text="", tokens=(), bindings={},
    )
    defaults.update(fields)
    return QuestionCandidate(**defaults)


def red_object_state():
    return apply_caption(
        FakeCaption([
            {"kind": "entity", "handle": "e0", "attrs": {"color": "red"},
             "pinned_id": 2, "origin": "caption-unique"},
        ])
    )


def test_caption_with_one_attribute_known():
    state = red_object_state()
    assert len(state.entities) == 1
    entity = state.entities[0]
    assert entity.known() == {"color": "red"}
    assert entity.unknown() == ("size", "material", "shape")
    assert entity.first_mention == 0 and entity.last_mention == 0
    assert state.focus == "e0"


def test_caption_group_fact_without_entities():
    state = apply_caption(
        FakeCaption([
            {"kind": "group", "handle": "g0", "conj": {"shape": "cylinder"},
             "count": 4, "true_ids": (0, 1, 2, 3)},
        ])
    )
    assert state.entities == ()
    assert state.known_count({"shape": "cylinder"}) == 4
    assert state.focus is None
    assert state.focus_group == "g0"


def test_caption_relation_creates_two_entities_and_edge():
    state = apply_caption(
        FakeCaption([
            {"kind": "entity", "handle": "e0", "attrs": {"color": "green"},
             "pinned_id": 1, "origin": "caption-relation"},
            {"kind": "entity", "handle": "e1", "attrs": {"color": "gray", "shape": "cylinder"},
             "pinned_id": 0, "origin": "caption-unique"},
            {"kind": "edge", "source": "e1", "relation": "front", "target": "e0"},
        ])
    )
    assert len(state.entities) == 2
    assert state.edges[("e1", "front")] == "e0"
    assert state.edges[("e0", "behind")] == "e1"  # mutual edge
    assert state.focus == "e0"


def test_seek_answer_sets_known_attribute():
    state = red_object_state()
    question = _question("seek-attr-imm", anchor_handle="e0", anchor_id=2,
                         attribute="shape", mention_handles=("e0",))
    after = apply_qa(state, question, "cylinder", {})
    assert after.entities[0].get("shape") == "cylinder"
    assert after.round == 1
    assert after.focus == "e0"
    assert after.prev_seek == ("e0", "shape")


def test_contradictory_answer_is_a_hard_error():
    state = red_object_state()
    question = _question("seek-attr-imm", anchor_handle="e0", anchor_id=2,
                         attribute="color", mention_handles=("e0",))
    with pytest.raises(StateConsistencyError):
        apply_qa(state, question, "blue", {})


def test_exist_excl_no_marks_exclusion_settled():
    state = red_object_state()
    question = _question("exist-excl", conj={"color": "red"}, excl_ids=(2,))
    after = apply_qa(state, question, "no", {})
    repeat = _question("exist-excl", conj={"color": "red"}, excl_ids=(2,))
    assert is_redundant(repeat, after)


def test_rel_seek_none_blocks_that_direction():
    state = red_object_state()
    question = _question("seek-attr-rel-imm", anchor_handle="e0", anchor_id=2,
                         attribute="color", relation="right", mention_handles=("e0",))
    after = apply_qa(state, question, "none", {"neighbor_id": None})
    assert after.edges[("e0", "right")] == "none"
    assert len(after.entities) == 1  # no entity materialized
    again = _question("seek-attr-rel-imm", anchor_handle="e0", anchor_id=2,
                      attribute="size", relation="right")
    assert is_redundant(again, after)
    count_probe = _question("count-obj-rel-imm", anchor_handle="e0", relation="right")
    assert is_redundant(count_probe, after)  # empty direction entails zero


def test_rel_seek_answer_creates_pinned_entity():
    state = red_object_state()
    question = _question("seek-attr-rel-imm", anchor_handle="e0", anchor_id=2,
                         attribute="color", relation="left", mention_handles=("e0",))
    after = apply_qa(state, question, "blue", {"neighbor_id": 5})
    assert len(after.entities) == 2
    created = after.entities[1]
    assert created.pinned_id == 5
    assert created.get("color") == "blue"
    assert after.edges[("e0", "left")] == created.handle
    assert after.edges[(created.handle, "right")] == "e0"
    assert after.focus == created.handle


def test_count_one_individuates_an_entity():
    state = red_object_state()
    question = _question("count-attr", conj={"shape": "sphere"})
    after = apply_qa(state, question, "1", {"group_ids": (4,)})
    spheres = [e for e in after.entities if e.get("shape") == "sphere"]
    assert len(spheres) == 1 and spheres[0].pinned_id == 4


def test_label_dependency_kinds():
    state = red_object_state()
    assert label_dependency(_question("count-all"), state) == HistoryDependency("none")
    assert label_dependency(
        _question("exist-excl", conj={"shape": "cube"}), state
    ) == HistoryDependency("all")
    # "What is its color?" one round after the mention.
    assert label_dependency(
        _question("seek-attr-imm", anchor_handle="e0", attribute="size"), state
    ) == HistoryDependency("coref", 1)


def test_label_dependency_distance_ten():
    from dataclasses import replace

    # Nine completed rounds that never touched the caption entity; a round-10
    # question referring back to it sits at the maximum distance.
    state = replace(red_object_state(), round=9)
    question = _question("seek-attr-imm", anchor_handle="e0", attribute="size")
    dependency = label_dependency(question, state)
    assert dependency.kind == "coref"
    assert dependency.distance == 10


def test_is_redundant_on_known_attribute():
    state = red_object_state()
    assert is_redundant(
        _question("seek-attr-imm", anchor_handle="e0", attribute="color"), state
    )
    assert not is_redundant(
        _question("seek-attr-imm", anchor_handle="e0", attribute="material"), state
    )


def test_is_redundant_on_recorded_count():
    state = apply_caption(
        FakeCaption([
            {"kind": "group", "handle": "g0", "conj": {"shape": "cylinder"},
             "count": 4, "true_ids": (0, 1, 2, 3)},
        ])
    )
    assert is_redundant(_question("count-attr", conj={"shape": "cylinder"}), state)
    # A zero count over a weaker conjunction entails zero here too.
    state2 = apply_caption(
        FakeCaption([
            {"kind": "group", "handle": "g0", "conj": {"shape": "cube"},
             "count": 0, "true_ids": ()},
        ])
    )
    assert is_redundant(
        _question("count-attr", conj={"shape": "cube", "color": "red"}), state2
    )


def test_known_facts_never_retracted_during_generation(six_scene):
    from dialog_forge.engine import GenerationConfig, generate_dialogs
    from dialog_forge.state import apply_caption as apply_c

    for dialog in generate_dialogs(six_scene, GenerationConfig(seed=5, beams=25)):
        state = apply_c(dialog.caption)
        known = {}
        for entry in dialog.rounds:
            resolution = {"answer": entry.answer}
            if entry.question.label in ("seek-attr-rel-imm", "seek-attr-rel-early"):
                from dialog_forge.scenes import immediate_neighbor

                resolution["neighbor_id"] = immediate_neighbor(
                    six_scene, entry.question.anchor_id, entry.question.relation
                )
            else:
                conj = dict(entry.question.group_conj)
                conj.update(entry.question.conj)
                resolution["group_ids"] = six_scene.conjunction_ids(conj)
            state = apply_qa(state, entry.question, entry.answer, resolution)
            for entity in state.entities:
                for attr, value in entity.known().items():
                    assert known.setdefault((entity.handle, attr), value) == value
            assert verify_against_scene(state, six_scene) == []
