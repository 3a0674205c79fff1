import random

from dialog_forge.grammar import QuestionCandidate, get_template
from dialog_forge.naive import naive_answer, objects_from_scene
from dialog_forge.oracle import answer, answer_vocabulary, resolve_and_answer
from dialog_forge.programs import PrimitiveCall, PrimitiveProgram
from dialog_forge.scenes import COLORS, MATERIALS, SHAPES, SIZES

from conftest import make_object, random_scene
from dialog_forge.scenes import Scene


def _question(label, program, **fields):
    template = get_template(label)
    defaults = dict(
        label=label, category=template.category, independent=template.independent,
        history_need=template.history_need, text="", tokens=(), bindings={},
        program=program,
    )
    defaults.update(fields)
    return QuestionCandidate(**defaults)


def test_vocabulary_is_exactly_29_tokens():
    vocabulary = answer_vocabulary()
    assert len(vocabulary) == 29
    assert len(set(vocabulary)) == 29
    assert {"yes", "no", "none"} <= set(vocabulary)
    assert set(str(n) for n in range(11)) <= set(vocabulary)
    assert set(COLORS) <= set(vocabulary)
    assert set(SHAPES) <= set(vocabulary)
    assert set(SIZES) <= set(vocabulary)
    assert set(MATERIALS) <= set(vocabulary)


def test_count_all_on_six_object_scene(six_scene):
    question = _question("count-all", PrimitiveProgram((PrimitiveCall("Count"),)))
    assert answer(question, six_scene) == "6"


def test_exclusion_with_single_mentioned_cube():
    scene = Scene(
        "onecube",
        (
            make_object(0, "cube", "red", "large", "metal", 0.0, 0.0),
            make_object(1, "sphere", "blue", "small", "rubber", 1.0, 1.0),
            make_object(2, "cylinder", "green", "large", "rubber", -1.0, -1.0),
        ),
    )
    # Brute-force expectation: cubes in scene minus the mentioned one.
    cubes = [o.index for o in scene.objects if o.shape == "cube"]
    assert len(cubes) == 1
    program = PrimitiveProgram(
        (
            PrimitiveCall("Filter", "shape", "cube"),
            PrimitiveCall("Filter", "exclude", "0", inputs=(0,)),
            PrimitiveCall("Exist", inputs=(1,)),
        )
    )
    question = _question("exist-excl", program, conj={"shape": "cube"}, excl_ids=(0,))
    assert answer(question, scene) == "no"


def test_seek_names_the_true_attribute(figure_scene):
    # "What shape is the object?" about the grounded referent.
    program = PrimitiveProgram(
        (
            PrimitiveCall("Filter", "ids", "1"),
            PrimitiveCall("Sample", "attribute", "shape", inputs=(0,)),
        )
    )
    question = _question("seek-attr-imm", program, anchor_handle="e0", anchor_id=1,
                         attribute="shape")
    assert answer(question, figure_scene) == figure_scene.objects[1].shape


def test_hedged_relation_answers_none(figure_scene):
    rightmost = max(figure_scene.objects, key=lambda o: o.position3d[0]).index
    program = PrimitiveProgram(
        (
            PrimitiveCall("Filter", "ids", str(rightmost)),
            PrimitiveCall("Relate", "relation", "right", inputs=(0,)),
            PrimitiveCall("Sample", "attribute", "color", inputs=(1,)),
        )
    )
    question = _question("seek-attr-rel-imm", program, anchor_handle="e0",
                         anchor_id=rightmost, attribute="color", relation="right")
    resolution = resolve_and_answer(question, figure_scene)
    assert resolution["answer"] == "none"
    assert resolution["neighbor_id"] is None


def test_resolution_carries_group_extension(six_scene):
    program = PrimitiveProgram(
        (
            PrimitiveCall("Filter", "size", "large"),
            PrimitiveCall("Count", inputs=(0,)),
        )
    )
    question = _question("count-attr", program, conj={"size": "large"})
    resolution = resolve_and_answer(question, six_scene)
    expected = tuple(o.index for o in six_scene.objects if o.size == "large")
    assert resolution["group_ids"] == expected
    assert resolution["answer"] == str(len(expected))


def test_every_answer_stays_in_vocabulary():
    vocabulary = set(answer_vocabulary())
    from dialog_forge.engine import GenerationConfig, generate_dialogs

    scene = random_scene(11, 5, 9)
    for dialog in generate_dialogs(scene, GenerationConfig(seed=7, beams=25)):
        for entry in dialog.rounds:
            assert entry.answer in vocabulary


def test_oracle_agrees_with_naive_on_generated_dialogs():
    from dialog_forge.engine import GenerationConfig, generate_dialogs

    for seed in range(4):
        scene = random_scene(seed + 40, 4, 9)
        objects = objects_from_scene(scene)
        for dialog in generate_dialogs(scene, GenerationConfig(seed=seed, beams=25)):
            for entry in dialog.rounds:
                assert naive_answer(entry.question.program.to_json(), objects) == entry.answer
