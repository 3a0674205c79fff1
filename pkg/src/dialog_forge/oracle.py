"""The answerer: executes a bound question program against the full scene.

Answers come from a closed 29-token vocabulary: yes/no, the counts 0..10,
every attribute value, and "none" for hedged relation questions that hit the
scene boundary.
"""

from __future__ import annotations

from .programs import EvalContext, FullWorld, run_program
from .scenes import COLORS, MATERIALS, SHAPES, SIZES, Scene, immediate_neighbor

_VOCABULARY = (
    ("yes", "no")
    + tuple(str(n) for n in range(11))
    + SHAPES
    + COLORS
    + SIZES
    + MATERIALS
    + ("none",)
)


class OracleError(RuntimeError):
    """A question could not be answered against the scene: a generator bug."""


def answer_vocabulary() -> list[str]:
    """The fixed answer inventory, in stable order (29 tokens)."""
    return list(_VOCABULARY)


def _terminal_token(value, output: str) -> str:
    if output == "count":
        if not 0 <= value <= 10:
            raise OracleError(f"count {value} outside the answer vocabulary")
        return str(value)
    if output == "boolean":
        return "yes" if value else "no"
    if output == "attribute_value":
        return value
    raise OracleError(f"program terminates in {output!r}, not an answer")


def resolve_and_answer(question, scene: Scene) -> dict:
    """Answer a question and resolve its answer-side groundings.

    Returns a dict with the answer token plus whatever the state update
    needs: the immediate neighbor's id for relation seeks and the extension
    of the conjunction for count/exist questions over attribute groups.
    """
    ctx = EvalContext(FullWorld(scene), mode="answer")
    value = run_program(question.program, ctx)
    token = _terminal_token(value, question.program.output)
    if token not in _VOCABULARY:
        raise OracleError(f"answer {token!r} outside the vocabulary")
    resolution: dict = {"answer": token}
    if question.label in ("seek-attr-rel-imm", "seek-attr-rel-early"):
        resolution["neighbor_id"] = immediate_neighbor(
            scene, question.anchor_id, question.relation
        )
    elif question.label in (
        "count-all",
        "count-attr",
        "exist-attr",
        "count-attr-group",
        "exist-attr-group",
    ):
        conj = dict(question.group_conj)
        conj.update(question.conj)
        resolution["group_ids"] = scene.conjunction_ids(conj)
    return resolution


def answer(question, scene: Scene) -> str:
    """One-word ground-truth answer for a bound question."""
    return resolve_and_answer(question, scene)["answer"]
