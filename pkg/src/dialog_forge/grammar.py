"""Caption and question templates: registry, realization, instantiation.

A template couples a primitive-program skeleton with surface patterns.
Patterns are strings of space-separated chunks; ``{np1:a}`` renders a noun
phrase ("a large shiny cube"), ``{R_of}``/``{R_its}`` render relation
phrases, ``{its}``/``{it}``/``{them}`` render anaphoric pronouns, and
``{A}``/``{X}``/``{E}`` render an attribute name, a count word, and a
positional-extreme word.  Every realized utterance can be parsed back to its
template and bindings through a regex derived from the same pattern, which
the dataset validator uses.

Captions are instantiated by actually running their primitive program over
the full scene.  Questions are instantiated against the questioner's partial
knowledge only; the resulting candidate carries a fully bound program that
the answerer (and any external oracle) can execute against the scene.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .programs import (
    EvalContext,
    FullWorld,
    GenerationAbort,
    PrimitiveCall,
    PrimitiveProgram,
    run_program,
)
from .scenes import ATTRIBUTES, ATTRIBUTE_VALUES, COLORS, RELATIONS, Scene
from .state import PartialScene

# -- word tables -------------------------------------------------------------

SIZE_WORDS = {"large": ("large", "big"), "small": ("small", "tiny")}
MATERIAL_WORDS = {"metal": ("metal", "metallic", "shiny"), "rubber": ("rubber", "matte")}
SHAPE_NOUNS = {"cube": ("cube", "block", "box"), "cylinder": ("cylinder",), "sphere": ("sphere", "ball")}
SHAPE_ADJECTIVES = {"sphere": "round"}
FALLBACK_NOUNS = ("object", "thing")

NUMBER_WORDS = ("zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten")

EXTREME_WORDS = {"right": "rightmost", "left": "leftmost", "fore": "closest", "rear": "farthest", "center": "middle"}

REL_OF_WORDS = {
    "right": ("to", "the", "right", "of"),
    "left": ("to", "the", "left", "of"),
    "front": ("in", "front", "of"),
    "behind": ("behind",),
}
# Pronoun position marked so the referring span can cover just "its"/"it".
REL_ITS_WORDS = {
    "right": (("to", "its", "right"), 1),
    "left": (("to", "its", "left"), 1),
    "front": (("in", "front", "of", "it"), 3),
    "behind": (("behind", "it"), 1),
}

_CANON_WORD: dict[str, tuple[str, str]] = {}
for value, words in SIZE_WORDS.items():
    for word in words:
        _CANON_WORD[word] = ("size", value)
for value in COLORS:
    _CANON_WORD[value] = ("color", value)
for value, words in MATERIAL_WORDS.items():
    for word in words:
        _CANON_WORD[word] = ("material", value)
for value, adj in SHAPE_ADJECTIVES.items():
    _CANON_WORD[adj] = ("shape", value)

_CANON_NOUN: dict[str, str | None] = {}


def _pluralize(word: str) -> str:
    return word + ("es" if word.endswith(("x", "s")) else "s")


for value, words in SHAPE_NOUNS.items():
    for word in words:
        _CANON_NOUN[word] = value
        _CANON_NOUN[_pluralize(word)] = value
for word in FALLBACK_NOUNS:
    _CANON_NOUN[word] = None
    _CANON_NOUN[_pluralize(word)] = None


def _adjective_words(attr: str, value: str) -> tuple[str, ...]:
    if attr == "size":
        return SIZE_WORDS[value]
    if attr == "material":
        return MATERIAL_WORDS[value]
    return (value,)


class RealizationError(ValueError):
    """A surface form was realized with incomplete bindings."""


# -- pattern compilation -------------------------------------------------------

_PUNCT = (".", ",", "?", "!")


def _compile_pattern(pattern: str) -> tuple:
    chunks = []
    for raw in pattern.split():
        if raw.startswith("{") and raw.endswith("}"):
            body = raw[1:-1]
            if body in ("its", "it", "them"):
                chunks.append(("pron", body))
            elif body in ("A", "X", "E", "R_of", "R_its"):
                chunks.append((body,))
            else:
                name, _, mod = body.partition(":")
                chunks.append(("np", name, mod or ""))
        elif raw in _PUNCT:
            chunks.append(("punct", raw))
        else:
            chunks.append(("lit", raw))
    return tuple(chunks)


def _render_np(spec: dict, mod: str, rng) -> tuple[list[str], str | None]:
    """Noun phrase pieces for one entity/conjunction mention."""
    attrs = spec.get("attrs", {})
    words: list[str] = []
    if mod == "that":
        words.append("that")
    elif mod == "earlier":
        words.extend(("the", "earlier"))
    for attr in ("size", "color", "material"):
        if attr in attrs:
            options = _adjective_words(attr, attrs[attr])
            words.append(options[rng.randrange(len(options))] if len(options) > 1 else options[0])
    shape = attrs.get("shape")
    if shape is not None:
        adjective = SHAPE_ADJECTIVES.get(shape)
        if adjective is not None and rng.random() < 0.25:
            words.append(adjective)
            noun = FALLBACK_NOUNS[rng.randrange(2)]
        else:
            options = SHAPE_NOUNS[shape]
            noun = options[rng.randrange(len(options))] if len(options) > 1 else options[0]
    else:
        noun = FALLBACK_NOUNS[rng.randrange(2)]
    if mod == "pl":
        noun = _pluralize(noun)
    words.append(noun)
    if mod == "a":
        words.insert(0, "an" if words[0][0] in "aeiou" else "a")
    return words, spec.get("ref")


def realize_pieces(chunks: tuple, bindings: dict, rng) -> tuple[list[str], list[tuple]]:
    """Render a compiled pattern into lowercase token pieces plus spans.

    Spans are ``(start, end, kind, handle)`` token ranges of referring
    phrases; ``end`` is exclusive.
    """
    pieces: list[str] = []
    spans: list[tuple] = []
    try:
        for chunk in chunks:
            tag = chunk[0]
            if tag == "lit" or tag == "punct":
                pieces.append(chunk[1])
            elif tag == "pron":
                start = len(pieces)
                pieces.append(chunk[1])
                ref = bindings["pron_ref"] if chunk[1] != "them" else bindings["group_ref"]
                kind = "group" if chunk[1] == "them" else "entity"
                spans.append((start, start + 1, kind, ref))
            elif tag == "np":
                words, ref = _render_np(bindings[chunk[1]], chunk[2], rng)
                start = len(pieces)
                pieces.extend(words)
                if ref is not None:
                    spans.append((start, len(pieces), "entity", ref))
            elif tag == "A":
                pieces.append(bindings["A"])
            elif tag == "X":
                pieces.append(NUMBER_WORDS[bindings["X"]])
            elif tag == "E":
                pieces.append(EXTREME_WORDS[bindings["E"]])
            elif tag == "R_of":
                pieces.extend(REL_OF_WORDS[bindings["R"]])
            elif tag == "R_its":
                words, pron = REL_ITS_WORDS[bindings["R"]]
                start = len(pieces)
                pieces.extend(words)
                spans.append((start + pron, start + pron + 1, "entity", bindings["pron_ref"]))
    except KeyError as exc:
        raise RealizationError(f"missing binding {exc}") from exc
    return pieces, spans


def pieces_to_text(pieces: list[str]) -> str:
    out = []
    for piece in pieces:
        if piece in _PUNCT and out:
            out[-1] += piece
        else:
            out.append(piece)
    text = " ".join(out)
    return text[0].upper() + text[1:] if text else text


# -- round-trip regexes --------------------------------------------------------

_ADJ_ALTS = {
    "size": "|".join(sorted({w for ws in SIZE_WORDS.values() for w in ws})),
    "color": "|".join(COLORS),
    "material": "|".join(sorted({w for ws in MATERIAL_WORDS.values() for w in ws})),
}
_SHAPE_ADJ_ALT = "|".join(sorted(SHAPE_ADJECTIVES.values()))
_NOUN_ALT = "|".join(sorted(_CANON_NOUN, key=len, reverse=True))


def _np_regex(name: str, mod: str) -> str:
    parts = []
    if mod == "a":
        parts.append("(?:a|an) ")
    elif mod == "that":
        parts.append("that ")
    elif mod == "earlier":
        parts.append("the earlier ")
    for attr in ("size", "color", "material"):
        parts.append(f"(?:(?P<{name}_{attr}>{_ADJ_ALTS[attr]}) )?")
    parts.append(f"(?:(?P<{name}_shapeadj>{_SHAPE_ADJ_ALT}) )?")
    parts.append(f"(?P<{name}_noun>{_NOUN_ALT})")
    return "".join(parts)


def _pattern_regex(chunks: tuple) -> re.Pattern:
    parts = []
    for chunk in chunks:
        tag = chunk[0]
        if tag in ("lit", "pron"):
            parts.append(re.escape(chunk[1]))
        elif tag == "punct":
            parts.append(re.escape(chunk[1]))
        elif tag == "np":
            parts.append(_np_regex(chunk[1], chunk[2]))
        elif tag == "A":
            parts.append(f"(?P<A>{'|'.join(ATTRIBUTES)})")
        elif tag == "X":
            parts.append(f"(?P<X>{'|'.join(NUMBER_WORDS)})")
        elif tag == "E":
            parts.append(f"(?P<E>{'|'.join(EXTREME_WORDS.values())})")
        elif tag == "R_of":
            alts = "|".join(" ".join(words) for words in REL_OF_WORDS.values())
            parts.append(f"(?P<R>{alts})")
        elif tag == "R_its":
            alts = "|".join(" ".join(words) for words, _ in REL_ITS_WORDS.values())
            parts.append(f"(?P<R>{alts})")
    return re.compile(r"\s+".join(parts))


_REL_PHRASE_CANON = {}
for rel, words in REL_OF_WORDS.items():
    _REL_PHRASE_CANON[" ".join(words)] = rel
for rel, (words, _) in REL_ITS_WORDS.items():
    _REL_PHRASE_CANON[" ".join(words)] = rel
_EXTREME_CANON = {word: extreme for extreme, word in EXTREME_WORDS.items()}


def _canonical_groups(match: re.Match) -> dict:
    bindings: dict = {}
    nps: dict[str, dict] = {}
    for key, raw in match.groupdict().items():
        if raw is None:
            continue
        if key == "A":
            bindings["A"] = raw
        elif key == "X":
            bindings["X"] = NUMBER_WORDS.index(raw)
        elif key == "E":
            bindings["E"] = _EXTREME_CANON[raw]
        elif key == "R":
            bindings["R"] = _REL_PHRASE_CANON[raw]
        else:
            name, _, part = key.partition("_")
            attrs = nps.setdefault(name, {})
            if part == "noun":
                shape = _CANON_NOUN[raw]
                if shape is not None:
                    attrs["shape"] = shape
            elif part == "shapeadj":
                attrs["shape"] = _CANON_WORD[raw][1]
            else:
                attrs[part] = _CANON_WORD[raw][1] if part in ("size", "material") else raw
    for name, attrs in nps.items():
        bindings[name] = attrs
    return bindings


# -- templates -----------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceForm:
    pattern: str
    guard: str | None = None  # e.g. "A=material"
    chunks: tuple = field(default=(), compare=False)
    regex: re.Pattern | None = field(default=None, compare=False)

    def admits(self, bindings: dict) -> bool:
        if self.guard is None:
            return True
        key, _, value = self.guard.partition("=")
        return bindings.get(key) == value


@dataclass(frozen=True)
class Template:
    """One caption family or question type."""

    label: str
    category: str  # caption | count | exist | seek
    family: str
    surface_forms: tuple[SurfaceForm, ...]
    independent: bool = False
    history_need: str = "coref"  # none | coref | all
    program: PrimitiveProgram | None = None  # executable skeleton (captions)
    schema: tuple = ()  # schematic step list for the registry dump

    def __post_init__(self):
        if self.independent and self.history_need != "none":
            raise ValueError(f"{self.label}: independent templates cannot need history")


@dataclass(frozen=True)
class Utterance:
    text: str
    tokens: tuple[str, ...]
    template_label: str
    bindings: dict
    referring_spans: tuple = ()
    revealed_facts: tuple = ()


@dataclass(frozen=True)
class QuestionCandidate:
    """A plausible, non-redundant question bound to questioner entities."""

    label: str
    category: str
    independent: bool
    history_need: str
    text: str
    tokens: tuple[str, ...]
    bindings: dict
    referring_spans: tuple = ()
    anchor_handle: str | None = None
    anchor_id: int | None = None
    attribute: str | None = None
    relation: str | None = None
    conj: dict = field(default_factory=dict)
    group_handle: str | None = None
    group_conj: dict = field(default_factory=dict)
    group_ids: tuple = ()
    excl_ids: tuple = ()
    mention_handles: tuple = ()
    program: PrimitiveProgram | None = None
    realize_payload: dict | None = field(default=None, compare=False, repr=False)

    def semantic_signature(self) -> str:
        """Identity of the question modulo phrasing, for beam bookkeeping."""
        parts = [self.label, self.anchor_handle or "", self.attribute or "",
                 self.relation or "", self.group_handle or ""]
        parts.extend(f"{a}={v}" for a, v in sorted(self.conj.items()))
        return "|".join(parts)


def _forms(*patterns) -> tuple[SurfaceForm, ...]:
    out = []
    for item in patterns:
        pattern, guard = item if isinstance(item, tuple) else (item, None)
        chunks = _compile_pattern(pattern)
        out.append(SurfaceForm(pattern, guard, chunks, _pattern_regex(chunks)))
    return tuple(out)


def _caption_program(label: str) -> PrimitiveProgram | None:
    if label == "obj-unique":
        return PrimitiveProgram(
            (
                PrimitiveCall("Sample", "attributes"),
                PrimitiveCall("Unique", inputs=(0,)),
                PrimitiveCall("Sample", "object", inputs=(1,)),
            )
        )
    if label == "obj-count":
        return PrimitiveProgram(
            (
                PrimitiveCall("Sample", "attributes"),
                PrimitiveCall("Group", inputs=(0,)),
                PrimitiveCall("Sample", "class", inputs=(1,)),
                PrimitiveCall("Count", inputs=(2,)),
            )
        )
    if label == "obj-extreme":
        return PrimitiveProgram(
            (
                PrimitiveCall("Sample", "extreme"),
                PrimitiveCall("Filter", "extreme", inputs=(0,)),
            )
        )
    if label == "obj-relation":
        return PrimitiveProgram(
            (
                PrimitiveCall("Sample", "attributes"),
                PrimitiveCall("Unique", inputs=(0,)),
                PrimitiveCall("Sample", "object", inputs=(1,)),
                PrimitiveCall("Sample", "relation"),
                PrimitiveCall("Relate", inputs=(2, 3)),
            )
        )
    return None


_TEMPLATE_SPECS: tuple = (
    # captions ---------------------------------------------------------------
    ("obj-unique", "caption", False, "none", (
        "{np1:a} is present in the image .",
        "there is {np1:a} in the picture .",
        "the picture features {np1:a} .",
    )),
    ("obj-count", "caption", False, "none", (
        "the image has {X} {np1:pl} .",
        "there are {X} {np1:pl} in the view .",
        "{X} {np1:pl} are present in the scene .",
    )),
    ("obj-extreme", "caption", False, "none", (
        "the {E} thing in the view is {np1:a} .",
        "{np1:a} is the {E} thing in the image .",
    )),
    ("obj-relation", "caption", False, "none", (
        "{np2:a} stands {R_of} {np1:a} .",
        "there is {np2:a} {R_of} {np1:a} .",
    )),
    # count / exist ------------------------------------------------------------
    ("count-all", "count", True, "none", (
        "how many objects in the image ?",
        "how many things are in the scene ?",
        "what is the total number of objects in the picture ?",
    )),
    ("count-excl", "count", False, "all", (
        "how many other {np1:pl} in the picture ?",
        "how many other {np1:pl} does the image have ?",
        "what number of other {np1:pl} are there ?",
    )),
    ("exist-excl", "exist", False, "all", (
        "are there other {np1:pl} in the picture ?",
        "does the image have other {np1:pl} ?",
        "any other {np1:pl} in the scene ?",
    )),
    ("count-attr", "count", True, "none", (
        "if present , how many {np1:pl} ?",
        "how many {np1:pl} are in the image , if any ?",
        "how many {np1:pl} does the picture contain ?",
    )),
    ("exist-attr", "exist", True, "none", (
        "are there {np1:pl} ?",
        "does the image contain {np1:pl} ?",
        "are {np1:pl} present in the scene ?",
    )),
    ("count-attr-group", "count", False, "coref", (
        "how many {np1:pl} among {them} ?",
        "how many of {them} are {np1:pl} ?",
    )),
    ("exist-attr-group", "exist", False, "coref", (
        "are there {np1:pl} among {them} ?",
        "are any of {them} {np1:pl} ?",
    )),
    ("count-obj-rel-imm", "count", False, "coref", (
        "how many things {R_its} ?",
        "how many objects are there {R_its} ?",
    )),
    ("exist-obj-rel-imm", "exist", False, "coref", (
        "are there things {R_its} ?",
        "are there any objects {R_its} ?",
    )),
    ("count-obj-rel-imm2", "count", False, "coref", (
        "how about {R_its} ?",
        "and {R_its} ?",
    )),
    ("exist-obj-rel-imm2", "exist", False, "coref", (
        "how about {R_its} ?",
        "and {R_its} ?",
    )),
    ("count-obj-rel-early", "count", False, "coref", (
        "how many things {R_of} {np1:that} ?",
        "how many objects are {R_of} {np1:that} ?",
    )),
    ("exist-obj-rel-early", "exist", False, "coref", (
        "are there things {R_of} {np1:that} ?",
        "are there any objects {R_of} {np1:that} ?",
    )),
    ("count-obj-excl-imm", "count", False, "coref", (
        "how many things that share {its} {A} ?",
        "how many other things share {its} {A} ?",
    )),
    ("exist-obj-excl-imm", "exist", False, "coref", (
        "are there things that share {its} {A} ?",
        "do any other things share {its} {A} ?",
    )),
    ("count-obj-excl-early", "count", False, "coref", (
        "how many things that are the same {A} as {np1:that} ?",
        "how many other objects have the same {A} as {np1:that} ?",
    )),
    ("exist-obj-excl-early", "exist", False, "coref", (
        "are there things that are the same {A} as {np1:that} ?",
        "do other things share the {A} of {np1:that} ?",
    )),
    # seek ----------------------------------------------------------------------
    ("seek-attr-imm", "seek", False, "coref", (
        "what is {its} {A} ?",
        "what {A} is {it} ?",
        "what {A} does {it} have ?",
    )),
    ("seek-attr-imm2", "seek", False, "coref", (
        "how about {A} ?",
        "what about {A} ?",
        "and {its} {A} ?",
    )),
    ("seek-attr-early", "seek", False, "coref", (
        "what is the {A} of {np1:that} ?",
        "what {A} is {np1:that} ?",
    )),
    ("seek-attr-sim-early", "seek", False, "coref", (
        "what about {np1:earlier} ?",
        "how about {np1:earlier} ?",
    )),
    ("seek-attr-rel-imm", "seek", False, "coref", (
        "if there is a thing {R_its} , what {A} is it ?",
        "what is the {A} of the thing {R_its} , if there is one ?",
    )),
    ("seek-attr-rel-early", "seek", False, "coref", (
        "if there is a thing {R_of} {np1:that} , what {A} is it ?",
        ("if there is a thing {R_of} {np1:that} , what {A} is it made of ?", "A=material"),
        "what is the {A} of the thing {R_of} {np1:that} , if any ?",
    )),
)


_QUESTION_SCHEMAS = {
    "count-all": ({"kind": "Count", "inputs": []},),
    "count-attr": ({"kind": "Filter", "param": "<attr>", "arg": "<value>", "inputs": []}, {"kind": "Count", "inputs": [0]}),
    "exist-attr": ({"kind": "Filter", "param": "<attr>", "arg": "<value>", "inputs": []}, {"kind": "Exist", "inputs": [0]}),
    "count-excl": ({"kind": "Filter", "param": "<attr>", "arg": "<value>", "inputs": []}, {"kind": "Filter", "param": "exclude", "arg": "<mentioned>", "inputs": [0]}, {"kind": "Count", "inputs": [1]}),
    "exist-excl": ({"kind": "Filter", "param": "<attr>", "arg": "<value>", "inputs": []}, {"kind": "Filter", "param": "exclude", "arg": "<mentioned>", "inputs": [0]}, {"kind": "Exist", "inputs": [1]}),
    "count-attr-group": ({"kind": "Filter", "param": "<group attr>", "arg": "<value>", "inputs": []}, {"kind": "Filter", "param": "<attr>", "arg": "<value>", "inputs": [0]}, {"kind": "Count", "inputs": [1]}),
    "exist-attr-group": ({"kind": "Filter", "param": "<group attr>", "arg": "<value>", "inputs": []}, {"kind": "Filter", "param": "<attr>", "arg": "<value>", "inputs": [0]}, {"kind": "Exist", "inputs": [1]}),
    "count-obj-rel": ({"kind": "Filter", "param": "ids", "arg": "<anchor>", "inputs": []}, {"kind": "Relate", "param": "all", "arg": "<relation>", "inputs": [0]}, {"kind": "Count", "inputs": [1]}),
    "exist-obj-rel": ({"kind": "Filter", "param": "ids", "arg": "<anchor>", "inputs": []}, {"kind": "Relate", "param": "all", "arg": "<relation>", "inputs": [0]}, {"kind": "Exist", "inputs": [1]}),
    "count-obj-excl": ({"kind": "Filter", "param": "ids", "arg": "<anchor>", "inputs": []}, {"kind": "Relate", "param": "same", "arg": "<attribute>", "inputs": [0]}, {"kind": "Count", "inputs": [1]}),
    "exist-obj-excl": ({"kind": "Filter", "param": "ids", "arg": "<anchor>", "inputs": []}, {"kind": "Relate", "param": "same", "arg": "<attribute>", "inputs": [0]}, {"kind": "Exist", "inputs": [1]}),
    "seek-attr": ({"kind": "Filter", "param": "ids", "arg": "<anchor>", "inputs": []}, {"kind": "Sample", "param": "attribute", "arg": "<attribute>", "inputs": [0]}),
    "seek-attr-rel": ({"kind": "Filter", "param": "ids", "arg": "<anchor>", "inputs": []}, {"kind": "Relate", "param": "relation", "arg": "<relation>", "inputs": [0]}, {"kind": "Sample", "param": "attribute", "arg": "<attribute>", "inputs": [1]}),
}


def _schema_for(label: str) -> tuple:
    if label in _QUESTION_SCHEMAS:
        return _QUESTION_SCHEMAS[label]
    for prefix in ("count-obj-rel", "exist-obj-rel", "count-obj-excl", "exist-obj-excl"):
        if label.startswith(prefix):
            return _QUESTION_SCHEMAS[prefix]
    if label.startswith("seek-attr-rel"):
        return _QUESTION_SCHEMAS["seek-attr-rel"]
    if label.startswith("seek-attr"):
        return _QUESTION_SCHEMAS["seek-attr"]
    return ()


_REGISTRY: list[Template] | None = None


def build_registry() -> list[Template]:
    """All caption families and question types, surface forms compiled."""
    global _REGISTRY
    if _REGISTRY is None:
        templates = []
        for label, category, independent, history_need, patterns in _TEMPLATE_SPECS:
            program = _caption_program(label) if category == "caption" else None
            schema = (
                tuple(step.to_json() for step in program.steps)
                if program is not None
                else _schema_for(label)
            )
            templates.append(
                Template(
                    label=label,
                    category=category,
                    family=label,
                    surface_forms=_forms(*patterns),
                    independent=independent,
                    history_need=history_need,
                    program=program,
                    schema=schema,
                )
            )
        _REGISTRY = templates
    return list(_REGISTRY)


def registry_dump() -> list[dict]:
    """JSON-ready registry description for external tooling."""
    out = []
    for template in build_registry():
        placeholders = sorted(
            {
                chunk[0] if chunk[0] in ("A", "X", "E") else "R"
                for form in template.surface_forms
                for chunk in form.chunks
                if chunk[0] in ("A", "X", "E", "R_of", "R_its")
            }
        )
        has_np = any(
            chunk[0] == "np" for form in template.surface_forms for chunk in form.chunks
        )
        if has_np:
            placeholders = ["Z", "C", "M", "S"] + placeholders
        out.append(
            {
                "label": template.label,
                "category": template.category,
                "independent": template.independent,
                "history": template.history_need,
                "placeholders": placeholders,
                "surface_forms": [form.pattern for form in template.surface_forms],
                "program": [dict(step) for step in template.schema],
            }
        )
    return out


def get_template(label: str) -> Template:
    for template in build_registry():
        if template.label == label:
            return template
    raise KeyError(label)


# -- realization ------------------------------------------------------------


def _choose_form(template: Template, bindings: dict, rng) -> SurfaceForm:
    admissible = [form for form in template.surface_forms if form.admits(bindings)]
    if not admissible:
        raise RealizationError(f"{template.label}: no admissible surface form")
    if len(admissible) == 1:
        return admissible[0]
    return admissible[rng.randrange(len(admissible))]


def realize_text(template: Template, bindings: dict, rng) -> str:
    """Render one surface form with the given bindings into a sentence."""
    form = _choose_form(template, bindings, rng)
    pieces, _ = realize_pieces(form.chunks, bindings, rng)
    return pieces_to_text(pieces)


def parse_utterance(label: str, text: str) -> dict | None:
    """Recover canonical bindings from realized text, or None on mismatch."""
    from .util import tokenize

    template = get_template(label)
    joined = " ".join(tokenize(text))
    for form in template.surface_forms:
        match = form.regex.fullmatch(joined)
        if match:
            return _canonical_groups(match)
    return None


# -- caption instantiation ----------------------------------------------------


def _subset_of_attrs(rng, available: tuple[str, ...]) -> tuple[str, ...]:
    weights = (8, 4, 2, 1)[: len(available)]
    size = rng.choices(range(1, len(available) + 1), weights=weights)[0]
    chosen = rng.sample(available, size)
    return tuple(a for a in ATTRIBUTES if a in chosen)


def _np_attrs(scene: Scene, obj: int, attrs) -> dict:
    return {a: scene.objects[obj].attribute(a) for a in attrs}


def instantiate_caption(template: Template, scene: Scene, rng) -> Utterance:
    """Run the caption family's program over the full scene and realize it.

    Raises :class:`GenerationAbort` when the sampled derivation violates a
    constraint (the caller moves on to another family or another sample).
    """
    ctx = EvalContext(FullWorld(scene), rng=rng, mode="generate")
    label = template.label
    if label == "obj-unique":
        terminal, values = run_program(template.program, ctx, trace=True)
        attrs, obj = values[0], terminal[0]
        bindings = {"np1": {"attrs": _np_attrs(scene, obj, attrs), "ref": "e0"}}
        facts = (
            {"kind": "entity", "handle": "e0", "attrs": bindings["np1"]["attrs"],
             "pinned_id": obj, "origin": "caption-unique"},
        )
        program = PrimitiveProgram(
            (
                PrimitiveCall("Unique", ",".join(attrs)),
                PrimitiveCall("Filter", "ids", str(obj), inputs=(0,)),
            )
        )
    elif label == "obj-count":
        terminal, values = run_program(template.program, ctx, trace=True)
        attrs, members = values[0], values[2]
        conj = _np_attrs(scene, members[0], attrs)
        bindings = {"np1": {"attrs": conj, "ref": "g0"}, "X": terminal}
        facts = (
            {"kind": "group", "handle": "g0", "conj": conj, "count": terminal,
             "true_ids": tuple(members)},
        )
        steps = [
            PrimitiveCall("Filter", attr, value, inputs=(pos - 1,) if pos else ())
            for pos, (attr, value) in enumerate(sorted(conj.items()))
        ]
        steps.append(PrimitiveCall("Count", inputs=(len(steps) - 1,)))
        program = PrimitiveProgram(tuple(steps))
    elif label == "obj-extreme":
        terminal, values = run_program(template.program, ctx, trace=True)
        extreme, obj = values[0], terminal[0]
        mention = _subset_of_attrs(rng, ATTRIBUTES)
        bindings = {"E": extreme, "np1": {"attrs": _np_attrs(scene, obj, mention), "ref": "e0"}}
        facts = (
            {"kind": "entity", "handle": "e0", "attrs": bindings["np1"]["attrs"],
             "pinned_id": obj, "origin": "caption-extreme", "extreme": extreme},
        )
        program = PrimitiveProgram((PrimitiveCall("Filter", "extreme", extreme),))
    elif label == "obj-relation":
        terminal, values = run_program(template.program, ctx, trace=True)
        attrs, anchor, relation, target = values[0], values[2][0], values[3], terminal[0]
        mention = _subset_of_attrs(rng, ATTRIBUTES)
        bindings = {
            "np2": {"attrs": _np_attrs(scene, target, mention), "ref": "e0"},
            "R": relation,
            "np1": {"attrs": _np_attrs(scene, anchor, attrs), "ref": "e1"},
        }
        facts = (
            {"kind": "entity", "handle": "e0", "attrs": bindings["np2"]["attrs"],
             "pinned_id": target, "origin": "caption-relation"},
            {"kind": "entity", "handle": "e1", "attrs": bindings["np1"]["attrs"],
             "pinned_id": anchor, "origin": "caption-unique"},
            {"kind": "edge", "source": "e1", "relation": relation, "target": "e0"},
        )
        program = PrimitiveProgram(
            (
                PrimitiveCall("Filter", "ids", str(anchor)),
                PrimitiveCall("Relate", "relation", relation, inputs=(0,)),
            )
        )
    else:
        raise ValueError(f"{label!r} is not a caption family")
    form = _choose_form(template, bindings, rng)
    pieces, spans = realize_pieces(form.chunks, bindings, rng)
    facts = facts + ({"kind": "program", "steps": program.to_json()},)
    return Utterance(
        text=pieces_to_text(pieces),
        tokens=tuple(pieces),
        template_label=label,
        bindings=_public_bindings(bindings),
        referring_spans=tuple(spans),
        revealed_facts=facts,
    )


def _public_bindings(bindings: dict) -> dict:
    out = {}
    for key, value in bindings.items():
        if key in ("np1", "np2"):
            out[key] = dict(value.get("attrs", {}))
        elif key in ("pron_ref", "group_ref"):
            continue
        else:
            out[key] = value
    return out


# -- question instantiation ----------------------------------------------------


def _focus_entity(partial: PartialScene):
    if partial.focus is None or partial.focus_round != partial.round:
        raise GenerationAbort("no entity was in focus last round")
    return partial.entity(partial.focus)


def _early_entities(partial: PartialScene):
    return [
        e
        for e in partial.entities
        if e.pinned and e.last_mention <= partial.round - 1
    ]


def _early_order(pool: list, partial: PartialScene, rng) -> list:
    """Order anchors with a pull toward long-unmentioned entities.

    The minimum reference distance grows with the round (late rounds must
    reach further back), and eligible anchors are sampled proportionally to
    their squared mention distance.  Together these give the emitted
    coreference-distance histogram its spread beyond 1-2.
    """
    t = partial.round + 1
    floor = 2 if t <= 3 else (3 if t <= 6 else 4)
    items = [e for e in pool if t - e.last_mention >= floor]
    out = []
    while items:
        weights = [float(t - e.last_mention) ** 4 for e in items]
        total = sum(weights)
        x = rng.random() * total
        pick = len(items) - 1
        for pos, weight in enumerate(weights):
            x -= weight
            if x <= 0:
                pick = pos
                break
        out.append(items.pop(pick))
    return out


def _referring_attrs(entity, partial: PartialScene, rng) -> dict:
    """Minimal known-attribute subset naming this entity unambiguously.

    A subset works when every other known entity visibly differs on at
    least one of its attributes; entities with the attribute still unknown
    could coincide, so they block that subset.
    """
    known = entity.known()
    if not known:
        raise GenerationAbort(f"{entity.handle} has no describable attribute")
    others = [e for e in partial.entities if e.handle != entity.handle]
    names = [a for a in ATTRIBUTES if a in known]
    from itertools import combinations

    for size in range(1, len(names) + 1):
        valid = []
        for combo in combinations(names, size):
            ok = True
            for other in others:
                if not any(
                    other.get(a) is not None and other.get(a) != known[a] for a in combo
                ):
                    ok = False
                    break
            if ok:
                valid.append(combo)
        if valid:
            combo = valid[rng.randrange(len(valid))]
            return {a: known[a] for a in combo}
    raise GenerationAbort(f"{entity.handle} cannot be named unambiguously")


def _conj_filters(conj: dict) -> list[PrimitiveCall]:
    steps = []
    for attr, value in sorted(conj.items()):
        steps.append(
            PrimitiveCall("Filter", attr, value, inputs=(len(steps) - 1,) if steps else ())
        )
    return steps


def _terminal(category: str, after: int) -> PrimitiveCall:
    return PrimitiveCall("Count" if category == "count" else "Exist", inputs=(after,))


def _sample_conj(rng, exclude: tuple[str, ...] = ()) -> dict:
    pool = [a for a in ATTRIBUTES if a not in exclude]
    size = rng.choices((1, 2), weights=(8, 2))[0] if len(pool) > 1 else 1
    chosen = rng.sample(pool, size)
    return {
        a: ATTRIBUTE_VALUES[a][rng.randrange(len(ATTRIBUTE_VALUES[a]))]
        for a in sorted(chosen, key=ATTRIBUTES.index)
    }


def _finish(template, rng, bindings, **fields) -> QuestionCandidate:
    # Text is rendered separately (realize_candidate): beams discard most
    # candidates, so phrasing is only paid for on the survivors.
    return QuestionCandidate(
        label=template.label,
        category=template.category,
        independent=template.independent,
        history_need=template.history_need,
        text="",
        tokens=(),
        bindings=_public_bindings(bindings),
        referring_spans=(),
        realize_payload=bindings,
        **fields,
    )


def realize_candidate(candidate: QuestionCandidate, rng) -> QuestionCandidate:
    """Render a deferred candidate's surface text, tokens, and spans."""
    if candidate.text:
        return candidate
    if candidate.realize_payload is None:
        raise RealizationError("candidate has no realization payload")
    from dataclasses import replace

    template = get_template(candidate.label)
    form = _choose_form(template, candidate.realize_payload, rng)
    pieces, spans = realize_pieces(form.chunks, candidate.realize_payload, rng)
    return replace(
        candidate,
        text=pieces_to_text(pieces),
        tokens=tuple(pieces),
        referring_spans=tuple(spans),
    )


def _inst_count_all(template, partial, rng):
    if partial.known_count({}) is not None:
        raise GenerationAbort("total already known")
    return _finish(
        template, rng, {},
        program=PrimitiveProgram((PrimitiveCall("Count"),)),
    )


def _inst_attr(template, partial, rng):
    conj = _sample_conj(rng)
    probe = QuestionCandidate(
        label=template.label, category=template.category, independent=True,
        history_need="none", text="", tokens=(), bindings={}, conj=conj,
    )
    from .state import is_redundant

    if is_redundant(probe, partial):
        raise GenerationAbort("conjunction already resolved")
    steps = _conj_filters(conj)
    steps.append(_terminal(template.category, len(steps) - 1))
    return _finish(
        template, rng,
        {"np1": {"attrs": conj}},
        conj=conj,
        program=PrimitiveProgram(tuple(steps)),
    )


def _inst_attr_group(template, partial, rng):
    groups = [g for g in partial.groups if g.nonempty or (g.count or 0) > 0]
    if not groups:
        raise GenerationAbort("no group to refer back to")
    t = partial.round + 1
    weights = [float(t - g.last_mention) ** 2 for g in groups]
    total = sum(weights)
    x = rng.random() * total
    group = groups[-1]
    for pos, weight in enumerate(weights):
        x -= weight
        if x <= 0:
            group = groups[pos]
            break
    taken = tuple(attr for attr, _ in group.conj)
    if len(taken) >= len(ATTRIBUTES):
        raise GenerationAbort("group already fully described")
    extra = _sample_conj(rng, exclude=taken)
    merged = dict(group.conj)
    merged.update(extra)
    probe = QuestionCandidate(
        label=template.label, category=template.category, independent=False,
        history_need="coref", text="", tokens=(), bindings={},
        conj=extra, group_handle=group.handle, group_conj=dict(group.conj),
    )
    from .state import is_redundant

    if is_redundant(probe, partial):
        raise GenerationAbort("refinement already resolved")
    steps = _conj_filters(merged)
    steps.append(_terminal(template.category, len(steps) - 1))
    return _finish(
        template, rng,
        {"np1": {"attrs": extra}, "group_ref": group.handle},
        conj=extra,
        group_handle=group.handle,
        group_conj=dict(group.conj),
        group_ids=tuple(group.true_ids or ()),
        program=PrimitiveProgram(tuple(steps)),
    )


def _inst_excl(template, partial, rng):
    mentioned = partial.mentioned_ids()
    if not mentioned:
        raise GenerationAbort("nothing mentioned to exclude")
    pool: list[tuple] = [()]
    for entity in partial.entities:
        for attr, value in entity.known().items():
            pool.append(((attr, value),))
    for fact in partial.groups:
        if fact.conj:
            pool.append(fact.conj)
    from .state import is_redundant

    candidates = []
    seen = set()
    for key in pool:
        if key in seen or key in partial.excl_asked:
            continue
        seen.add(key)
        probe = QuestionCandidate(
            label=template.label, category=template.category, independent=False,
            history_need="all", text="", tokens=(), bindings={}, conj=dict(key),
        )
        if not is_redundant(probe, partial):
            candidates.append(key)
    if not candidates:
        raise GenerationAbort("every exclusion is settled")
    key = candidates[rng.randrange(len(candidates))]
    conj = dict(key)
    steps = _conj_filters(conj)
    steps.append(
        PrimitiveCall(
            "Filter", "exclude", ",".join(map(str, mentioned)),
            inputs=(len(steps) - 1,) if steps else (),
        )
    )
    steps.append(_terminal(template.category, len(steps) - 1))
    return _finish(
        template, rng,
        {"np1": {"attrs": conj}},
        conj=conj,
        excl_ids=mentioned,
        program=PrimitiveProgram(tuple(steps)),
    )


def _rel_program(anchor_id: int, relation: str, category: str) -> PrimitiveProgram:
    return PrimitiveProgram(
        (
            PrimitiveCall("Filter", "ids", str(anchor_id)),
            PrimitiveCall("Relate", "all", relation, inputs=(0,)),
            _terminal(category, 1),
        )
    )


def _inst_rel_imm(template, partial, rng):
    entity = _focus_entity(partial)
    eligible = [
        rel
        for rel in RELATIONS
        if (partial.direction_fact(entity.handle, rel)[0] is None
            if template.category == "count"
            else partial.direction_fact(entity.handle, rel)[1] is None)
    ]
    if not eligible:
        raise GenerationAbort("all directions settled for the focus")
    relation = eligible[rng.randrange(len(eligible))]
    return _finish(
        template, rng,
        {"R": relation, "pron_ref": entity.handle},
        anchor_handle=entity.handle,
        anchor_id=entity.pinned_id,
        relation=relation,
        mention_handles=(entity.handle,),
        program=_rel_program(entity.pinned_id, relation, template.category),
    )


def _inst_rel_imm2(template, partial, rng):
    if partial.prev_rel is None or partial.prev_rel[1] != template.category:
        raise GenerationAbort("no matching relation question to elaborate")
    if partial.focus is None or partial.prev_rel[0] != partial.focus:
        raise GenerationAbort("focus moved away")
    return _inst_rel_imm(template, partial, rng)


def _inst_rel_early(template, partial, rng):
    pool = _early_order(_early_entities(partial), partial, rng)
    for entity in pool:
        eligible = [
            rel
            for rel in RELATIONS
            if (partial.direction_fact(entity.handle, rel)[0] is None
                if template.category == "count"
                else partial.direction_fact(entity.handle, rel)[1] is None)
        ]
        if not eligible:
            continue
        try:
            phrase = _referring_attrs(entity, partial, rng)
        except GenerationAbort:
            continue
        relation = eligible[rng.randrange(len(eligible))]
        return _finish(
            template, rng,
            {"R": relation, "np1": {"attrs": phrase, "ref": entity.handle}},
            anchor_handle=entity.handle,
            anchor_id=entity.pinned_id,
            relation=relation,
            mention_handles=(entity.handle,),
            program=_rel_program(entity.pinned_id, relation, template.category),
        )
    raise GenerationAbort("no early entity supports a relation question")


def _share_program(anchor_id: int, attribute: str, category: str) -> PrimitiveProgram:
    return PrimitiveProgram(
        (
            PrimitiveCall("Filter", "ids", str(anchor_id)),
            PrimitiveCall("Relate", "same", attribute, inputs=(0,)),
            _terminal(category, 1),
        )
    )


def _share_eligible(template, partial, entity):
    from .state import is_redundant

    out = []
    for attr in ATTRIBUTES:
        probe = QuestionCandidate(
            label=template.label, category=template.category, independent=False,
            history_need="coref", text="", tokens=(), bindings={},
            anchor_handle=entity.handle, attribute=attr,
        )
        if not is_redundant(probe, partial):
            out.append(attr)
    return out


def _inst_excl_imm(template, partial, rng):
    entity = _focus_entity(partial)
    eligible = _share_eligible(template, partial, entity)
    if not eligible:
        raise GenerationAbort("sharing questions settled for the focus")
    attribute = eligible[rng.randrange(len(eligible))]
    return _finish(
        template, rng,
        {"A": attribute, "pron_ref": entity.handle},
        anchor_handle=entity.handle,
        anchor_id=entity.pinned_id,
        attribute=attribute,
        mention_handles=(entity.handle,),
        program=_share_program(entity.pinned_id, attribute, template.category),
    )


def _inst_excl_early(template, partial, rng):
    pool = _early_order(_early_entities(partial), partial, rng)
    for entity in pool:
        eligible = _share_eligible(template, partial, entity)
        if not eligible:
            continue
        try:
            phrase = _referring_attrs(entity, partial, rng)
        except GenerationAbort:
            continue
        attribute = eligible[rng.randrange(len(eligible))]
        return _finish(
            template, rng,
            {"A": attribute, "np1": {"attrs": phrase, "ref": entity.handle}},
            anchor_handle=entity.handle,
            anchor_id=entity.pinned_id,
            attribute=attribute,
            mention_handles=(entity.handle,),
            program=_share_program(entity.pinned_id, attribute, template.category),
        )
    raise GenerationAbort("no early entity supports a sharing question")


def _seek_program(anchor_id: int, attribute: str) -> PrimitiveProgram:
    return PrimitiveProgram(
        (
            PrimitiveCall("Filter", "ids", str(anchor_id)),
            PrimitiveCall("Sample", "attribute", attribute, inputs=(0,)),
        )
    )


def _inst_seek_imm(template, partial, rng):
    entity = _focus_entity(partial)
    unknown = entity.unknown()
    if not unknown:
        raise GenerationAbort("focus is fully described")
    attribute = unknown[rng.randrange(len(unknown))]
    return _finish(
        template, rng,
        {"A": attribute, "pron_ref": entity.handle},
        anchor_handle=entity.handle,
        anchor_id=entity.pinned_id,
        attribute=attribute,
        mention_handles=(entity.handle,),
        program=_seek_program(entity.pinned_id, attribute),
    )


def _inst_seek_imm2(template, partial, rng):
    if partial.prev_seek is None or partial.focus is None:
        raise GenerationAbort("no seek question to elaborate")
    if partial.prev_seek[0] != partial.focus or partial.focus_round != partial.round:
        raise GenerationAbort("focus moved away")
    return _inst_seek_imm(template, partial, rng)


def _inst_seek_early(template, partial, rng):
    pool = _early_order([e for e in _early_entities(partial) if e.unknown()], partial, rng)
    for entity in pool:
        try:
            phrase = _referring_attrs(entity, partial, rng)
        except GenerationAbort:
            continue
        unknown = entity.unknown()
        attribute = unknown[rng.randrange(len(unknown))]
        return _finish(
            template, rng,
            {"A": attribute, "np1": {"attrs": phrase, "ref": entity.handle}},
            anchor_handle=entity.handle,
            anchor_id=entity.pinned_id,
            attribute=attribute,
            mention_handles=(entity.handle,),
            program=_seek_program(entity.pinned_id, attribute),
        )
    raise GenerationAbort("no early entity with an open attribute")


def _inst_seek_sim_early(template, partial, rng):
    if partial.prev_seek is None:
        raise GenerationAbort("previous round was not a seek")
    attribute = partial.prev_seek[1]
    pool = _early_order(
        [e for e in _early_entities(partial) if e.get(attribute) is None], partial, rng
    )
    for entity in pool:
        try:
            phrase = _referring_attrs(entity, partial, rng)
        except GenerationAbort:
            continue
        return _finish(
            template, rng,
            {"np1": {"attrs": phrase, "ref": entity.handle}},
            anchor_handle=entity.handle,
            anchor_id=entity.pinned_id,
            attribute=attribute,
            mention_handles=(entity.handle,),
            program=_seek_program(entity.pinned_id, attribute),
        )
    raise GenerationAbort("no earlier entity shares the open attribute")


def _seek_rel_options(partial, entity):
    options = []
    for rel in RELATIONS:
        edge = partial.edges.get((entity.handle, rel))
        if edge == "none":
            continue
        count, _ = partial.direction_fact(entity.handle, rel)
        if count == 0:
            continue
        if edge is None:
            options.append((rel, tuple(ATTRIBUTES)))
        else:
            unknown = partial.entity(edge).unknown()
            if unknown:
                options.append((rel, unknown))
    return options


def _seek_rel_program(anchor_id: int, relation: str, attribute: str) -> PrimitiveProgram:
    return PrimitiveProgram(
        (
            PrimitiveCall("Filter", "ids", str(anchor_id)),
            PrimitiveCall("Relate", "relation", relation, inputs=(0,)),
            PrimitiveCall("Sample", "attribute", attribute, inputs=(1,)),
        )
    )


def _inst_seek_rel_imm(template, partial, rng):
    entity = _focus_entity(partial)
    options = _seek_rel_options(partial, entity)
    if not options:
        raise GenerationAbort("neighborhood of the focus is settled")
    relation, attrs = options[rng.randrange(len(options))]
    attribute = attrs[rng.randrange(len(attrs))]
    return _finish(
        template, rng,
        {"R": relation, "A": attribute, "pron_ref": entity.handle},
        anchor_handle=entity.handle,
        anchor_id=entity.pinned_id,
        relation=relation,
        attribute=attribute,
        mention_handles=(entity.handle,),
        program=_seek_rel_program(entity.pinned_id, relation, attribute),
    )


def _inst_seek_rel_early(template, partial, rng):
    pool = _early_order(_early_entities(partial), partial, rng)
    for entity in pool:
        options = _seek_rel_options(partial, entity)
        if not options:
            continue
        try:
            phrase = _referring_attrs(entity, partial, rng)
        except GenerationAbort:
            continue
        relation, attrs = options[rng.randrange(len(options))]
        attribute = attrs[rng.randrange(len(attrs))]
        return _finish(
            template, rng,
            {"R": relation, "A": attribute, "np1": {"attrs": phrase, "ref": entity.handle}},
            anchor_handle=entity.handle,
            anchor_id=entity.pinned_id,
            relation=relation,
            attribute=attribute,
            mention_handles=(entity.handle,),
            program=_seek_rel_program(entity.pinned_id, relation, attribute),
        )
    raise GenerationAbort("no early entity supports a relation seek")


_INSTANTIATORS = {
    "count-all": _inst_count_all,
    "count-attr": _inst_attr,
    "exist-attr": _inst_attr,
    "count-attr-group": _inst_attr_group,
    "exist-attr-group": _inst_attr_group,
    "count-excl": _inst_excl,
    "exist-excl": _inst_excl,
    "count-obj-rel-imm": _inst_rel_imm,
    "exist-obj-rel-imm": _inst_rel_imm,
    "count-obj-rel-imm2": _inst_rel_imm2,
    "exist-obj-rel-imm2": _inst_rel_imm2,
    "count-obj-rel-early": _inst_rel_early,
    "exist-obj-rel-early": _inst_rel_early,
    "count-obj-excl-imm": _inst_excl_imm,
    "exist-obj-excl-imm": _inst_excl_imm,
    "count-obj-excl-early": _inst_excl_early,
    "exist-obj-excl-early": _inst_excl_early,
    "seek-attr-imm": _inst_seek_imm,
    "seek-attr-imm2": _inst_seek_imm2,
    "seek-attr-early": _inst_seek_early,
    "seek-attr-sim-early": _inst_seek_sim_early,
    "seek-attr-rel-imm": _inst_seek_rel_imm,
    "seek-attr-rel-early": _inst_seek_rel_early,
}


def instantiate_question(
    template: Template, partial: PartialScene, rng, realize: bool = True
) -> QuestionCandidate:
    """Bind a question template against partial knowledge only.

    The candidate never references anything the questioner has not learned
    from the dialog; redundancy and plausibility failures raise
    :class:`GenerationAbort`.  With ``realize=False`` the surface text is
    left for :func:`realize_candidate` (the beam search realizes only the
    candidates that survive pruning).
    """
    if template.category == "caption":
        raise ValueError("captions are instantiated against the full scene")
    candidate = _INSTANTIATORS[template.label](template, partial, rng)
    from .state import is_redundant

    if is_redundant(candidate, partial):
        raise GenerationAbort("candidate is redundant")
    if realize:
        candidate = realize_candidate(candidate, rng)
    return candidate
