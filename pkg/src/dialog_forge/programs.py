"""A seven-primitive dataflow language over full or partial scenes.

Programs are data: an ordered list of calls whose inputs reference earlier
steps.  A step with no inputs reads the world's object universe.  ``Sample``
is the only primitive that consumes randomness; everything else is a pure
function of its inputs, so a program plus an rng state fully determines the
outcome.

Two evaluation modes cover the two places programs run:

* ``generate`` -- while building a caption or question.  Constraint
  failure (an empty Filter/Unique result, an ambiguous Relate input, an
  empty Sample pool) raises :class:`GenerationAbort`, which callers treat
  as "drop this derivation and try another template".
* ``answer`` -- while answering a bound question against the full scene.
  Empty sets flow through to Count/Exist (0 and "no" are real answers) and
  an empty set reaching a terminal attribute read yields ``"none"``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .scenes import (
    ATTRIBUTES,
    ATTRIBUTE_VALUES,
    EXTREMES,
    RELATIONS,
    Scene,
    extreme_object,
    immediate_neighbor,
)

KINDS = ("Sample", "Unique", "Count", "Group", "Filter", "Exist", "Relate")

_SAMPLE_PARAMS = ("object", "attribute", "attributes", "relation", "extreme", "class")
_FILTER_SPECIALS = ("extreme", "exclude", "ids")
_RELATE_MODES = (None, "relation", "all", "same")


class GenerationAbort(Exception):
    """A primitive constraint failed; abort the current derivation."""


class ProgramError(ValueError):
    """The program itself is malformed (bad arity, type mismatch, bad ref)."""


class ResolutionError(RuntimeError):
    """A bound anchor did not resolve against the scene (generator bug)."""


@dataclass(frozen=True)
class PrimitiveCall:
    kind: str
    param: str | None = None
    arg: str | None = None
    inputs: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ProgramError(f"unknown primitive kind {self.kind!r}")
        if self.kind in ("Count", "Exist"):
            if self.param is not None or self.arg is not None:
                raise ProgramError(f"{self.kind} takes no parameter or argument")
        elif self.kind == "Filter":
            if self.param is None:
                raise ProgramError("Filter requires a parameter")
            if self.arg is None and not self.inputs:
                raise ProgramError("Filter requires an argument (literal or input)")
            if self.param not in ATTRIBUTES and self.param not in _FILTER_SPECIALS:
                raise ProgramError(f"Filter parameter {self.param!r} not recognized")
        elif self.kind == "Group":
            if self.param is None and not self.inputs:
                raise ProgramError("Group requires attributes (parameter or input)")
        elif self.kind == "Relate":
            if self.param not in _RELATE_MODES:
                raise ProgramError(f"Relate mode {self.param!r} not recognized")
            if self.arg is None and not self.inputs:
                raise ProgramError("Relate requires a relation (argument or input)")
        elif self.kind == "Sample":
            if self.param not in _SAMPLE_PARAMS:
                raise ProgramError(f"Sample parameter {self.param!r} not recognized")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "param": self.param,
            "arg": self.arg,
            "inputs": list(self.inputs),
        }


def _attr_list(param: str) -> tuple[str, ...]:
    attrs = tuple(part for part in param.split(",") if part)
    for attr in attrs:
        if attr not in ATTRIBUTES:
            raise ProgramError(f"unknown attribute {attr!r}")
    if not attrs:
        raise ProgramError("empty attribute list")
    return attrs


def _step_output(call: PrimitiveCall) -> str:
    if call.kind in ("Filter", "Unique", "Relate"):
        return "objects"
    if call.kind == "Group":
        return "partition"
    if call.kind == "Count":
        return "count"
    if call.kind == "Exist":
        return "boolean"
    # Sample
    if call.param == "attribute":
        return "attribute_value" if call.inputs else "attribute_name"
    return {
        "object": "objects",
        "attributes": "attribute_names",
        "relation": "relation",
        "extreme": "extreme",
        "class": "objects",
    }[call.param]


@dataclass(frozen=True)
class PrimitiveProgram:
    """Single-rooted dataflow over primitive calls; last step is the root."""

    steps: tuple[PrimitiveCall, ...]
    output: str = field(default="")

    def __post_init__(self):
        if not self.steps:
            raise ProgramError("empty program")
        consumed = set()
        for pos, call in enumerate(self.steps):
            for ref in call.inputs:
                if not 0 <= ref < pos:
                    raise ProgramError(f"step {pos} references step {ref}")
                consumed.add(ref)
        dangling = set(range(len(self.steps) - 1)) - consumed
        if dangling:
            raise ProgramError(f"steps {sorted(dangling)} feed nothing")
        derived = _step_output(self.steps[-1])
        if self.output and self.output != derived:
            raise ProgramError(
                f"declared output {self.output!r} but terminal step yields {derived!r}"
            )
        if not self.output:
            object.__setattr__(self, "output", derived)

    def to_json(self) -> list[dict]:
        return [step.to_json() for step in self.steps]

    @classmethod
    def from_json(cls, payload: list[dict]) -> "PrimitiveProgram":
        steps = tuple(
            PrimitiveCall(
                kind=item["kind"],
                param=item.get("param"),
                arg=item.get("arg"),
                inputs=tuple(item.get("inputs", ())),
            )
            for item in payload
        )
        return cls(steps)


class FullWorld:
    """Evaluation over the complete scene graph."""

    kind = "full"

    __slots__ = ("scene",)

    def __init__(self, scene: Scene):
        self.scene = scene

    def universe(self) -> tuple[int, ...]:
        return tuple(range(len(self.scene.objects)))

    def attribute(self, member: int, attr: str) -> str | None:
        return self.scene.objects[member].attribute(attr)


class PartialWorld:
    """Evaluation over the questioner's knowledge; unknown values are None."""

    kind = "partial"

    __slots__ = ("partial",)

    def __init__(self, partial):
        self.partial = partial

    def universe(self) -> tuple[str, ...]:
        return tuple(e.handle for e in self.partial.entities)

    def attribute(self, member: str, attr: str) -> str | None:
        return self.partial.entity(member).get(attr)


@dataclass
class EvalContext:
    world: FullWorld | PartialWorld
    rng: random.Random | None = None
    mode: str = "generate"  # or "answer"


def _require_objects(value, step: int):
    if not isinstance(value, tuple) or any(isinstance(v, (tuple, list)) for v in value):
        raise ProgramError(f"step {step}: expected a flat object set")
    return value


def eval_filter(ctx: EvalContext, members: tuple, param: str, arg: str) -> tuple:
    """Subset of ``members`` satisfying the constraint.

    In partial contexts an attribute constraint keeps only entities whose
    value is known and equal.  In generate mode an empty result aborts the
    derivation.
    """
    if param in ATTRIBUTES:
        if arg not in ATTRIBUTE_VALUES[param]:
            raise ProgramError(f"{arg!r} is not a {param} value")
        kept = tuple(m for m in members if ctx.world.attribute(m, param) == arg)
    elif param == "extreme":
        if ctx.world.kind != "full":
            raise GenerationAbort("positional extremes need the full scene")
        if arg not in EXTREMES:
            raise ProgramError(f"{arg!r} is not an extreme")
        target = extreme_object(ctx.world.scene, arg)
        kept = (target,) if target in members else ()
    elif param == "exclude":
        dropped = _parse_members(ctx, arg)
        kept = tuple(m for m in members if m not in dropped)
    elif param == "ids":
        wanted = _parse_members(ctx, arg)
        kept = tuple(m for m in members if m in wanted)
        if len(kept) != len(wanted):
            if ctx.mode == "answer":
                raise ResolutionError(f"anchor {arg!r} did not resolve in the scene")
            raise GenerationAbort(f"anchor {arg!r} unavailable")
    else:  # pragma: no cover - guarded by PrimitiveCall validation
        raise ProgramError(f"bad Filter parameter {param!r}")
    if not kept and ctx.mode == "generate":
        raise GenerationAbort(f"Filter[{param}]({arg}) produced nothing")
    return kept


def _parse_members(ctx: EvalContext, arg: str) -> set:
    parts = [p for p in arg.split(",") if p]
    if ctx.world.kind == "full":
        return {int(p) for p in parts}
    return set(parts)


def eval_unique(ctx: EvalContext, members: tuple, attrs: tuple[str, ...]) -> tuple:
    """Members whose attribute tuple occurs exactly once among the input."""
    if not attrs:
        raise ProgramError("Unique needs at least one attribute")
    keyed = []
    for m in members:
        values = tuple(ctx.world.attribute(m, a) for a in attrs)
        if None in values:
            continue  # unknown in partial context: cannot vouch for uniqueness
        keyed.append((m, values))
    counts: dict[tuple, int] = {}
    for _, values in keyed:
        counts[values] = counts.get(values, 0) + 1
    kept = tuple(m for m, values in keyed if counts[values] == 1)
    if not kept and ctx.mode == "generate":
        raise GenerationAbort(f"no unique combination over {attrs}")
    return kept


def eval_count(members: tuple) -> int:
    return len(members)


def eval_exist(members: tuple) -> bool:
    return bool(members)


def eval_group(ctx: EvalContext, members: tuple, attrs: tuple[str, ...]) -> tuple:
    """Partition of the input by attribute tuple, classes sorted by tuple."""
    if not attrs:
        raise ProgramError("Group needs at least one attribute")
    classes: dict[tuple, list] = {}
    for m in members:
        values = tuple(ctx.world.attribute(m, a) for a in attrs)
        if None in values:
            continue
        classes.setdefault(values, []).append(m)
    return tuple(tuple(classes[key]) for key in sorted(classes))


def eval_relate(ctx: EvalContext, members: tuple, mode: str | None, arg: str) -> tuple:
    """Apply a relation through a single object.

    Default mode returns the immediate neighbor (possibly empty at a
    terminal hedge); ``all`` returns the whole direction set nearest first;
    ``same`` returns the other objects sharing an attribute value.
    """
    if len(members) != 1:
        raise GenerationAbort(f"Relate needs exactly one object, got {len(members)}")
    anchor = members[0]
    if mode in (None, "relation"):
        if arg not in RELATIONS:
            raise ProgramError(f"{arg!r} is not a relation")
        if ctx.world.kind == "full":
            neighbor = immediate_neighbor(ctx.world.scene, anchor, arg)
            return (neighbor,) if neighbor is not None else ()
        edge = ctx.world.partial.edges.get((anchor, arg))
        if edge is None:
            raise GenerationAbort("relation not known to the questioner")
        return () if edge == "none" else (edge,)
    if ctx.world.kind != "full":
        raise GenerationAbort(f"Relate[{mode}] needs the full scene")
    if mode == "all":
        if arg not in RELATIONS:
            raise ProgramError(f"{arg!r} is not a relation")
        return ctx.world.scene.relation_index[arg][anchor]
    # mode == "same": other objects with an equal attribute value
    if arg not in ATTRIBUTES:
        raise ProgramError(f"{arg!r} is not an attribute")
    value = ctx.world.attribute(anchor, arg)
    return tuple(
        m for m in ctx.world.universe() if m != anchor and ctx.world.attribute(m, arg) == value
    )


def eval_sample(ctx: EvalContext, call: PrimitiveCall, inputs: list):
    """Uniform draw -- the sole source of randomness in a program."""
    rng = ctx.rng
    if call.param == "object":
        members = _require_objects(inputs[0] if inputs else ctx.world.universe(), -1)
        if not members:
            raise GenerationAbort("Sample[object] over an empty set")
        if len(members) == 1:
            return (members[0],)
        if rng is None:
            raise ProgramError("sampling requires an rng")
        return (members[rng.randrange(len(members))],)
    if call.param == "attribute":
        if call.arg is not None and inputs:
            members = _require_objects(inputs[0], -1)
            if not members:
                if ctx.mode == "answer":
                    return "none"
                raise GenerationAbort("no object to read an attribute from")
            if len(members) != 1:
                raise GenerationAbort("attribute read needs exactly one object")
            if call.arg not in ATTRIBUTES:
                raise ProgramError(f"{call.arg!r} is not an attribute")
            value = ctx.world.attribute(members[0], call.arg)
            if value is None:
                raise GenerationAbort("attribute unknown in partial context")
            return value
        pool = inputs[0] if inputs else ATTRIBUTES
        if not pool:
            raise GenerationAbort("Sample[attribute] over an empty pool")
        if rng is None:
            raise ProgramError("sampling requires an rng")
        return pool[rng.randrange(len(pool))]
    if call.param == "attributes":
        if rng is None:
            raise ProgramError("sampling requires an rng")
        # Favor small subsets: they leave more to ask about later.
        size = rng.choices((1, 2, 3, 4), weights=(8, 4, 2, 1))[0]
        chosen = rng.sample(ATTRIBUTES, size)
        return tuple(a for a in ATTRIBUTES if a in chosen)
    if call.param == "relation":
        if rng is None:
            raise ProgramError("sampling requires an rng")
        return RELATIONS[rng.randrange(len(RELATIONS))]
    if call.param == "extreme":
        if rng is None:
            raise ProgramError("sampling requires an rng")
        return EXTREMES[rng.randrange(len(EXTREMES))]
    # "class": one block of a partition
    partition = inputs[0] if inputs else ()
    if not partition:
        raise GenerationAbort("Sample[class] over an empty partition")
    if rng is None:
        raise ProgramError("sampling requires an rng")
    return partition[rng.randrange(len(partition))]


def _split_inputs(inputs: list, pos: int):
    """Separate an object-set input from value inputs (strings, name sets)."""
    members = None
    extras = []
    for value in inputs:
        kind = _value_kind(value)
        if kind in ("objects",) and members is None:
            members = _require_objects(value, pos)
        else:
            extras.append(value)
    return members, extras


def run_program(program: PrimitiveProgram, ctx: EvalContext, trace: bool = False):
    """Evaluate the dataflow in order and return the terminal value.

    With ``trace=True`` returns ``(terminal, values)`` so callers building
    utterances can read intermediate samples.  Raises
    :class:`GenerationAbort` when a constraint fails; evaluation is
    transactional in that no state outlives the raise.
    """
    values: list = []
    for pos, call in enumerate(program.steps):
        inputs = [values[ref] for ref in call.inputs]
        if call.kind == "Filter":
            members, extras = _split_inputs(inputs, pos)
            if members is None:
                members = ctx.world.universe()
            arg = call.arg if call.arg is not None else (extras[0] if extras else None)
            if not isinstance(arg, str):
                raise ProgramError(f"step {pos}: Filter argument missing")
            values.append(eval_filter(ctx, members, call.param, arg))
        elif call.kind == "Unique":
            members, extras = _split_inputs(inputs, pos)
            if members is None:
                members = ctx.world.universe()
            if call.param is not None:
                attrs = _attr_list(call.param)
            elif extras and _value_kind(extras[0]) == "attribute_names":
                attrs = extras[0]
            else:
                raise ProgramError(f"step {pos}: Unique needs attributes")
            values.append(eval_unique(ctx, members, attrs))
        elif call.kind == "Count":
            members = inputs[0] if inputs else ctx.world.universe()
            values.append(eval_count(_require_objects(members, pos)))
        elif call.kind == "Exist":
            members = inputs[0] if inputs else ctx.world.universe()
            values.append(eval_exist(_require_objects(members, pos)))
        elif call.kind == "Group":
            members, extras = _split_inputs(inputs, pos)
            if members is None:
                members = ctx.world.universe()
            if call.param is not None:
                attrs = _attr_list(call.param)
            elif extras and _value_kind(extras[0]) == "attribute_names":
                attrs = extras[0]
            else:
                raise ProgramError(f"step {pos}: Group needs attributes")
            values.append(eval_group(ctx, members, attrs))
        elif call.kind == "Relate":
            members, extras = _split_inputs(inputs, pos)
            if members is None:
                members = ctx.world.universe()
            arg = call.arg if call.arg is not None else (extras[0] if extras else None)
            if not isinstance(arg, str):
                raise ProgramError(f"step {pos}: Relate argument missing")
            result = eval_relate(ctx, members, call.param, arg)
            if not result and ctx.mode == "generate":
                raise GenerationAbort(f"Relate({arg}) hit the scene boundary")
            values.append(result)
        else:
            values.append(eval_sample(ctx, call, inputs))
    if trace:
        return values[-1], values
    return values[-1]


def _value_kind(value) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "count"
    if isinstance(value, str):
        return "attribute_value"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "partition"
        if value and isinstance(value[0], str) and value[0] in ATTRIBUTES:
            return "attribute_names"
        return "objects"
    return "unknown"


def chain(*calls: PrimitiveCall) -> PrimitiveProgram:
    """Convenience: link calls linearly (each consumes the previous step)."""
    steps = []
    for pos, call in enumerate(calls):
        if pos == 0 or call.inputs:
            steps.append(call)
        else:
            steps.append(
                PrimitiveCall(kind=call.kind, param=call.param, arg=call.arg, inputs=(pos - 1,))
            )
    return PrimitiveProgram(tuple(steps))
