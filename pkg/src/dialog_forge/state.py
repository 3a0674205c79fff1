"""The questioner's accumulated knowledge and its book-keeping.

A :class:`PartialScene` holds everything the questioner can legitimately act
on: known entities with per-attribute Known/Unknown slots, exhaustive counts
over attribute conjunctions (group facts), known relation edges, and the
conversational focus.  Entities carry the ground-truth object id they were
pinned to when introduced; instantiation logic never reads that id -- it
exists so the answerer can resolve references and so soundness can be
audited after the fact.

All update operations return fresh states; records are immutable, so copies
taken for beam expansion are cheap and never share mutable parts.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .scenes import ATTRIBUTES, OPPOSITE, Scene

_EXTREME_BLOCKS = {"right": "right", "left": "left", "fore": "front", "rear": "behind"}


class StateConsistencyError(RuntimeError):
    """An answer contradicted an established fact: a generator bug."""


@dataclass(frozen=True)
class EntityRecord:
    """One known entity; attribute slots hold a value or None for Unknown."""

    handle: str
    size: str | None = None
    color: str | None = None
    material: str | None = None
    shape: str | None = None
    pinned_id: int | None = None
    origin: str = ""
    extreme: str | None = None
    first_mention: int = 0
    last_mention: int = 0

    def get(self, attr: str) -> str | None:
        return getattr(self, attr)

    def known(self) -> dict[str, str]:
        return {a: v for a in ATTRIBUTES if (v := getattr(self, a)) is not None}

    def unknown(self) -> tuple[str, ...]:
        return tuple(a for a in ATTRIBUTES if getattr(self, a) is None)

    @property
    def pinned(self) -> bool:
        return self.pinned_id is not None


@dataclass(frozen=True)
class GroupFact:
    """An exhaustive fact about every object matching a conjunction.

    ``conj`` is a sorted tuple of (attribute, value) pairs; empty means the
    whole scene.  ``count`` is None when only emptiness/non-emptiness is
    known.  ``covers`` marks groups whose members count as mentioned for
    exclusion questions (a described group like "the four cylinders" refers
    to its members collectively; the bare all-objects count does not).
    """

    handle: str
    conj: tuple[tuple[str, str], ...]
    count: int | None = None
    nonempty: bool | None = None
    true_ids: tuple[int, ...] | None = None
    covers: bool = True
    first_mention: int = 0
    last_mention: int = 0


def conj_key(conj: dict[str, str]) -> tuple[tuple[str, str], ...]:
    return tuple(sorted(conj.items()))


@dataclass(frozen=True)
class HistoryDependency:
    kind: str  # "coref" | "all" | "none"
    distance: int | None = None


@dataclass(frozen=True)
class PartialScene:
    """Questioner knowledge after ``round`` completed rounds (caption = 0)."""

    round: int = -1
    entities: tuple[EntityRecord, ...] = ()
    groups: tuple[GroupFact, ...] = ()
    edges: dict = field(default_factory=dict)  # (handle, relation) -> handle | "none"
    dir_facts: dict = field(default_factory=dict)  # (handle, relation) -> (count, nonempty)
    share_facts: dict = field(default_factory=dict)  # (handle, attr) -> (count, nonempty)
    excl_asked: frozenset = frozenset()
    focus: str | None = None
    focus_round: int = -1
    focus_group: str | None = None
    prev_seek: tuple | None = None  # (handle, attribute) of the previous round
    prev_rel: tuple | None = None  # (handle, category) of the previous round

    def entity(self, handle: str) -> EntityRecord:
        for record in self.entities:
            if record.handle == handle:
                return record
        raise KeyError(handle)

    def group(self, handle: str) -> GroupFact:
        for record in self.groups:
            if record.handle == handle:
                return record
        raise KeyError(handle)

    def group_by_conj(self, key: tuple) -> GroupFact | None:
        for record in self.groups:
            if record.conj == key:
                return record
        return None

    def next_handles(self) -> tuple[str, str]:
        return f"e{len(self.entities)}", f"g{len(self.groups)}"

    def to_json(self) -> dict:
        """Snapshot for debugging dumps; lossy only in field ordering."""
        return {
            "round": self.round,
            "entities": [
                {
                    "handle": e.handle,
                    "known": e.known(),
                    "pinned_id": e.pinned_id,
                    "origin": e.origin,
                    "extreme": e.extreme,
                    "first_mention": e.first_mention,
                    "last_mention": e.last_mention,
                }
                for e in self.entities
            ],
            "groups": [
                {
                    "handle": g.handle,
                    "conj": dict(g.conj),
                    "count": g.count,
                    "nonempty": g.nonempty,
                    "true_ids": list(g.true_ids or ()),
                    "covers": g.covers,
                    "last_mention": g.last_mention,
                }
                for g in self.groups
            ],
            "edges": [
                {"source": source, "relation": relation, "target": target}
                for (source, relation), target in sorted(self.edges.items())
            ],
            "direction_facts": [
                {"entity": handle, "relation": relation, "count": count, "nonempty": nonempty}
                for (handle, relation), (count, nonempty) in sorted(self.dir_facts.items())
            ],
            "share_facts": [
                {"entity": handle, "attribute": attr, "count": count, "nonempty": nonempty}
                for (handle, attr), (count, nonempty) in sorted(self.share_facts.items())
            ],
            "exclusions_asked": [dict(key) for key in sorted(self.excl_asked)],
            "focus": self.focus,
            "focus_group": self.focus_group,
        }

    # -- fact queries -----------------------------------------------------

    def known_count(self, conj: dict[str, str]) -> int | None:
        """Exact count for a conjunction if the dialog established it."""
        key = conj_key(conj)
        fact = self.group_by_conj(key)
        if fact is not None and fact.count is not None:
            return fact.count
        # A zero count over a weaker conjunction forces zero here too.
        for record in self.groups:
            if record.count == 0 and all(pair in key for pair in record.conj):
                return 0
        # Complete knowledge: once the known total matches the number of
        # fully described entities, every conjunction count follows.
        total_fact = self.group_by_conj(())
        if (
            total_fact is not None
            and total_fact.count is not None
            and total_fact.count == len(self.entities)
            and all(e.pinned and len(e.known()) == 4 for e in self.entities)
        ):
            return sum(
                1
                for e in self.entities
                if all(e.get(attr) == value for attr, value in key)
            )
        return None

    def known_nonempty(self, conj: dict[str, str]) -> bool | None:
        count = self.known_count(conj)
        if count is not None:
            return count > 0
        fact = self.group_by_conj(conj_key(conj))
        if fact is not None and fact.nonempty is not None:
            return fact.nonempty
        return None

    def direction_fact(self, handle: str, relation: str) -> tuple:
        """(count, nonempty) knowledge about the set in one direction."""
        count, nonempty = self.dir_facts.get((handle, relation), (None, None))
        entity = self.entity(handle)
        if count is None and entity.extreme is not None:
            if _EXTREME_BLOCKS.get(entity.extreme) == relation:
                count, nonempty = 0, False
        edge = self.edges.get((handle, relation))
        if nonempty is None and edge is not None:
            nonempty = edge != "none"
        if count is None and edge == "none":
            # No immediate neighbor means the whole direction is empty.
            count, nonempty = 0, False
        return count, nonempty

    def mentioned_ids(self) -> tuple[int, ...]:
        """Ground-truth ids of everything referenced so far (for "other")."""
        ids = {e.pinned_id for e in self.entities if e.pinned_id is not None}
        for fact in self.groups:
            if fact.covers and fact.true_ids:
                ids.update(fact.true_ids)
        return tuple(sorted(ids))


def fresh_state() -> PartialScene:
    return PartialScene()


# -- caption assimilation -------------------------------------------------


def apply_caption(caption) -> PartialScene:
    """Build round-0 knowledge from a caption's revealed facts."""
    state = PartialScene(round=0)
    entities: list[EntityRecord] = []
    groups: list[GroupFact] = []
    edges: dict = {}
    focus = None
    focus_group = None
    for fact in caption.revealed_facts:
        kind = fact["kind"]
        if kind == "entity":
            record = EntityRecord(
                handle=fact["handle"],
                pinned_id=fact.get("pinned_id"),
                origin=fact.get("origin", "caption"),
                extreme=fact.get("extreme"),
                first_mention=0,
                last_mention=0,
                **{a: fact["attrs"].get(a) for a in ATTRIBUTES},
            )
            entities.append(record)
            if focus is None:
                focus = record.handle
        elif kind == "group":
            handle = fact.get("handle", f"g{len(groups)}")
            groups.append(
                GroupFact(
                    handle=handle,
                    conj=conj_key(fact["conj"]),
                    count=fact.get("count"),
                    nonempty=(fact.get("count") or 0) > 0 if "count" in fact else None,
                    true_ids=tuple(fact.get("true_ids", ())),
                    covers=bool(fact["conj"]),
                )
            )
            if focus_group is None:
                focus_group = handle
        elif kind == "edge":
            edges[(fact["source"], fact["relation"])] = fact["target"]
            edges[(fact["target"], OPPOSITE[fact["relation"]])] = fact["source"]
        elif kind != "program":
            raise ValueError(f"unknown caption fact kind {kind!r}")
    return replace(
        state,
        entities=tuple(entities),
        groups=tuple(groups),
        edges=edges,
        focus=focus,
        focus_round=0 if focus is not None else -1,
        focus_group=focus_group,
    )


# -- question/answer assimilation ------------------------------------------


def _merge_attr(entity: EntityRecord, attr: str, value: str) -> EntityRecord:
    current = entity.get(attr)
    if current is not None and current != value:
        raise StateConsistencyError(
            f"{entity.handle}.{attr} already known as {current!r}, answer said {value!r}"
        )
    return replace(entity, **{attr: value})


def _set_group(
    groups: tuple[GroupFact, ...],
    conj: dict[str, str],
    round_index: int,
    count: int | None = None,
    nonempty: bool | None = None,
    true_ids: tuple[int, ...] | None = None,
    covers: bool = True,
) -> tuple[GroupFact, ...]:
    key = conj_key(conj)
    out = list(groups)
    for pos, fact in enumerate(out):
        if fact.conj == key:
            if count is not None and fact.count is not None and fact.count != count:
                raise StateConsistencyError(
                    f"count for {key} already known as {fact.count}, answer said {count}"
                )
            out[pos] = replace(
                fact,
                count=count if count is not None else fact.count,
                nonempty=nonempty if nonempty is not None else fact.nonempty,
                true_ids=true_ids if true_ids is not None else fact.true_ids,
                covers=fact.covers or covers,
                last_mention=round_index,
            )
            return tuple(out)
    out.append(
        GroupFact(
            handle=f"g{len(out)}",
            conj=key,
            count=count,
            nonempty=nonempty if nonempty is not None else (count > 0 if count is not None else None),
            true_ids=true_ids,
            covers=covers,
            first_mention=round_index,
            last_mention=round_index,
        )
    )
    return tuple(out)


def _bump_mentions(entities, handles, round_index):
    if not handles:
        return entities
    return tuple(
        replace(e, last_mention=round_index) if e.handle in handles else e for e in entities
    )


def _individuate(entities, attrs, pinned_id, origin, round_index):
    """Add (or enrich) the entity for a uniquely determined object."""
    out = list(entities)
    for pos, record in enumerate(out):
        if record.pinned_id == pinned_id:
            merged = record
            for attr, value in attrs.items():
                merged = _merge_attr(merged, attr, value)
            out[pos] = replace(merged, last_mention=round_index)
            return tuple(out), record.handle, False
    handle = f"e{len(out)}"
    out.append(
        EntityRecord(
            handle=handle,
            pinned_id=pinned_id,
            origin=origin,
            first_mention=round_index,
            last_mention=round_index,
            **{a: attrs.get(a) for a in ATTRIBUTES},
        )
    )
    return tuple(out), handle, True


def apply_qa(state: PartialScene, question, answer: str, resolution) -> PartialScene:
    """Fold one answered round into the questioner's knowledge.

    ``resolution`` carries the answerer-side grounding (new-entity object
    ids, group extensions); the questioner only consumes the facts the
    answer text itself justifies.
    """
    t = state.round + 1
    label = question.label
    entities = _bump_mentions(state.entities, set(question.mention_handles), t)
    groups = state.groups
    edges = dict(state.edges)
    dir_facts = dict(state.dir_facts)
    share_facts = dict(state.share_facts)
    excl_asked = state.excl_asked
    focus = state.focus
    focus_round = state.focus_round
    focus_group = state.focus_group
    prev_seek = None
    prev_rel = None

    if question.group_handle is not None:
        groups = tuple(
            replace(g, last_mention=t) if g.handle == question.group_handle else g
            for g in groups
        )

    if label == "count-all":
        groups = _set_group(
            groups, {}, t, count=int(answer), true_ids=resolution.get("group_ids"), covers=False
        )
        focus, focus_round = None, -1
        focus_group = next(g.handle for g in groups if g.conj == ())
    elif label in ("count-attr", "exist-attr"):
        conj = question.conj
        if label == "count-attr":
            count = int(answer)
            groups = _set_group(
                groups, conj, t, count=count, true_ids=resolution.get("group_ids")
            )
            if count == 1:
                entities, _, _ = _individuate(
                    entities, dict(conj), resolution["group_ids"][0], "count-one", t
                )
        else:
            groups = _set_group(
                groups,
                conj,
                t,
                nonempty=answer == "yes",
                true_ids=resolution.get("group_ids") if answer == "yes" else (),
            )
        focus, focus_round = None, -1
        fact = next(g for g in groups if g.conj == conj_key(conj))
        focus_group = fact.handle
    elif label in ("count-attr-group", "exist-attr-group"):
        conj = dict(question.group_conj)
        conj.update(question.conj)
        if label == "count-attr-group":
            count = int(answer)
            groups = _set_group(groups, conj, t, count=count, true_ids=resolution.get("group_ids"))
            if count == 1:
                entities, _, _ = _individuate(
                    entities, dict(conj_key(conj)), resolution["group_ids"][0], "count-one", t
                )
        else:
            groups = _set_group(
                groups,
                conj,
                t,
                nonempty=answer == "yes",
                true_ids=resolution.get("group_ids") if answer == "yes" else (),
            )
        focus, focus_round = None, -1
    elif label in ("count-excl", "exist-excl"):
        excl_asked = excl_asked | {conj_key(question.conj)}
        focus, focus_round = None, -1
    elif label in (
        "count-obj-rel-imm",
        "count-obj-rel-imm2",
        "count-obj-rel-early",
        "exist-obj-rel-imm",
        "exist-obj-rel-imm2",
        "exist-obj-rel-early",
    ):
        anchor, relation = question.anchor_handle, question.relation
        if label.startswith("count"):
            count = int(answer)
            dir_facts[(anchor, relation)] = (count, count > 0)
            if count == 0:
                edges.setdefault((anchor, relation), "none")
        else:
            known = dir_facts.get((anchor, relation), (None, None))
            dir_facts[(anchor, relation)] = (known[0], answer == "yes")
            if answer == "no":
                edges.setdefault((anchor, relation), "none")
        focus, focus_round = anchor, t
        prev_rel = (anchor, question.category)
    elif label in (
        "count-obj-excl-imm",
        "count-obj-excl-early",
        "exist-obj-excl-imm",
        "exist-obj-excl-early",
    ):
        anchor, attr = question.anchor_handle, question.attribute
        if label.startswith("count"):
            count = int(answer)
            share_facts[(anchor, attr)] = (count, count > 0)
        else:
            known = share_facts.get((anchor, attr), (None, None))
            share_facts[(anchor, attr)] = (known[0], answer == "yes")
        focus, focus_round = anchor, t
    elif label in ("seek-attr-imm", "seek-attr-imm2", "seek-attr-early", "seek-attr-sim-early"):
        anchor, attr = question.anchor_handle, question.attribute
        entities = tuple(
            _merge_attr(e, attr, answer) if e.handle == anchor else e for e in entities
        )
        focus, focus_round = anchor, t
        prev_seek = (anchor, attr)
    elif label in ("seek-attr-rel-imm", "seek-attr-rel-early"):
        anchor, relation, attr = question.anchor_handle, question.relation, question.attribute
        if answer == "none":
            edges[(anchor, relation)] = "none"
            dir_facts.setdefault((anchor, relation), (0, False))
            focus, focus_round = anchor, t
        else:
            neighbor_id = resolution["neighbor_id"]
            entities, new_handle, created = _individuate(
                entities, {attr: answer}, neighbor_id, "relate", t
            )
            edges[(anchor, relation)] = new_handle
            edges[(new_handle, OPPOSITE[relation])] = anchor
            known = dir_facts.get((anchor, relation), (None, None))
            dir_facts[(anchor, relation)] = (known[0], True)
            focus, focus_round = new_handle, t
            prev_seek = (new_handle, attr)
    else:
        raise ValueError(f"unknown question label {label!r}")

    return PartialScene(
        round=t,
        entities=entities,
        groups=groups,
        edges=edges,
        dir_facts=dir_facts,
        share_facts=share_facts,
        excl_asked=excl_asked,
        focus=focus,
        focus_round=focus_round,
        focus_group=focus_group,
        prev_seek=prev_seek,
        prev_rel=prev_rel,
    )


# -- labels and redundancy --------------------------------------------------


def label_dependency(question, state: PartialScene) -> HistoryDependency:
    """Classify how much history the question needs.

    Independent templates are None; exclusion templates quantify over the
    whole mention history (All); everything else corefers with a specific
    antecedent at a distance in rounds.
    """
    if question.history_need == "none":
        return HistoryDependency("none")
    if question.history_need == "all":
        return HistoryDependency("all")
    t = state.round + 1
    if question.group_handle is not None:
        antecedent = state.group(question.group_handle).last_mention
    else:
        antecedent = state.entity(question.anchor_handle).last_mention
    return HistoryDependency("coref", t - antecedent)


def is_redundant(question, state: PartialScene) -> bool:
    """True when the answer is already entailed by the questioner's facts."""
    label = question.label
    if label == "count-all":
        return state.known_count({}) is not None
    if label == "count-attr":
        return state.known_count(question.conj) is not None
    if label == "exist-attr":
        return state.known_nonempty(question.conj) is not None
    if label in ("count-attr-group", "exist-attr-group"):
        conj = dict(question.group_conj)
        conj.update(question.conj)
        if label == "count-attr-group":
            return state.known_count(conj) is not None
        return state.known_nonempty(conj) is not None
    if label in ("count-excl", "exist-excl"):
        key = conj_key(question.conj)
        if key in state.excl_asked:
            return True
        for fact in state.groups:
            if fact.covers and fact.count is not None and all(p in key for p in fact.conj):
                # Every object matching the question is already mentioned.
                return True
        return False
    if label.endswith(("obj-rel-imm", "obj-rel-imm2", "obj-rel-early")):
        count, nonempty = state.direction_fact(question.anchor_handle, question.relation)
        return count is not None if label.startswith("count") else nonempty is not None
    if "obj-excl" in label:
        count, nonempty = state.share_facts.get(
            (question.anchor_handle, question.attribute), (None, None)
        )
        if label.startswith("count"):
            if count is not None:
                return True
            # Known attribute value plus an exhaustive count entails it.
            value = state.entity(question.anchor_handle).get(question.attribute)
            if value is not None:
                total = state.known_count({question.attribute: value})
                return total is not None
            return False
        if nonempty is not None or count is not None:
            return True
        value = state.entity(question.anchor_handle).get(question.attribute)
        if value is not None:
            return state.known_count({question.attribute: value}) is not None
        return False
    if label in ("seek-attr-imm", "seek-attr-imm2", "seek-attr-early", "seek-attr-sim-early"):
        return state.entity(question.anchor_handle).get(question.attribute) is not None
    if label in ("seek-attr-rel-imm", "seek-attr-rel-early"):
        edge = state.edges.get((question.anchor_handle, question.relation))
        if edge == "none":
            return True
        if edge is not None:
            return state.entity(edge).get(question.attribute) is not None
        count, _ = state.direction_fact(question.anchor_handle, question.relation)
        return count == 0
    raise ValueError(f"unknown question label {label!r}")


# -- auditing ----------------------------------------------------------------


def verify_against_scene(state: PartialScene, scene: Scene) -> list[str]:
    """Check the soundness invariant: every Known fact matches the scene."""
    problems = []
    for entity in state.entities:
        if entity.pinned_id is None:
            problems.append(f"{entity.handle}: no pinned identity")
            continue
        obj = scene.objects[entity.pinned_id]
        for attr, value in entity.known().items():
            truth = obj.attribute(attr)
            if truth != value:
                problems.append(
                    f"{entity.handle}.{attr}: known {value!r} but scene says {truth!r}"
                )
    for fact in state.groups:
        true_count = len(scene.conjunction_ids(dict(fact.conj)))
        if fact.count is not None and fact.count != true_count:
            problems.append(f"group {fact.conj}: known count {fact.count} != {true_count}")
        if fact.nonempty is not None and fact.nonempty != (true_count > 0):
            problems.append(f"group {fact.conj}: nonempty flag wrong")
    for (handle, relation), target in state.edges.items():
        try:
            source = state.entity(handle)
        except KeyError:
            problems.append(f"edge source {handle} unknown")
            continue
        if source.pinned_id is None:
            continue
        from .scenes import immediate_neighbor

        truth = immediate_neighbor(scene, source.pinned_id, relation)
        if target == "none":
            if truth is not None:
                problems.append(f"edge {handle}-{relation}: known empty but scene has {truth}")
        else:
            target_id = state.entity(target).pinned_id
            if truth != target_id:
                problems.append(
                    f"edge {handle}-{relation}: points at {target_id} but scene says {truth}"
                )
    for (handle, relation), (count, nonempty) in state.dir_facts.items():
        entity = state.entity(handle)
        if entity.pinned_id is None:
            continue
        truth = len(scene.relation_index[relation][entity.pinned_id])
        if count is not None and count != truth:
            problems.append(f"direction {handle}-{relation}: known {count} != {truth}")
        if nonempty is not None and nonempty != (truth > 0):
            problems.append(f"direction {handle}-{relation}: nonempty flag wrong")
    for (handle, attr), (count, nonempty) in state.share_facts.items():
        entity = state.entity(handle)
        if entity.pinned_id is None:
            continue
        value = scene.objects[entity.pinned_id].attribute(attr)
        truth = sum(
            1
            for obj in scene.objects
            if obj.index != entity.pinned_id and obj.attribute(attr) == value
        )
        if count is not None and count != truth:
            problems.append(f"share {handle}-{attr}: known {count} != {truth}")
        if nonempty is not None and nonempty != (truth > 0):
            problems.append(f"share {handle}-{attr}: nonempty flag wrong")
    return problems
