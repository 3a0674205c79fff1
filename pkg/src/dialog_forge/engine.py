"""Dialog generation: constrained beam search over question templates.

One scene gets one caption and one beam search; the requested dialogs are
the top-scoring, pairwise-distinct finished beams.  Beams are pruned for
feasibility (the category mix must still be able to land inside the
configured ranges by the final round, and independent questions stay under
their cap) and ranked by an interestingness score that rewards bonus
templates, template diversity, and long-range references.

Every sampling site draws from an rng seeded by (global seed, scene id,
beam lineage, round, template), so results are independent of scheduling
and iteration order.  If a search cannot deliver enough distinct dialogs,
the generator deterministically retries with the next category quota and,
failing that, the next caption family.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace

from .grammar import (
    GenerationAbort,
    QuestionCandidate,
    Template,
    Utterance,
    build_registry,
    instantiate_caption,
    realize_candidate,
)
from .grammar import instantiate_question as _instantiate_question
from .oracle import resolve_and_answer
from .scenes import Scene
from .state import (
    HistoryDependency,
    PartialScene,
    apply_caption,
    apply_qa,
    label_dependency,
    verify_against_scene,
)
from .util import derive_seed, mix_ints, str_seed

_TEXT_SALT = 0x7E57
_LABEL_KEY: dict[str, int] = {}


def _label_key(label: str) -> int:
    key = _LABEL_KEY.get(label)
    if key is None:
        key = _LABEL_KEY[label] = str_seed(label)
    return key


class UnderGenerationError(RuntimeError):
    def __init__(self, scene_id: str, produced: int, requested: int):
        super().__init__(
            f"scene {scene_id}: only {produced} of {requested} requested dialogs "
            f"could be generated"
        )
        self.scene_id = scene_id
        self.produced = produced
        self.requested = requested


@dataclass(frozen=True)
class GenerationConfig:
    beams: int = 100
    dialogs_per_image: int = 5
    rounds: int = 10
    count_range: tuple = (0.1, 0.3)
    exist_range: tuple = (0.1, 0.3)
    seek_range: tuple = (0.3, 0.6)
    independent_cap: float = 0.2
    bonus_templates: tuple = ("seek-attr-sim-early", "count-obj-excl-imm")
    bonus_weight: float = 2.0
    diversity_weight: float = 0.25
    early_weight: float = 0.8
    repeat_penalty: float = 0.3
    opener_weight: float = 0.4
    seed: int = 0
    quota: tuple | None = None  # per-dialog (count, exist, seek) totals

    def __post_init__(self):
        for lo, hi in (self.count_range, self.exist_range, self.seek_range):
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError("category ranges must satisfy 0 <= lo <= hi <= 1")
        if self.bonus_weight <= 0:
            raise ValueError("bonus weight must be positive")

    def independent_max(self) -> int:
        """Largest independent-question count strictly under the cap."""
        raw = self.independent_cap * self.rounds
        return int(raw) - 1 if raw == int(raw) else int(raw)

    def category_bounds(self) -> dict[str, tuple[int, int]]:
        import math

        out = {}
        for name, (lo, hi) in (
            ("count", self.count_range),
            ("exist", self.exist_range),
            ("seek", self.seek_range),
        ):
            out[name] = (math.ceil(lo * self.rounds - 1e-9), int(hi * self.rounds + 1e-9))
        return out


_CATEGORIES = ("count", "exist", "seek")


@dataclass(frozen=True)
class DialogRound:
    question: QuestionCandidate
    answer: str
    dependency: HistoryDependency


@dataclass(frozen=True)
class Beam:
    state: PartialScene
    rounds: tuple = ()
    signature: tuple = ()
    lineage: int = 0
    counts: tuple = (0, 0, 0)
    independents: int = 0
    score: float = 0.0
    label_set: frozenset = frozenset()


@dataclass(frozen=True)
class Dialog:
    scene_id: str
    caption: Utterance
    caption_program: list
    rounds: tuple  # of DialogRound


def feasible_quotas(config: GenerationConfig) -> list[tuple[int, int, int]]:
    """All (count, exist, seek) totals compatible with the ranges."""
    bounds = config.category_bounds()
    out = []
    for c in range(bounds["count"][0], bounds["count"][1] + 1):
        for e in range(bounds["exist"][0], bounds["exist"][1] + 1):
            s = config.rounds - c - e
            if bounds["seek"][0] <= s <= bounds["seek"][1]:
                out.append((c, e, s))
    if not out:
        raise ValueError("category ranges admit no quota at this round count")
    return out


def _quota_weight(quota: tuple[int, int, int], rounds: int) -> float:
    # Tilt toward seek-heavy dialogs with count >= exist, which is what the
    # emitted dataset mix should look like.
    c, e, s = quota
    weight = 100.0 * (s / rounds) ** 3
    if e > c:
        weight *= 0.25
    elif c > e:
        weight *= 1.3
    return weight


def _feasible(counts, independents, rounds_done, config: GenerationConfig) -> bool:
    remaining = config.rounds - rounds_done
    if remaining < 0:
        return False
    if independents > config.independent_max():
        return False
    if config.quota is not None:
        need = 0
        for have, want in zip(counts, config.quota):
            if have > want:
                return False
            need += want - have
        return need == remaining
    bounds = config.category_bounds()
    shortfall = 0
    for have, name in zip(counts, _CATEGORIES):
        lo, hi = bounds[name]
        if have > hi:
            return False
        shortfall += max(lo - have, 0)
    return shortfall <= remaining


def _diversity_key(label: str) -> str:
    # Elliptical follow-ups ("How about ...?") are phrasal continuations of
    # their base template; they earn no diversity credit of their own.
    return label[:-1] if label.endswith("imm2") else label


_OPENERS = frozenset(
    ("count-all", "count-attr", "exist-attr", "count-excl", "exist-excl")
)


def _opener_bonus(label: str, round_index: int, config: GenerationConfig) -> float:
    # Image-level questions score extra in the first rounds: they make the
    # opening read naturally and leave antecedents to age before the dialog
    # starts referring back.  Relation seeks score extra there too: they
    # introduce new entities, widening the pool of future referents.
    bonus = 0.0
    if round_index <= 2 and label in _OPENERS:
        bonus += config.opener_weight * (3 - round_index)
    if round_index <= 3 and label == "seek-attr-rel-imm":
        bonus += config.opener_weight
    return bonus


def _score(beam: Beam, config: GenerationConfig) -> float:
    """Interestingness of a beam; a pure function of its label sequence.

    Bonus templates score on presence (a dialog containing one is worth
    more), so repeating a bonus template cannot crowd out the rest of the
    inventory.
    """
    labels = [_diversity_key(r.question.label) for r in beam.rounds]
    distinct = set(labels)
    score = config.bonus_weight * sum(1 for l in distinct if l in config.bonus_templates)
    score += config.diversity_weight * len(distinct)
    score += config.early_weight * sum(1 for l in labels if l.endswith("-early"))
    score -= config.repeat_penalty * (len(labels) - len(distinct))
    score += sum(
        _opener_bonus(r.question.label, pos + 1, config)
        for pos, r in enumerate(beam.rounds)
    )
    return score


def _score_delta(label: str, label_set: frozenset, round_index: int,
                 config: GenerationConfig) -> float:
    delta = _opener_bonus(label, round_index, config)
    key = _diversity_key(label)
    if key not in label_set:
        delta += config.diversity_weight
        if key in config.bonus_templates:
            delta += config.bonus_weight
    else:
        delta -= config.repeat_penalty
    if label.endswith("-early"):
        delta += config.early_weight
    return delta


def _try_successor(beam: Beam, template: Template, scene: Scene,
                   config: GenerationConfig, scene_key: int) -> "Beam | None":
    """Instantiate, answer, and fold one template into a successor beam."""
    rounds_done = len(beam.rounds)
    counts = list(beam.counts)
    counts[_CATEGORIES.index(template.category)] += 1
    independents = beam.independents + (1 if template.independent else 0)
    if not _feasible(counts, independents, rounds_done + 1, config):
        return None
    seed = mix_ints(scene_key, beam.lineage, rounds_done, _label_key(template.label))
    rng = random.Random(seed)
    try:
        candidate = _instantiate_question(template, beam.state, rng, realize=False)
    except GenerationAbort:
        return None
    candidate = realize_candidate(candidate, random.Random(mix_ints(seed, _TEXT_SALT)))
    resolution = resolve_and_answer(candidate, scene)
    answer = resolution["answer"]
    dependency = label_dependency(candidate, beam.state)
    state = apply_qa(beam.state, candidate, answer, resolution)
    step_sig = f"{candidate.semantic_signature()}|{answer}"
    return Beam(
        state=state,
        rounds=beam.rounds + (DialogRound(candidate, answer, dependency),),
        signature=beam.signature + (step_sig,),
        lineage=mix_ints(beam.lineage, str_seed(step_sig)),
        counts=tuple(counts),
        independents=independents,
        score=beam.score + _score_delta(template.label, beam.label_set,
                                        rounds_done + 1, config),
        label_set=beam.label_set | {_diversity_key(template.label)},
    )


def expand_beam(beam: Beam, registry: list[Template], scene: Scene,
                config: GenerationConfig) -> list[Beam]:
    """All valid one-question continuations of a beam.

    Every question template is attempted against the beam's state; failed
    instantiations are dropped silently.  Each surviving candidate is
    answered by the oracle and folded into a successor state.
    """
    scene_key = derive_seed(config.seed, scene.scene_id)
    successors = []
    for template in registry:
        if template.category == "caption":
            continue
        successor = _try_successor(beam, template, scene, config, scene_key)
        if successor is not None:
            successors.append(successor)
    return successors


def score_and_prune(beams: list[Beam], config: GenerationConfig) -> list[Beam]:
    """Keep the best feasible beams, deterministically tie-broken."""
    kept = []
    seen = set()
    for beam in beams:
        if not _feasible(beam.counts, beam.independents, len(beam.rounds), config):
            continue
        if beam.signature in seen:
            continue
        seen.add(beam.signature)
        kept.append(beam)
    kept.sort(key=lambda b: (-b.score, b.signature))
    return kept[: config.beams]


def _expand_generation(beams: list[Beam], registry: list[Template], scene: Scene,
                       config: GenerationConfig, scene_key: int) -> list[Beam]:
    """One search round: the top config.beams successors, lazily materialized.

    Candidates are visited in exactly the (-score, signature) order that
    score_and_prune would use (scores depend only on labels, so they are
    known before instantiation), so stopping after config.beams successes
    yields the same beams as expanding everything and pruning.
    """
    question_templates = [t for t in registry if t.category != "caption"]
    rounds_done = len(beams[0].rounds) if beams else 0
    order = []
    for beam_index, beam in enumerate(beams):
        for template in question_templates:
            prospective = beam.score + _score_delta(
                template.label, beam.label_set, rounds_done + 1, config)
            order.append((-prospective, beam.signature, template.label + "|",
                          beam_index, template))
    order.sort(key=lambda item: item[:3])
    survivors = []
    for _, _, _, beam_index, template in order:
        successor = _try_successor(beams[beam_index], template, scene, config, scene_key)
        if successor is not None:
            survivors.append(successor)
            if len(survivors) >= config.beams:
                break
    return survivors


def _caption_for(template: Template, scene: Scene, key: int, tries: int = 6) -> Utterance | None:
    for attempt in range(tries):
        rng = random.Random(derive_seed(key, "caption", template.label, attempt))
        try:
            return instantiate_caption(template, scene, rng)
        except GenerationAbort:
            continue
    return None


def _run_search(caption: Utterance, scene: Scene, config: GenerationConfig,
                registry: list[Template], key: int) -> list[Beam]:
    state = apply_caption(caption)
    caption_sig = "|".join(
        (caption.template_label, json.dumps(caption.bindings, sort_keys=True))
    )
    root = Beam(
        state=state,
        signature=(caption_sig,),
        lineage=derive_seed(key, "root", caption_sig, str(config.quota)),
    )
    scene_key = derive_seed(config.seed, scene.scene_id)
    beams = [root]
    for _ in range(config.rounds):
        beams = _expand_generation(beams, registry, scene, config, scene_key)
        if not beams:
            return []
    return beams


def generate_dialogs(scene: Scene, config: GenerationConfig) -> list[Dialog]:
    """Generate the configured number of annotated dialogs for one scene.

    Deterministic in (scene, config).  Raises
    :class:`UnderGenerationError` when beam search cannot produce enough
    mutually distinct dialogs.
    """
    if len(scene.objects) > 10:
        raise ValueError("scenes with more than 10 objects exceed the answer vocabulary")
    registry = build_registry()
    captions = [t for t in registry if t.category == "caption"]
    key = derive_seed(config.seed, scene.scene_id)

    # Two-entity relation captions get a higher draw weight: more entities
    # mean more antecedents for long-range references later in the dialog.
    order_rng = random.Random(derive_seed(key, "caption-order"))
    caption_weights = {"obj-relation": 2.0, "obj-unique": 1.0, "obj-extreme": 1.0,
                       "obj-count": 0.7}
    caption_order = []
    pool = list(captions)
    while pool:
        weights = [caption_weights[t.label] for t in pool]
        pick = order_rng.choices(range(len(pool)), weights=weights)[0]
        caption_order.append(pool.pop(pick))

    quotas = feasible_quotas(config)
    quota_rng = random.Random(derive_seed(key, "quota-order"))
    quota_order = []
    pool = list(quotas)
    while pool:
        weights = [_quota_weight(q, config.rounds) for q in pool]
        pick = quota_rng.choices(range(len(pool)), weights=weights)[0]
        quota_order.append(pool.pop(pick))

    collected: list[tuple] = []
    signatures: set = set()
    for caption_template in caption_order:
        caption = _caption_for(caption_template, scene, key)
        if caption is None:
            continue
        for quota in quota_order:
            search_config = replace(config, quota=quota)
            for beam in _run_search(caption, scene, search_config, registry, key):
                if beam.signature in signatures:
                    continue
                signatures.add(beam.signature)
                collected.append((caption, beam))
            if len(collected) >= config.dialogs_per_image:
                break
        if len(collected) >= config.dialogs_per_image:
            break

    if len(collected) < config.dialogs_per_image:
        raise UnderGenerationError(scene.scene_id, len(collected), config.dialogs_per_image)

    dialogs = []
    for caption, beam in collected[: config.dialogs_per_image]:
        problems = verify_against_scene(beam.state, scene)
        if problems:
            raise RuntimeError(
                f"scene {scene.scene_id}: questioner state diverged from the scene: "
                + "; ".join(problems)
            )
        caption_program = next(
            fact["steps"] for fact in caption.revealed_facts if fact["kind"] == "program"
        )
        dialogs.append(
            Dialog(
                scene_id=scene.scene_id,
                caption=caption,
                caption_program=caption_program,
                rounds=beam.rounds,
            )
        )
    return dialogs
