"""dialog-forge: grammar-driven multi-round dialogs over scene graphs."""

from .engine import Dialog, GenerationConfig, UnderGenerationError, generate_dialogs
from .grammar import (
    QuestionCandidate,
    Template,
    Utterance,
    build_registry,
    instantiate_caption,
    instantiate_question,
    parse_utterance,
    realize_text,
    registry_dump,
)
from .grounding import evaluate_grounding, ndcg
from .oracle import answer, answer_vocabulary, resolve_and_answer
from .programs import (
    EvalContext,
    FullWorld,
    GenerationAbort,
    PartialWorld,
    PrimitiveCall,
    PrimitiveProgram,
    run_program,
)
from .scenes import (
    Object,
    Scene,
    extreme_object,
    immediate_neighbor,
    load_scenes,
    synthesize_scene,
)
from .state import (
    HistoryDependency,
    PartialScene,
    apply_caption,
    apply_qa,
    is_redundant,
    label_dependency,
)
from .stats import StatsReport, compute_stats, render_report

__version__ = "0.1.0"

__all__ = [
    "Dialog",
    "EvalContext",
    "FullWorld",
    "GenerationAbort",
    "GenerationConfig",
    "HistoryDependency",
    "Object",
    "PartialScene",
    "PartialWorld",
    "PrimitiveCall",
    "PrimitiveProgram",
    "QuestionCandidate",
    "Scene",
    "StatsReport",
    "Template",
    "UnderGenerationError",
    "Utterance",
    "answer",
    "answer_vocabulary",
    "apply_caption",
    "apply_qa",
    "build_registry",
    "compute_stats",
    "evaluate_grounding",
    "extreme_object",
    "generate_dialogs",
    "immediate_neighbor",
    "instantiate_caption",
    "instantiate_question",
    "is_redundant",
    "label_dependency",
    "load_scenes",
    "ndcg",
    "parse_utterance",
    "realize_text",
    "registry_dump",
    "render_report",
    "resolve_and_answer",
    "run_program",
    "synthesize_scene",
]
