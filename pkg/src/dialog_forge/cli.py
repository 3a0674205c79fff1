"""Command-line front end: generate, validate, stats."""

from __future__ import annotations

import argparse
import os
import random
import sys
from pathlib import Path

from .dataset_io import (
    build_dataset,
    read_dataset,
    records_for_scene,
    scene_from_payload,
    scene_payload,
    validate_dataset,
    write_dataset,
    DatasetFormatError,
)
from .engine import GenerationConfig, UnderGenerationError, generate_dialogs
from .scenes import SceneLoadError, SceneValidationError, load_scenes, synthesize_scene
from .stats import compute_stats, render_report
from .util import derive_seed

SEED_ENV = "DIALOG_FORGE_SEED"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialog-forge",
        description="Generate, validate, and analyze annotated multi-round "
        "dialogs over scene graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a dialog dataset")
    source = gen.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenes", help="scene JSON file to load")
    source.add_argument("--synthesize", type=int, metavar="N",
                        help="synthesize N scenes instead of loading")
    gen.add_argument("--min-objects", type=int, default=3)
    gen.add_argument("--max-objects", type=int, default=10)
    gen.add_argument("--dialogs-per-image", type=int, default=5)
    gen.add_argument("--rounds", type=int, default=10)
    gen.add_argument("--beams", type=int, default=100)
    gen.add_argument("--seed", type=int, default=None,
                     help=f"generation seed (falls back to ${SEED_ENV}, then 0)")
    gen.add_argument("--workers", type=int, default=1)
    gen.add_argument("--output", required=True)
    gen.add_argument("--debug-states", metavar="PATH",
                     help="also dump each dialog's final questioner state as JSON lines")

    val = sub.add_parser("validate", help="re-check every property of a dataset file")
    val.add_argument("--input", required=True)
    val.add_argument("--max-print", type=int, default=50)

    sta = sub.add_parser("stats", help="compute dataset statistics")
    sta.add_argument("--input", required=True)
    sta.add_argument("--json", dest="json_out", help="write the JSON report here")
    sta.add_argument("--text", dest="text_out", help="write the text report here")
    sta.add_argument("--figures", help="render distribution figures into this directory")

    gro = sub.add_parser("grounding",
                         help="score attention dumps against the dataset's groundings")
    gro.add_argument("--input", required=True, help="dataset file")
    gro.add_argument("--dumps", required=True, help="attention dumps (JSON lines)")
    gro.add_argument("--output", help="write the JSON report here (default stdout)")
    return parser


def _resolve_seed(value) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    return int(env) if env else 0


def _generate_for_scene(payload: dict, config: GenerationConfig):
    scene = scene_from_payload(payload)
    try:
        return payload["scene_id"], records_for_scene(generate_dialogs(scene, config)), None
    except UnderGenerationError as exc:
        return payload["scene_id"], [], str(exc)


def cmd_generate(args) -> int:
    seed = _resolve_seed(args.seed)
    config = GenerationConfig(
        beams=args.beams,
        dialogs_per_image=args.dialogs_per_image,
        rounds=args.rounds,
        seed=seed,
    )
    if args.scenes:
        try:
            scenes = load_scenes(args.scenes)
        except (SceneLoadError, SceneValidationError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        source = {"path": str(args.scenes)}
    else:
        if args.synthesize <= 0:
            print("error: --synthesize needs a positive count", file=sys.stderr)
            return 2
        if not 1 <= args.min_objects <= args.max_objects <= 10:
            print("error: need 1 <= --min-objects <= --max-objects <= 10 "
                  "(counts above 10 leave the answer vocabulary)", file=sys.stderr)
            return 2
        scenes = [
            synthesize_scene(
                random.Random(derive_seed(seed, "scene", index)),
                args.min_objects,
                args.max_objects,
                scene_id=f"synthetic-{index:06d}",
            )
            for index in range(args.synthesize)
        ]
        source = {
            "synthesize": args.synthesize,
            "min_objects": args.min_objects,
            "max_objects": args.max_objects,
        }

    payloads = [scene_payload(scene) for scene in scenes]
    failures = []
    records = []
    if args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_generate_for_scene, payloads,
                                    [config] * len(payloads), chunksize=4))
    else:
        results = [_generate_for_scene(payload, config) for payload in payloads]
    for scene_id, scene_records, error in results:
        if error:
            failures.append(error)
        records.extend(scene_records)

    dataset = build_dataset(config, source, payloads, records)
    write_dataset(args.output, dataset)
    print(f"wrote {len(records)} dialogs over {len(payloads)} scenes to {args.output}")
    if args.debug_states:
        import json

        from .dataset_io import replay_final_states

        with Path(args.debug_states).open("w", encoding="utf-8") as handle:
            for scene_id, dialog_index, state in replay_final_states(dataset):
                snapshot = {"scene_id": scene_id, "dialog_index": dialog_index,
                            "state": state.to_json()}
                handle.write(json.dumps(snapshot, sort_keys=True) + "\n")
    if failures:
        for line in failures:
            print(f"under-generation: {line}", file=sys.stderr)
        return 1
    return 0


def cmd_validate(args) -> int:
    try:
        data = read_dataset(args.input)
    except DatasetFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    violations = validate_dataset(data)
    by_kind: dict[str, int] = {}
    for violation in violations:
        by_kind[violation.kind] = by_kind.get(violation.kind, 0) + 1
    for violation in violations[: args.max_print]:
        print(violation)
    if len(violations) > args.max_print:
        print(f"... and {len(violations) - args.max_print} more")
    if violations:
        summary = ", ".join(f"{kind}: {n}" for kind, n in sorted(by_kind.items()))
        print(f"FAIL: {len(violations)} violations ({summary})")
        return 1
    print(f"OK: {len(data.get('records', ()))} dialogs, zero violations")
    return 0


def cmd_stats(args) -> int:
    try:
        data = read_dataset(args.input)
    except DatasetFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    records = data.get("records", ())
    if not records:
        print("error: dataset contains no dialog records", file=sys.stderr)
        return 2
    report = compute_stats(records)
    if args.json_out:
        Path(args.json_out).write_text(render_report(report, "json"), encoding="utf-8")
    if args.text_out:
        Path(args.text_out).write_text(render_report(report, "text"), encoding="utf-8")
    if args.figures:
        from .figures import render_figures

        paths = render_figures(report, args.figures)
        print(f"wrote {len(paths)} figures to {args.figures}", file=sys.stderr)
    if not (args.json_out or args.text_out):
        sys.stdout.write(render_report(report, "text"))
    return 0


def cmd_grounding(args) -> int:
    from .grounding import GroundingError, evaluate_grounding, read_attention_dumps

    try:
        data = read_dataset(args.input)
        dumps = read_attention_dumps(args.dumps)
        report = evaluate_grounding(dumps, data)
    except (DatasetFormatError, GroundingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    import json

    rendered = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(rendered, encoding="utf-8")
    else:
        sys.stdout.write(rendered)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "generate":
        return cmd_generate(args)
    if args.command == "validate":
        return cmd_validate(args)
    if args.command == "grounding":
        return cmd_grounding(args)
    return cmd_stats(args)


if __name__ == "__main__":
    sys.exit(main())
