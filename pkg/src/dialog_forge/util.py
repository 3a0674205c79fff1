"""Deterministic helpers shared across the package: seed derivation,
canonical JSON, and the tokenizer used for question text."""

from __future__ import annotations

import json
import re

_MASK64 = (1 << 64) - 1

_TOKEN_RE = re.compile(r"[a-z0-9']+|[.,?!;]")


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _part_to_int(part) -> int:
    if isinstance(part, int):
        return part & _MASK64
    if isinstance(part, str):
        # Stable across processes (never the builtin hash, which is salted).
        h = 0xCBF29CE484222325
        for b in part.encode("utf-8"):
            h = ((h ^ b) * 0x100000001B3) & _MASK64
        return h
    raise TypeError(f"cannot derive a seed from {type(part).__name__}")


def derive_seed(*parts) -> int:
    """Mix ints and strings into a stable 64-bit seed.

    Used to hand every sampling site its own substream so generation is
    byte-identical regardless of scheduling or iteration order.
    """
    acc = 0x243F6A8885A308D3
    for part in parts:
        acc = _splitmix64(acc ^ _part_to_int(part))
    return acc


def mix_ints(*parts: int) -> int:
    """derive_seed for hot paths: integer parts only, no hashing of strings."""
    acc = 0x243F6A8885A308D3
    for part in parts:
        acc = _splitmix64(acc ^ (part & _MASK64))
    return acc


def str_seed(part: str) -> int:
    """Stable 64-bit key for a string (for pre-hashing hot-path labels)."""
    return _part_to_int(part)


def tokenize(text: str) -> list[str]:
    """Lowercase tokens with punctuation split into separate tokens."""
    return _TOKEN_RE.findall(text.lower())


def canonical_json(payload) -> str:
    """Stable JSON encoding used for dataset files (byte-identical reruns)."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True) + "\n"
