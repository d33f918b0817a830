"""Deterministic synthetic English-like text for fine-tuning runs.

Template-expanded sentences over small word banks: not natural language, but
byte statistics (word shapes, function-word frequencies, punctuation) are
rich enough for a byte-level LM to have something to learn.  Real experiments
should point the matrix at their own text file instead.
"""

from __future__ import annotations

import numpy as np

_DETS = ["the", "a", "this", "that", "every", "some", "no"]
_ADJS = [
    "old", "quiet", "bright", "narrow", "heavy", "pale", "distant", "curious",
    "steady", "rough", "warm", "hollow", "green", "sudden", "patient",
]
_NOUNS = [
    "river", "lantern", "teacher", "garden", "letter", "mountain", "clock",
    "harbor", "cellar", "traveler", "orchard", "bridge", "signal", "meadow",
    "library", "fisherman", "valley", "storm", "window", "bell",
]
_VERBS_T = [
    "watched", "carried", "followed", "remembered", "crossed", "repaired",
    "described", "ignored", "reached", "borrowed", "painted", "measured",
]
_VERBS_I = [
    "slept", "waited", "vanished", "trembled", "returned", "hesitated",
    "drifted", "listened", "arrived", "settled",
]
_ADVS = [
    "slowly", "again", "at dusk", "without a sound", "for years",
    "before dawn", "in the rain", "by accident", "all winter", "at last",
]
_CONNECTIVES = ["and", "but", "while", "because", "until", "although"]


def _noun_phrase(rng: np.random.Generator) -> str:
    det = _DETS[rng.integers(len(_DETS))]
    noun = _NOUNS[rng.integers(len(_NOUNS))]
    if rng.random() < 0.55:
        return f"{det} {_ADJS[rng.integers(len(_ADJS))]} {noun}"
    return f"{det} {noun}"


def _clause(rng: np.random.Generator) -> str:
    subject = _noun_phrase(rng)
    if rng.random() < 0.6:
        verb = _VERBS_T[rng.integers(len(_VERBS_T))]
        obj = _noun_phrase(rng)
        core = f"{subject} {verb} {obj}"
    else:
        core = f"{subject} {_VERBS_I[rng.integers(len(_VERBS_I))]}"
    if rng.random() < 0.5:
        core = f"{core} {_ADVS[rng.integers(len(_ADVS))]}"
    return core


def sentence(rng: np.random.Generator) -> str:
    text = _clause(rng)
    while rng.random() < 0.3:
        conn = _CONNECTIVES[rng.integers(len(_CONNECTIVES))]
        text = f"{text}, {conn} {_clause(rng)}"
    return text[0].upper() + text[1:] + "."


def sample_text(n_bytes: int, seed: int = 0) -> str:
    """At least n_bytes of deterministic sentence text, paragraph-broken."""
    rng = np.random.default_rng(seed)
    parts: list[str] = []
    size = 0
    in_paragraph = 0
    while size < n_bytes:
        s = sentence(rng)
        parts.append(s)
        size += len(s) + 1
        in_paragraph += 1
        if in_paragraph >= rng.integers(3, 8):
            parts.append("\n\n")
            size += 1
            in_paragraph = 0
        else:
            parts.append(" ")
    return "".join(parts)
