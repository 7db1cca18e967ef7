"""Synthetic utterance corpus for machine-proxy experiments.

Sentences are sampled from a small built-in lexicon of phonemized words
(content words carry a primary-stress mark), with occasional inter-word
pauses and one randomly chosen content word designated as the emphasis
target. Generation is fully determined by the seed.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from .phonology import Utterance, parse_utterance

# orthography -> phonemes as (symbol, stress) with stress "" for none
_CONTENT_WORDS: dict[str, list[tuple[str, str]]] = {
    "almost": [("AO", "primary"), ("L", ""), ("M", ""), ("OW", ""), ("S", ""), ("T", "")],
    "apple": [("AE", "primary"), ("P", ""), ("EL", "")],
    "basket": [("B", ""), ("AE", "primary"), ("S", ""), ("K", ""), ("IH", ""), ("T", "")],
    "blue": [("B", ""), ("L", ""), ("UW", "primary")],
    "bottle": [("B", ""), ("AA", "primary"), ("T", ""), ("EL", "")],
    "brother": [("B", ""), ("R", ""), ("AH", "primary"), ("DH", ""), ("ER", "")],
    "candle": [("K", ""), ("AE", "primary"), ("N", ""), ("D", ""), ("EL", "")],
    "dinner": [("D", ""), ("IH", "primary"), ("N", ""), ("ER", "")],
    "doctor": [("D", ""), ("AA", "primary"), ("K", ""), ("T", ""), ("ER", "")],
    "evening": [("IY", "primary"), ("V", ""), ("N", ""), ("IH", ""), ("NG", "")],
    "father": [("F", ""), ("AA", "primary"), ("DH", ""), ("ER", "")],
    "garden": [("G", ""), ("AA", "primary"), ("R", ""), ("D", ""), ("EN", "")],
    "green": [("G", ""), ("R", ""), ("IY", "primary"), ("N", "")],
    "large": [("L", ""), ("AA", "primary"), ("R", ""), ("JH", "")],
    "morning": [("M", ""), ("AO", "primary"), ("R", ""), ("N", ""), ("IH", ""), ("NG", "")],
    "mother": [("M", ""), ("AH", "primary"), ("DH", ""), ("ER", "")],
    "mountain": [("M", ""), ("AW", "primary"), ("N", ""), ("T", ""), ("EN", "")],
    "music": [("M", ""), ("Y", ""), ("UW", "primary"), ("Z", ""), ("IH", ""), ("K", "")],
    "never": [("N", ""), ("EH", "primary"), ("V", ""), ("ER", "")],
    "not": [("N", ""), ("AA", "primary"), ("T", "")],
    "open": [("OW", "primary"), ("P", ""), ("EN", "")],
    "orange": [("AO", "primary"), ("R", ""), ("EN", ""), ("JH", "")],
    "paper": [("P", ""), ("EY", "primary"), ("P", ""), ("ER", "")],
    "pencil": [("P", ""), ("EH", "primary"), ("N", ""), ("S", ""), ("EL", "")],
    "picture": [("P", ""), ("IH", "primary"), ("K", ""), ("CH", ""), ("ER", "")],
    "pocket": [("P", ""), ("AA", "primary"), ("K", ""), ("IH", ""), ("T", "")],
    "quiet": [("K", ""), ("W", ""), ("AY", "primary"), ("AH", ""), ("T", "")],
    "rabbit": [("R", ""), ("AE", "primary"), ("B", ""), ("IH", ""), ("T", "")],
    "red": [("R", ""), ("EH", "primary"), ("D", "")],
    "river": [("R", ""), ("IH", "primary"), ("V", ""), ("ER", "")],
    "silver": [("S", ""), ("IH", "primary"), ("L", ""), ("V", ""), ("ER", "")],
    "simple": [("S", ""), ("IH", "primary"), ("M", ""), ("P", ""), ("EL", "")],
    "sister": [("S", ""), ("IH", "primary"), ("S", ""), ("T", ""), ("ER", "")],
    "small": [("S", ""), ("M", ""), ("AO", "primary"), ("L", "")],
    "sudden": [("S", ""), ("AH", "primary"), ("D", ""), ("EN", "")],
    "summer": [("S", ""), ("AH", "primary"), ("M", ""), ("ER", "")],
    "table": [("T", ""), ("EY", "primary"), ("B", ""), ("EL", "")],
    "teacher": [("T", ""), ("IY", "primary"), ("CH", ""), ("ER", "")],
    "travel": [("T", ""), ("R", ""), ("AE", "primary"), ("V", ""), ("EL", "")],
    "valley": [("V", ""), ("AE", "primary"), ("L", ""), ("IY", "")],
    "village": [("V", ""), ("IH", "primary"), ("L", ""), ("IH", ""), ("JH", "")],
    "water": [("W", ""), ("AO", "primary"), ("T", ""), ("ER", "")],
    "welcome": [("W", ""), ("EH", "primary"), ("L", ""), ("K", ""), ("AH", ""), ("M", "")],
    "window": [("W", ""), ("IH", "primary"), ("N", ""), ("D", ""), ("OW", "")],
    "winter": [("W", ""), ("IH", "primary"), ("N", ""), ("T", ""), ("ER", "")],
    "wonder": [("W", ""), ("AH", "primary"), ("N", ""), ("D", ""), ("ER", "")],
    "yellow": [("Y", ""), ("EH", "primary"), ("L", ""), ("OW", "")],
}

_FUNCTION_WORDS: dict[str, list[tuple[str, str]]] = {
    "the": [("DH", ""), ("AH", "")],
    "a": [("AH", "")],
    "of": [("AH", ""), ("V", "")],
    "in": [("IH", ""), ("N", "")],
    "on": [("AA", ""), ("N", "")],
    "to": [("T", ""), ("UW", "")],
    "and": [("AE", ""), ("N", ""), ("D", "")],
    "is": [("IH", ""), ("Z", "")],
    "was": [("W", ""), ("AH", ""), ("Z", "")],
    "it": [("IH", ""), ("T", "")],
    "we": [("W", ""), ("IY", "")],
    "they": [("DH", ""), ("EY", "")],
    "my": [("M", ""), ("AY", "")],
    "his": [("HH", ""), ("IH", ""), ("Z", "")],
    "her": [("HH", ""), ("ER", "")],
    "that": [("DH", ""), ("AE", ""), ("T", "")],
    "with": [("W", ""), ("IH", ""), ("TH", "")],
    "for": [("F", ""), ("AO", ""), ("R", "")],
}

_PAUSE_WORD = {"orthography": "", "phonemes": [{"symbol": "SIL"}]}

PAUSE_PROBABILITY = 0.2


def _word_doc(orthography: str, phones: list[tuple[str, str]]) -> dict:
    return {
        "orthography": orthography,
        "phonemes": [
            {"symbol": s, "stress": stress} if stress else {"symbol": s}
            for s, stress in phones
        ],
    }


MIN_CONTENT_WORDS = 3


def generate_utterance_doc(rng: random.Random) -> dict:
    """One random utterance document with a content-word emphasis target.

    At least MIN_CONTENT_WORDS stressed content words per sentence, so the
    identification task always has several plausible answers.
    """
    n_words = rng.randint(4, 10)
    content_names = sorted(_CONTENT_WORDS)
    function_names = sorted(_FUNCTION_WORDS)

    words: list[dict] = []
    content_positions: list[int] = []
    for i in range(n_words):
        # roughly alternate function and content words, content-heavy
        remaining = n_words - i
        must_be_content = MIN_CONTENT_WORDS - len(content_positions) >= remaining
        if not must_be_content and i > 0 and rng.random() < 0.35:
            name = rng.choice(function_names)
            words.append(_word_doc(name, _FUNCTION_WORDS[name]))
        else:
            name = rng.choice(content_names)
            content_positions.append(len(words))
            words.append(_word_doc(name, _CONTENT_WORDS[name]))
        if i < n_words - 1 and rng.random() < PAUSE_PROBABILITY:
            words.append(dict(_PAUSE_WORD))
    target = rng.choice(content_positions)
    return {"words": words, "emphasis_word_index": target}


def generate_corpus(n: int, seed: int) -> list[Utterance]:
    if n < 1:
        raise ValueError("corpus size must be >= 1")
    rng = random.Random(seed)
    return [parse_utterance(generate_utterance_doc(rng)) for _ in range(n)]


def write_corpus(directory: str | Path, n: int, seed: int) -> list[Path]:
    """Write n utterance files (utt_0000.json, ...) under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    paths = []
    for i in range(n):
        doc = generate_utterance_doc(rng)
        parse_utterance(doc)  # generator contract: every file validates
        path = directory / f"utt_{i:04d}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        paths.append(path)
    return paths
