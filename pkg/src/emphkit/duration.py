"""Phoneme duration prediction and the emphasis duration-dilation operator.

Durations are integer frame counts on the 80 Hz synthesis grid (12.5 ms per
frame). The predictor is a keyed-mean table: it is trained on aligned
(utterance, durations) pairs and falls back to per-class means for unseen
keys, so it works with or without a toy corpus.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Optional

from .phonology import (
    AFFRICATE,
    FRICATIVE,
    GLIDE,
    LIQUID,
    NASAL,
    PAUSE,
    PHONEME_CLASSES,
    STOP,
    VOWEL,
    Utterance,
)

FRAME_RATE_HZ = 80
FRAME_PERIOD_MS = 12.5

# Plausible 50-100 ms segment means on the 12.5 ms grid; used when a class
# has no corpus statistics.
DEFAULT_CLASS_MEANS: dict[str, float] = {
    VOWEL: 8.0,
    FRICATIVE: 6.0,
    NASAL: 5.0,
    LIQUID: 5.0,
    GLIDE: 4.0,
    STOP: 5.0,
    AFFRICATE: 6.0,
    PAUSE: 8.0,
}

# (symbol, stress, word_final) -> mean frames
TableKey = tuple[str, str, bool]


class DurationSequence:
    """Positive integer frame counts, one per phoneme."""

    __slots__ = ("frames",)

    def __init__(self, frames: Iterable[int]):
        frames = tuple(int(f) for f in frames)
        for i, f in enumerate(frames):
            if f < 1:
                raise ValueError(f"duration {f} < 1 frame at index {i}")
        self.frames = frames

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i):
        return self.frames[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, DurationSequence) and self.frames == other.frames

    def __repr__(self) -> str:
        return f"DurationSequence({list(self.frames)!r})"

    @property
    def total_frames(self) -> int:
        return sum(self.frames)


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def _table_key(utt: Utterance, phoneme_index: int) -> TableKey:
    p = utt.phonemes[phoneme_index]
    word = utt.words[utt.word_of_phoneme(phoneme_index)]
    return (p.symbol, p.stress, phoneme_index == word.end - 1)


class DurationModel:
    """Keyed-mean duration predictor with per-class fallback.

    Follows the usual fit/predict shape: ``DurationModel().fit(corpus)``
    learns per-key means, ``predict(utt)`` yields one frame count per
    phoneme. An unfitted model predicts from the class fallback alone.
    """

    def __init__(self, fallback: Optional[dict[str, float]] = None):
        self.table: dict[TableKey, float] = {}
        self.fallback = dict(DEFAULT_CLASS_MEANS if fallback is None else fallback)
        for cls in PHONEME_CLASSES:
            if self.fallback.get(cls, 0.0) <= 0.0:
                raise ValueError(f"fallback mean for class {cls!r} must be > 0")

    def fit(self, corpus: list[tuple[Utterance, DurationSequence]]) -> "DurationModel":
        if not corpus:
            raise ValueError("empty corpus")
        sums: dict[TableKey, float] = {}
        counts: dict[TableKey, int] = {}
        for n, (utt, durations) in enumerate(corpus):
            if len(durations) != len(utt.phonemes):
                raise ValueError(
                    f"corpus item {n}: {len(durations)} durations for "
                    f"{len(utt.phonemes)} phonemes"
                )
            for i, frames in enumerate(durations):
                key = _table_key(utt, i)
                sums[key] = sums.get(key, 0.0) + frames
                counts[key] = counts.get(key, 0) + 1
        self.table = {key: sums[key] / counts[key] for key in sums}
        return self

    def predict(self, utt: Utterance) -> DurationSequence:
        out = []
        for i, p in enumerate(utt.phonemes):
            mean = self.table.get(_table_key(utt, i))
            if mean is None:
                mean = self.fallback[p.phone_class]
            out.append(max(1, _round_half_up(mean)))
        return DurationSequence(out)

    def word_frames(self, utt: Utterance, word_index: int) -> int:
        """Predicted total frames for one word (its own expectation)."""
        word = utt.words[word_index]
        predicted = self.predict(utt)
        return sum(predicted[i] for i in range(word.start, word.end))

    def get_params(self) -> dict:
        return {"table": dict(self.table), "fallback": dict(self.fallback)}

    def to_json(self) -> str:
        table = {
            f"{sym}|{stress}|{int(final)}": mean
            for (sym, stress, final), mean in sorted(self.table.items())
        }
        return json.dumps(
            {"table": table, "fallback": self.fallback}, indent=2, sort_keys=True
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DurationModel":
        doc = json.loads(text)
        model = cls(fallback=doc.get("fallback"))
        for key, mean in doc.get("table", {}).items():
            sym, stress, final = key.split("|")
            model.table[(sym, stress, bool(int(final)))] = float(mean)
        return model


def fit_duration_model(
    corpus: list[tuple[Utterance, DurationSequence]]
) -> DurationModel:
    return DurationModel().fit(corpus)


def predict_durations(model: DurationModel, utt: Utterance) -> DurationSequence:
    return model.predict(utt)


def dilate(
    durations: DurationSequence, flags: list[int], alpha: float
) -> DurationSequence:
    """Lengthen flagged phonemes by ``ceil(alpha * d)``, leave the rest alone.

    ``alpha`` must lie in [1.0, 1.5]; 1.0 is the explicit no-op. For any
    alpha > 1.0 the ceiling guarantees at least one extra frame.
    """
    if not (1.0 <= alpha <= 1.5):
        raise ValueError(f"alpha {alpha} outside [1.0, 1.5]")
    if len(flags) != len(durations):
        raise ValueError(
            f"{len(flags)} flags for {len(durations)} durations"
        )
    return DurationSequence(
        math.ceil(alpha * d) if flag else d
        for d, flag in zip(durations, flags)
    )


def save_durations(durations: DurationSequence) -> str:
    return json.dumps(list(durations)) + "\n"


def load_durations(text: str) -> DurationSequence:
    doc = json.loads(text)
    if not isinstance(doc, list):
        raise ValueError("durations file must be a JSON array")
    return DurationSequence(doc)
