"""Phonemized utterances: inventory, words, stress marks and emphasis flags.

Inputs arrive already phonemized (ARPAbet-style symbols). Inter-word
silences are ordinary pause phonemes wrapped in pseudo-words so that the
rest of the pipeline can treat every frame as belonging to some word.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

VOWEL = "vowel"
STOP = "stop"
AFFRICATE = "affricate"
FRICATIVE = "fricative"
NASAL = "nasal"
LIQUID = "liquid"
GLIDE = "glide"
PAUSE = "pause"

PHONEME_CLASSES = (VOWEL, STOP, AFFRICATE, FRICATIVE, NASAL, LIQUID, GLIDE, PAUSE)

STRESS_NONE = "none"
STRESS_PRIMARY = "primary"
STRESS_SECONDARY = "secondary"
STRESS_LEVELS = (STRESS_NONE, STRESS_PRIMARY, STRESS_SECONDARY)

# symbol -> (class, voiced). 44 symbols, one class each.
INVENTORY: dict[str, tuple[str, bool]] = {
    # vowels
    "AA": (VOWEL, True), "AE": (VOWEL, True), "AH": (VOWEL, True),
    "AO": (VOWEL, True), "AW": (VOWEL, True), "AX": (VOWEL, True),
    "AY": (VOWEL, True), "EH": (VOWEL, True), "ER": (VOWEL, True),
    "EY": (VOWEL, True), "IH": (VOWEL, True), "IY": (VOWEL, True),
    "OW": (VOWEL, True), "OY": (VOWEL, True), "UH": (VOWEL, True),
    "UW": (VOWEL, True),
    # stops
    "B": (STOP, True), "D": (STOP, True), "G": (STOP, True),
    "K": (STOP, False), "P": (STOP, False), "T": (STOP, False),
    # affricates
    "CH": (AFFRICATE, False), "JH": (AFFRICATE, True),
    # fricatives
    "DH": (FRICATIVE, True), "F": (FRICATIVE, False), "HH": (FRICATIVE, False),
    "S": (FRICATIVE, False), "SH": (FRICATIVE, False), "TH": (FRICATIVE, False),
    "V": (FRICATIVE, True), "Z": (FRICATIVE, True), "ZH": (FRICATIVE, True),
    # nasals
    "EM": (NASAL, True), "EN": (NASAL, True), "M": (NASAL, True),
    "N": (NASAL, True), "NG": (NASAL, True),
    # liquids
    "EL": (LIQUID, True), "L": (LIQUID, True), "R": (LIQUID, True),
    # glides
    "W": (GLIDE, True), "Y": (GLIDE, True),
    # silence
    "SIL": (PAUSE, False),
}


class UtteranceFormatError(ValueError):
    """Raised when an utterance document violates the format or an invariant."""


@dataclass(frozen=True)
class Phoneme:
    """One phoneme with its lexical stress mark.

    Class and voicing are fixed properties of the symbol, looked up in the
    shipped inventory; stress is an input annotation and is only allowed on
    vowels.
    """

    symbol: str
    stress: str = STRESS_NONE

    def __post_init__(self) -> None:
        if self.symbol not in INVENTORY:
            raise UtteranceFormatError(f"unknown symbol {self.symbol!r}")
        if self.stress not in STRESS_LEVELS:
            raise UtteranceFormatError(f"invalid stress {self.stress!r}")
        if self.stress != STRESS_NONE and self.phone_class != VOWEL:
            raise UtteranceFormatError(
                f"stress mark on non-vowel {self.symbol!r}"
            )

    @property
    def phone_class(self) -> str:
        return INVENTORY[self.symbol][0]

    @property
    def voiced(self) -> bool:
        return INVENTORY[self.symbol][1]

    @property
    def is_pause(self) -> bool:
        return self.phone_class == PAUSE


@dataclass(frozen=True)
class Word:
    """A word (or inter-word pause pseudo-word) as a phoneme index range.

    ``start``/``end`` form a half-open interval into the utterance's phoneme
    list. ``stressed_vowel_index`` is an absolute phoneme index; it is None
    only for words containing no vowel.
    """

    start: int
    end: int
    orthography: str
    stressed_vowel_index: Optional[int] = None

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise UtteranceFormatError(
                f"empty phoneme range for word {self.orthography!r}"
            )

    def __len__(self) -> int:
        return self.end - self.start

    def covers(self, phoneme_index: int) -> bool:
        return self.start <= phoneme_index < self.end


@dataclass(frozen=True)
class Utterance:
    """A phonemized sentence with word boundaries and an optional emphasis target."""

    phonemes: tuple[Phoneme, ...]
    words: tuple[Word, ...]
    emphasis_target: Optional[int] = None

    def __post_init__(self) -> None:
        expected = 0
        for i, word in enumerate(self.words):
            if word.start != expected:
                raise UtteranceFormatError(
                    f"word {i} range [{word.start}, {word.end}) not contiguous "
                    f"(expected start {expected})"
                )
            expected = word.end
            sv = word.stressed_vowel_index
            vowels = [
                j for j in range(word.start, word.end)
                if self.phonemes[j].phone_class == VOWEL
            ]
            if sv is None:
                if vowels:
                    raise UtteranceFormatError(
                        f"word {i} has vowels but no stressed_vowel_index"
                    )
            else:
                if not word.covers(sv):
                    raise UtteranceFormatError(
                        f"stressed vowel index {sv} outside word {i} range"
                    )
                if self.phonemes[sv].phone_class != VOWEL:
                    raise UtteranceFormatError(
                        f"stressed vowel index {sv} of word {i} is not a vowel"
                    )
        if expected != len(self.phonemes):
            raise UtteranceFormatError(
                f"words cover {expected} phonemes, utterance has {len(self.phonemes)}"
            )
        if self.emphasis_target is not None and not (
            0 <= self.emphasis_target < len(self.words)
        ):
            raise UtteranceFormatError(
                f"emphasis index {self.emphasis_target} out of range "
                f"for {len(self.words)} words"
            )

    def __len__(self) -> int:
        return len(self.phonemes)

    def is_pause_word(self, word_index: int) -> bool:
        word = self.words[word_index]
        return all(
            self.phonemes[j].is_pause for j in range(word.start, word.end)
        )

    def word_of_phoneme(self, phoneme_index: int) -> int:
        for i, word in enumerate(self.words):
            if word.covers(phoneme_index):
                return i
        raise IndexError(phoneme_index)


def upsample_flags(utt: Utterance) -> list[int]:
    """Expand the word-level emphasis target to a per-phoneme 0/1 flag list."""
    flags = [0] * len(utt.phonemes)
    if utt.emphasis_target is not None:
        word = utt.words[utt.emphasis_target]
        for i in range(word.start, word.end):
            flags[i] = 1
    return flags


def _infer_stressed_vowel(phonemes: list[Phoneme], start: int) -> Optional[int]:
    vowels = [
        start + k for k, p in enumerate(phonemes) if p.phone_class == VOWEL
    ]
    if not vowels:
        return None
    for idx in vowels:
        if phonemes[idx - start].stress == STRESS_PRIMARY:
            return idx
    return vowels[0]


def parse_utterance(document: str | dict) -> Utterance:
    """Parse and validate a JSON utterance document.

    Accepts either the raw JSON text or an already-decoded dict. Errors
    carry the word index at which they were detected.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise UtteranceFormatError(f"invalid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict) or "words" not in doc:
        raise UtteranceFormatError("document must be an object with a 'words' field")
    if not isinstance(doc["words"], list) or not doc["words"]:
        raise UtteranceFormatError("'words' must be a non-empty array")

    phonemes: list[Phoneme] = []
    words: list[Word] = []
    for wi, wdoc in enumerate(doc["words"]):
        if not isinstance(wdoc, dict):
            raise UtteranceFormatError(f"word {wi} is not an object")
        orthography = wdoc.get("orthography", "")
        pdocs = wdoc.get("phonemes")
        if not isinstance(pdocs, list) or not pdocs:
            raise UtteranceFormatError(f"word {wi} has no phonemes")
        start = len(phonemes)
        word_phonemes: list[Phoneme] = []
        for pdoc in pdocs:
            if isinstance(pdoc, str):
                symbol, stress = pdoc, STRESS_NONE
            elif isinstance(pdoc, dict):
                symbol = pdoc.get("symbol", "")
                stress = pdoc.get("stress", STRESS_NONE)
            else:
                raise UtteranceFormatError(f"bad phoneme entry at word {wi}")
            try:
                word_phonemes.append(Phoneme(symbol, stress))
            except UtteranceFormatError as exc:
                raise UtteranceFormatError(f"{exc} at word {wi}") from exc
        end = start + len(word_phonemes)
        sv_local = wdoc.get("stressed_vowel")
        if sv_local is not None:
            if not isinstance(sv_local, int) or not (0 <= sv_local < len(word_phonemes)):
                raise UtteranceFormatError(
                    f"stressed_vowel {sv_local} out of range at word {wi}"
                )
            sv = start + sv_local
        else:
            sv = _infer_stressed_vowel(word_phonemes, start)
        phonemes.extend(word_phonemes)
        try:
            words.append(Word(start, end, orthography, sv))
        except UtteranceFormatError as exc:
            raise UtteranceFormatError(f"{exc} at word {wi}") from exc

    target = doc.get("emphasis_word_index")
    if target is not None and not isinstance(target, int):
        raise UtteranceFormatError("emphasis_word_index must be an integer")
    return Utterance(tuple(phonemes), tuple(words), target)


def serialize_utterance(utt: Utterance) -> str:
    """Render an utterance back to its canonical JSON form.

    The output is byte-stable for equal inputs and round-trips through
    parse_utterance.
    """
    words = []
    for word in utt.words:
        wdoc: dict = {"orthography": word.orthography, "phonemes": []}
        for i in range(word.start, word.end):
            p = utt.phonemes[i]
            pdoc: dict = {"symbol": p.symbol}
            if p.stress != STRESS_NONE:
                pdoc["stress"] = p.stress
            wdoc["phonemes"].append(pdoc)
        if word.stressed_vowel_index is not None:
            wdoc["stressed_vowel"] = word.stressed_vowel_index - word.start
        words.append(wdoc)
    doc: dict = {"words": words}
    if utt.emphasis_target is not None:
        doc["emphasis_word_index"] = utt.emphasis_target
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
