"""Deterministic parametric acoustic model.

Expands phonemes + durations into a frame-level prosody plan (F0, energy,
injected silences) and renders an 80-bin mel-magnitude spectrogram from
fixed per-symbol spectral templates. Emphasis correlates (a short silence
before the stressed vowel and a rise-fall pitch accent on it) are injected
either when a word's provided duration clearly exceeds the duration model's
own expectation (expressive profile) or unconditionally on a flagged word
(flag conditioning).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Optional

import numpy as np

from .duration import FRAME_RATE_HZ, DurationModel, DurationSequence
from .phonology import (
    AFFRICATE,
    FRICATIVE,
    GLIDE,
    LIQUID,
    NASAL,
    PAUSE,
    STOP,
    VOWEL,
    INVENTORY,
    Utterance,
)

N_MEL_BINS = 80
WINDOW_MS = 50.0
SAMPLE_RATE = 24000

NEUTRAL = "neutral"
EXPRESSIVE = "expressive"
PROFILES = (NEUTRAL, EXPRESSIVE)


@dataclass(frozen=True)
class ProsodyConfig:
    """Tunable constants of the prosody planner."""

    f0_start_hz: float = 180.0
    f0_end_hz: float = 140.0
    # a word is treated as deliberately lengthened when its provided frames
    # reach this multiple of the model's own prediction
    lengthening_ratio: float = 1.2
    silence_frames: int = 3
    pitch_peak_scale: float = 1.20
    pitch_low_scale: float = 0.85
    pitch_low_position: float = 0.6


DEFAULT_PROSODY = ProsodyConfig()


@dataclass(frozen=True)
class CorrelateEvent:
    """One injected emphasis correlate (silence + rise-fall accent)."""

    word_index: int
    pre_stress_silence_frames: int
    pitch_peak_hz: float
    pitch_low_hz: float


@dataclass(frozen=True)
class PlanFrame:
    phoneme_index: int
    f0_hz: float
    energy_gain: float
    inserted_silence: bool = False


@dataclass(frozen=True)
class ProsodyPlan:
    frames: tuple[PlanFrame, ...]
    profile: str
    events: tuple[CorrelateEvent, ...] = ()

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def f0(self) -> np.ndarray:
        return np.array([f.f0_hz for f in self.frames], dtype=np.float64)

    @property
    def inserted_silence_frames(self) -> int:
        return sum(1 for f in self.frames if f.inserted_silence)


@dataclass
class MelSpectrogram:
    """n_frames x 80 nonnegative linear magnitudes plus a per-frame F0 track."""

    magnitudes: np.ndarray
    f0_track: np.ndarray
    frame_rate: int = FRAME_RATE_HZ
    window_ms: float = WINDOW_MS
    sample_rate_target: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        self.magnitudes = np.asarray(self.magnitudes, dtype=np.float32)
        self.f0_track = np.asarray(self.f0_track, dtype=np.float32)
        if self.magnitudes.ndim != 2:
            raise ValueError("magnitudes must be 2-D")
        if len(self.f0_track) != self.magnitudes.shape[0]:
            raise ValueError("f0_track length must equal frame count")
        if not np.all(np.isfinite(self.magnitudes)) or np.any(self.magnitudes < 0):
            raise ValueError("magnitudes must be finite and nonnegative")

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[1]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


# 80 bin centers, linearly spaced on the mel scale up to Nyquist.
MEL_BIN_CENTERS = np.linspace(0.0, float(hz_to_mel(SAMPLE_RATE / 2)), N_MEL_BINS)


def _bump(center_hz: float, width_mel: float, amp: float) -> np.ndarray:
    d = (MEL_BIN_CENTERS - float(hz_to_mel(center_hz))) / width_mel
    return amp * np.exp(-0.5 * d * d)


def _shelf(cutoff_hz: float, amp: float, slope_mel: float = 150.0) -> np.ndarray:
    return amp / (1.0 + np.exp(-(MEL_BIN_CENTERS - float(hz_to_mel(cutoff_hz))) / slope_mel))


_VOWEL_FORMANTS: dict[str, tuple[float, float]] = {
    # (F1, F2); F3 is shared. Roughly Peterson-Barney positions, diphthongs
    # use their onset vowel.
    "IY": (270, 2290), "IH": (390, 1990), "EH": (530, 1840), "AE": (660, 1720),
    "AA": (730, 1090), "AO": (570, 840), "UH": (440, 1020), "UW": (300, 870),
    "AH": (640, 1190), "AX": (500, 1500), "ER": (490, 1350),
    "EY": (400, 2000), "AY": (660, 1200), "AW": (660, 1100), "OY": (570, 900),
    "OW": (450, 900),
}

_FRICATIVE_SHAPES: dict[str, tuple[float, float]] = {
    # (cutoff Hz, amplitude)
    "S": (5000, 0.30), "SH": (3000, 0.30), "Z": (5000, 0.26), "ZH": (3000, 0.26),
    "F": (4000, 0.18), "V": (3500, 0.16), "TH": (4500, 0.14), "DH": (4000, 0.14),
    "HH": (1500, 0.12),
}

_STOP_BURSTS: dict[str, float] = {
    "P": 800, "B": 700, "T": 4000, "D": 3500, "K": 1800, "G": 1500,
}

_NASAL_MURMURS: dict[str, float] = {
    "M": 250, "N": 290, "NG": 230, "EM": 260, "EN": 300,
}

_SONORANT_FORMANTS: dict[str, tuple[float, float, float]] = {
    "L": (360, 1300, 2700), "EL": (380, 1250, 2700), "R": (490, 1350, 1690),
    "W": (300, 610, 2200), "Y": (270, 2290, 3000),
}


def _build_template(symbol: str) -> np.ndarray:
    cls, voiced = INVENTORY[symbol]
    if cls == PAUSE:
        return np.zeros(N_MEL_BINS)
    if cls == VOWEL:
        f1, f2 = _VOWEL_FORMANTS[symbol]
        t = _bump(f1, 120, 1.0) + _bump(f2, 120, 0.55) + _bump(2900, 160, 0.22)
        return t + 0.02
    if cls == FRICATIVE:
        cutoff, amp = _FRICATIVE_SHAPES[symbol]
        t = _shelf(cutoff, amp)
        if voiced:
            t = t + _bump(250, 110, 0.35)
        return t + 0.01
    if cls == AFFRICATE:
        t = _shelf(2600, 0.24)
        if voiced:
            t = t + _bump(260, 110, 0.32)
        else:
            t = t + _bump(3200, 200, 0.06)
        return t + 0.01
    if cls == STOP:
        t = _bump(_STOP_BURSTS[symbol], 250, 0.14) + 0.05
        if voiced:
            t = t + _bump(280, 110, 0.14)
        return t
    if cls == NASAL:
        return _bump(_NASAL_MURMURS[symbol], 100, 0.85) + _bump(2300, 200, 0.10) + 0.015
    if cls in (LIQUID, GLIDE):
        f1, f2, f3 = _SONORANT_FORMANTS[symbol]
        return _bump(f1, 120, 0.75) + _bump(f2, 130, 0.40) + _bump(f3, 160, 0.18) + 0.02
    raise AssertionError(cls)


SPECTRAL_TEMPLATES: dict[str, np.ndarray] = {
    symbol: _build_template(symbol) for symbol in INVENTORY
}


def plan_prosody(
    utt: Utterance,
    durations: DurationSequence,
    profile: str = NEUTRAL,
    flags: Optional[list[int]] = None,
    duration_model: Optional[DurationModel] = None,
    config: ProsodyConfig = DEFAULT_PROSODY,
) -> ProsodyPlan:
    """Turn phonemes + durations into per-frame F0 / energy with correlates.

    The baseline is a declining F0 line over the whole utterance. Under the
    expressive profile, any word whose provided frames reach
    ``lengthening_ratio`` times the duration model's own prediction receives
    the emphasis correlates; with ``flags`` given, the flagged word receives
    them unconditionally. The neutral profile without flags never injects.
    """
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    if len(durations) != len(utt.phonemes):
        raise ValueError(
            f"{len(durations)} durations for {len(utt.phonemes)} phonemes"
        )
    if flags is not None and len(flags) != len(utt.phonemes):
        raise ValueError(f"{len(flags)} flags for {len(utt.phonemes)} phonemes")

    total = durations.total_frames
    # declination on the pre-injection frame grid
    if total > 1:
        baseline = np.linspace(config.f0_start_hz, config.f0_end_hz, total)
    else:
        baseline = np.array([config.f0_start_hz])

    flagged_words: set[int] = set()
    if flags is not None:
        for i, flag in enumerate(flags):
            if flag:
                flagged_words.add(utt.word_of_phoneme(i))

    lengthened_words: set[int] = set()
    if profile == EXPRESSIVE:
        model = duration_model if duration_model is not None else DurationModel()
        predicted = model.predict(utt)
        for wi, word in enumerate(utt.words):
            provided = sum(durations[i] for i in range(word.start, word.end))
            expected = sum(predicted[i] for i in range(word.start, word.end))
            if provided >= config.lengthening_ratio * expected:
                lengthened_words.add(wi)

    inject_words = {
        wi for wi in flagged_words | lengthened_words
        if utt.words[wi].stressed_vowel_index is not None
    }

    # original-grid start frame of each phoneme
    starts = np.concatenate(([0], np.cumsum(durations.frames)))

    contour: dict[int, np.ndarray] = {}
    events = []
    for wi in sorted(inject_words):
        vi = utt.words[wi].stressed_vowel_index
        assert vi is not None
        d_v = durations[vi]
        onset = int(starts[vi])
        peak = config.pitch_peak_scale * baseline[onset]
        j60 = config.pitch_low_position * (d_v - 1)
        low_idx = onset + round(j60)
        low = config.pitch_low_scale * baseline[low_idx]
        shape = np.empty(d_v)
        for j in range(d_v):
            if d_v == 1 or j60 == 0:
                shape[j] = peak if j == 0 else low
            elif j <= j60:
                shape[j] = peak + (low - peak) * (j / j60)
            else:
                shape[j] = low
        contour[vi] = shape
        events.append(
            CorrelateEvent(
                word_index=wi,
                pre_stress_silence_frames=config.silence_frames,
                pitch_peak_hz=float(peak),
                pitch_low_hz=float(low),
            )
        )

    silence_before = {
        utt.words[wi].stressed_vowel_index for wi in inject_words
    }

    frames: list[PlanFrame] = []
    for i, p in enumerate(utt.phonemes):
        if i in silence_before:
            for _ in range(config.silence_frames):
                frames.append(PlanFrame(i, 0.0, 0.0, inserted_silence=True))
        gain = 0.0 if p.is_pause else 1.0
        for j in range(durations[i]):
            if not p.voiced:
                f0 = 0.0
            elif i in contour:
                f0 = float(contour[i][j])
            else:
                f0 = float(baseline[starts[i] + j])
            frames.append(PlanFrame(i, f0, gain))
    return ProsodyPlan(tuple(frames), profile, tuple(events))


_BURST_FRAMES = 1  # release length of a stop; the preceding frames are closure
# closures are quiet but not silent (voice bar / leakage sits above the
# analysis silence threshold; only deliberately inserted silence is silent)
_CLOSURE_GAIN = 0.65


def _frames_of_run(plan: ProsodyPlan, start: int) -> int:
    key = (plan.frames[start].phoneme_index, plan.frames[start].inserted_silence)
    end = start
    while end < len(plan.frames) and (
        plan.frames[end].phoneme_index,
        plan.frames[end].inserted_silence,
    ) == key:
        end += 1
    return end


def render_mel(plan: ProsodyPlan, utt: Utterance) -> MelSpectrogram:
    """Render the plan to mel magnitudes using the per-symbol templates.

    Each frame is its phoneme's template scaled by the frame energy gain;
    adjacent phonemes are joined with a 2-frame linear cross-fade. Inserted
    silences and pauses render as all-zero rows. Stops and affricates are
    temporal: a silent closure followed by the release (burst or frication)
    carrying the symbol's template.
    """
    n = len(plan.frames)
    pure = np.zeros((n, N_MEL_BINS))
    k = 0
    while k < n:
        end = _frames_of_run(plan, k)
        f = plan.frames[k]
        if f.inserted_silence:
            k = end
            continue
        phoneme = utt.phonemes[f.phoneme_index]
        cls = phoneme.phone_class
        if cls == STOP:
            release_at = max(k, end - _BURST_FRAMES)
        elif cls == AFFRICATE:
            release_at = k + (end - k) - max(1, round(0.6 * (end - k)))
        else:
            release_at = k
        template = SPECTRAL_TEMPLATES[phoneme.symbol]
        for j in range(k, end):
            if plan.frames[j].energy_gain > 0.0:
                gain = plan.frames[j].energy_gain
                if j < release_at:
                    gain *= _CLOSURE_GAIN
                pure[j] = template * gain
        k = end

    # run boundaries: consecutive frames of different (phoneme, silence) runs
    out = pure.copy()
    run_id = [
        (f.phoneme_index, f.inserted_silence) for f in plan.frames
    ]
    for k in range(1, n):
        if run_id[k] == run_id[k - 1]:
            continue
        if not pure[k - 1].any() or not pure[k].any():
            continue  # fades against silence are handled by the vocoder window
        a, b = pure[k - 1], pure[k]
        out[k - 1] = 0.75 * a + 0.25 * b
        out[k] = 0.25 * a + 0.75 * b

    f0_track = np.array([f.f0_hz for f in plan.frames])
    return MelSpectrogram(out, f0_track)


def frames_for_word(
    utt: Utterance, durations: DurationSequence, word_index: int
) -> tuple[int, int]:
    """Half-open frame interval of one word on the pre-injection grid."""
    if not (0 <= word_index < len(utt.words)):
        raise IndexError(
            f"word index {word_index} out of range for {len(utt.words)} words"
        )
    word = utt.words[word_index]
    starts = np.concatenate(([0], np.cumsum(durations.frames)))
    return int(starts[word.start]), int(starts[word.end])


def apply_mel_emph_gain(
    mel: MelSpectrogram, frame_range: tuple[int, int], v_mel: float
) -> MelSpectrogram:
    """Scale mel magnitudes in ``frame_range`` by ``v_mel``; everything else unchanged."""
    lo, hi = frame_range
    if not (0 <= lo <= hi <= mel.n_frames):
        raise ValueError(f"frame range [{lo}, {hi}) outside 0..{mel.n_frames}")
    if v_mel <= 0:
        raise ValueError(f"v_mel {v_mel} must be > 0")
    magnitudes = mel.magnitudes.copy()
    magnitudes[lo:hi] = magnitudes[lo:hi] * np.float32(v_mel)
    return MelSpectrogram(
        magnitudes,
        mel.f0_track.copy(),
        frame_rate=mel.frame_rate,
        window_ms=mel.window_ms,
        sample_rate_target=mel.sample_rate_target,
    )


_MEL_MAGIC = b"MEL0"
_MEL_HEADER = struct.Struct("<4sIIII")


def write_mel(mel: MelSpectrogram, fp: BinaryIO) -> None:
    """Write the little-endian MEL0 container (header, f32 rows, f32 F0)."""
    fp.write(
        _MEL_HEADER.pack(
            _MEL_MAGIC, mel.n_frames, mel.n_bins, mel.frame_rate,
            mel.sample_rate_target,
        )
    )
    fp.write(np.ascontiguousarray(mel.magnitudes, dtype="<f4").tobytes())
    fp.write(np.ascontiguousarray(mel.f0_track, dtype="<f4").tobytes())


def read_mel(fp: BinaryIO) -> MelSpectrogram:
    header = fp.read(_MEL_HEADER.size)
    if len(header) != _MEL_HEADER.size:
        raise ValueError("truncated mel file header")
    magic, n_frames, n_bins, frame_rate, sample_rate = _MEL_HEADER.unpack(header)
    if magic != _MEL_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    mag = np.frombuffer(fp.read(4 * n_frames * n_bins), dtype="<f4")
    if mag.size != n_frames * n_bins:
        raise ValueError("truncated magnitude payload")
    f0 = np.frombuffer(fp.read(4 * n_frames), dtype="<f4")
    if f0.size != n_frames:
        raise ValueError("truncated f0 payload")
    return MelSpectrogram(
        mag.reshape(n_frames, n_bins).copy(),
        f0.copy(),
        frame_rate=frame_rate,
        sample_rate_target=sample_rate,
    )
