"""End-to-end synthesis: utterance -> durations -> prosody -> mel -> waveform.

Four emphasis modes share one code path: ``none`` renders the prediction as
is, ``dd`` dilates the target word's durations before rendering, ``mel``
renders plainly and then scales/stretches the target's mel frames, ``flag``
feeds the upsampled word flag to the prosody planner. Every output is a pure
function of (utterance, config, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

from . import acoustics, vocoder
from .acoustics import MelSpectrogram, ProsodyPlan
from .analysis import WordAlignment
from .duration import DurationModel, DurationSequence, dilate
from .phonology import Utterance, upsample_flags
from .vocoder import FrameHops, Waveform

MODE_NONE = "none"
MODE_DD = "dd"
MODE_MEL = "mel"
MODE_FLAG = "flag"
MODES = (MODE_NONE, MODE_DD, MODE_MEL, MODE_FLAG)


@dataclass(frozen=True)
class RunConfig:
    mode: str = MODE_NONE
    alpha_dd: float = 1.5
    alpha_mel: float = vocoder.DEFAULT_ALPHA_MEL
    v_mel: float = vocoder.DEFAULT_V_MEL
    profile: str = acoustics.EXPRESSIVE
    seed: int = vocoder.DEFAULT_NOISE_SEED

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (1.0 <= self.alpha_dd <= 1.5):
            raise ValueError(f"alpha_dd {self.alpha_dd} outside [1.0, 1.5]")
        if not (1.0 <= self.alpha_mel <= 1.5):
            raise ValueError(f"alpha_mel {self.alpha_mel} outside [1.0, 1.5]")
        if self.v_mel <= 0:
            raise ValueError(f"v_mel {self.v_mel} must be > 0")
        if self.profile not in acoustics.PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")


@dataclass
class SynthesisResult:
    utterance: Utterance
    config: RunConfig
    durations: DurationSequence
    plan: ProsodyPlan
    mel: MelSpectrogram
    hops: FrameHops
    waveform: Waveform
    alignment: list[WordAlignment] = field(default_factory=list)


def _word_frame_range(
    plan: ProsodyPlan, utt: Utterance, word_index: int
) -> tuple[int, int]:
    """Frame interval of a word on the plan's (post-injection) grid."""
    word = utt.words[word_index]
    indices = [
        k for k, f in enumerate(plan.frames)
        if word.start <= f.phoneme_index < word.end
    ]
    return indices[0], indices[-1] + 1


def _alignment(
    plan: ProsodyPlan, hops: FrameHops, utt: Utterance
) -> list[WordAlignment]:
    offsets = [0]
    for h in hops:
        offsets.append(offsets[-1] + h)
    out = []
    for wi, word in enumerate(utt.words):
        lo, hi = _word_frame_range(plan, utt, wi)
        vowel_sample: Optional[int] = None
        if word.stressed_vowel_index is not None:
            for k in range(lo, hi):
                f = plan.frames[k]
                if f.phoneme_index == word.stressed_vowel_index and not f.inserted_silence:
                    vowel_sample = offsets[k]
                    break
        out.append(
            WordAlignment(
                word_index=wi,
                start_sample=offsets[lo],
                end_sample=offsets[hi],
                stressed_vowel_sample=vowel_sample,
                is_pause=utt.is_pause_word(wi),
                orthography=word.orthography,
            )
        )
    return out


def synthesize(
    utt: Utterance,
    config: RunConfig,
    model: Optional[DurationModel] = None,
    oracle_durations: Optional[DurationSequence] = None,
) -> SynthesisResult:
    """Run the configured emphasis mode over one utterance."""
    model = model if model is not None else DurationModel()
    base = oracle_durations if oracle_durations is not None else model.predict(utt)
    target = utt.emphasis_target

    if config.mode == MODE_DD and target is not None:
        durations = dilate(base, upsample_flags(utt), config.alpha_dd)
        flags = None
    elif config.mode == MODE_FLAG and target is not None:
        durations = base
        flags = upsample_flags(utt)
    else:
        durations = base
        flags = None

    plan = acoustics.plan_prosody(
        utt, durations, profile=config.profile, flags=flags, duration_model=model
    )
    mel = acoustics.render_mel(plan, utt)

    if config.mode == MODE_MEL and target is not None:
        frame_range = _word_frame_range(plan, utt, target)
        mel = acoustics.apply_mel_emph_gain(mel, frame_range, config.v_mel)
        hops = vocoder.make_hops(mel.n_frames, frame_range, config.alpha_mel)
    else:
        hops = vocoder.make_hops(mel.n_frames)

    wave = vocoder.vocode(mel, hops, seed=config.seed)
    alignment = _alignment(plan, hops, utt)
    return SynthesisResult(
        utterance=utt,
        config=config,
        durations=durations,
        plan=plan,
        mel=mel,
        hops=hops,
        waveform=wave,
        alignment=alignment,
    )


# offset applied to the noise seed of reference renderings: listeners never
# hear a sample-aligned twin of the stimulus, so comparisons against an
# unemphasized rendering should carry independent rendering variance
BASELINE_SEED_OFFSET = 1000003


def baseline_config(config: RunConfig) -> RunConfig:
    """The matching no-emphasis configuration, as an independent rendering.

    Same mode-independent settings, but a deterministically derived noise
    seed, so baseline deltas reflect honest rendering variance rather than
    bit-aligned silence.
    """
    return replace(
        config, mode=MODE_NONE, seed=config.seed + BASELINE_SEED_OFFSET
    )


def alignment_to_json(result: SynthesisResult) -> str:
    doc = {
        "sample_rate": result.waveform.sample_rate,
        "peak_normalized": result.waveform.peak_normalized,
        "mode": result.config.mode,
        "profile": result.config.profile,
        "seed": result.config.seed,
        "emphasis_word_index": result.utterance.emphasis_target,
        "words": [
            {
                "word_index": a.word_index,
                "orthography": a.orthography,
                "start_sample": a.start_sample,
                "end_sample": a.end_sample,
                "stressed_vowel_sample": a.stressed_vowel_sample,
                "is_pause": a.is_pause,
            }
            for a in result.alignment
        ],
        "frames": [
            {"phoneme_index": f.phoneme_index, "inserted_silence": f.inserted_silence}
            for f in result.plan.frames
        ],
        "hops": list(result.hops),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def alignment_from_json(text: str) -> list[WordAlignment]:
    doc = json.loads(text)
    return [
        WordAlignment(
            word_index=w["word_index"],
            start_sample=w["start_sample"],
            end_sample=w["end_sample"],
            stressed_vowel_sample=w.get("stressed_vowel_sample"),
            is_pause=w.get("is_pause", False),
            orthography=w.get("orthography", ""),
        )
        for w in doc["words"]
    ]


def correlate_log_to_json(result: SynthesisResult) -> str:
    doc = [
        {
            "word_index": e.word_index,
            "pre_stress_silence_frames": e.pre_stress_silence_frames,
            "pitch_peak_hz": e.pitch_peak_hz,
            "pitch_low_hz": e.pitch_low_hz,
        }
        for e in result.plan.events
    ]
    return json.dumps(doc, indent=2) + "\n"
