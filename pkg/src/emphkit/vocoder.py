"""Excitation-plus-envelope overlap-add vocoder.

Each mel frame produces ``hop`` output samples at 24 kHz (nominally 300 per
frame, i.e. 80 frames/s). Voiced frames drive a phase-continuous pulse train
at the frame's F0, unvoiced frames seeded white noise; both are shaped by a
linear-phase FIR built from the frame's mel envelope and overlap-added under
a raised-cosine window of twice the hop. Emphasis-by-timing works purely by
enlarging the hop of the target frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.signal import fftconvolve

from .acoustics import (
    MEL_BIN_CENTERS,
    SAMPLE_RATE,
    MelSpectrogram,
    apply_mel_emph_gain,
    frames_for_word,
    hz_to_mel,
)
from .duration import DurationSequence
from .phonology import Utterance

NOMINAL_HOP = 300
FIR_LENGTH = 1200  # 50 ms at 24 kHz, matching the analysis window of a frame
DEFAULT_NOISE_SEED = 1234

DEFAULT_V_MEL = 1.15
DEFAULT_ALPHA_MEL = 1.25

_PULSE_GAIN = 0.6
_PULSE_HALF_WIDTH = 4  # samples; click energy rolls off well below Nyquist
_NOISE_GAIN = 0.12
_PEAK_NORM_TARGET = 0.89


class FrameHops:
    """Per-frame output sample counts (the frame-to-waveform upsampling)."""

    __slots__ = ("hops",)

    def __init__(self, hops: Iterable[int]):
        hops = tuple(int(h) for h in hops)
        for i, h in enumerate(hops):
            if h < 1:
                raise ValueError(f"hop {h} < 1 at frame {i}")
        self.hops = hops

    def __len__(self) -> int:
        return len(self.hops)

    def __iter__(self):
        return iter(self.hops)

    def __getitem__(self, i):
        return self.hops[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, FrameHops) and self.hops == other.hops

    @property
    def total_samples(self) -> int:
        return sum(self.hops)


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    peak_normalized: bool = False

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


def make_hops(
    n_frames: int,
    emphasized_range: Optional[tuple[int, int]] = None,
    alpha_mel: float = 1.0,
) -> FrameHops:
    """Nominal hops of 300, enlarged to ``ceil(300 * alpha_mel)`` in the range."""
    if not (1.0 <= alpha_mel <= 1.5):
        raise ValueError(f"alpha_mel {alpha_mel} outside [1.0, 1.5]")
    hops = np.full(n_frames, NOMINAL_HOP, dtype=int)
    if emphasized_range is not None:
        lo, hi = emphasized_range
        if not (0 <= lo <= hi <= n_frames):
            raise ValueError(f"range [{lo}, {hi}) outside 0..{n_frames}")
        hops[lo:hi] = int(np.ceil(NOMINAL_HOP * alpha_mel))
    return FrameHops(hops)


def _envelope_to_fir(row: np.ndarray) -> np.ndarray:
    """Map an 80-bin mel envelope to a windowed linear-phase FIR."""
    freqs = np.fft.rfftfreq(FIR_LENGTH, d=1.0 / SAMPLE_RATE)
    response = np.interp(hz_to_mel(freqs), MEL_BIN_CENTERS, row.astype(np.float64))
    h = np.fft.irfft(response, n=FIR_LENGTH)
    h = np.roll(h, FIR_LENGTH // 2)
    return h * np.hanning(FIR_LENGTH)


def _excitation(
    f0_per_frame: np.ndarray,
    active_per_frame: np.ndarray,
    offsets: np.ndarray,
    length: int,
    seed: int,
) -> np.ndarray:
    """Phase-continuous pulse train on voiced spans, seeded noise elsewhere.

    Frames whose mel row is all-zero contribute no excitation at all, so
    inserted silences stay acoustically silent apart from window tails.
    """
    n = len(f0_per_frame)
    f0 = np.zeros(length)
    active = np.zeros(length, dtype=bool)
    for i in range(n):
        lo = offsets[i]
        hi = offsets[i + 1] if i + 1 < n else length  # last frame owns the tail
        f0[lo:hi] = f0_per_frame[i]
        active[lo:hi] = active_per_frame[i]

    exc = np.zeros(length)
    noise = np.random.default_rng(seed).standard_normal(length) * _NOISE_GAIN
    unvoiced = active & (f0 <= 0)
    exc[unvoiced] = noise[unvoiced]

    rate = np.where(active & (f0 > 0), f0 / SAMPLE_RATE, 0.0)
    phase = (1.0 - 2.0 ** -20) + np.cumsum(rate)
    floors = np.floor(phase)
    crossed = np.empty_like(floors)
    crossed[0] = floors[0]
    crossed[1:] = np.diff(floors)
    pulses = np.flatnonzero((crossed >= 1.0) & (rate > 0))
    # render each glottal pulse as a short raised-cosine click evaluated at
    # its exact (fractional) phase-crossing position; integer-sample impulses
    # would alternate period lengths and decorrelate the fundamental under
    # high-frequency envelopes
    frac = np.clip((phase[pulses] - floors[pulses]) / rate[pulses], 0.0, 1.0)
    for k in range(-_PULSE_HALF_WIDTH, _PULSE_HALF_WIDTH + 1):
        t = k + frac  # sample offset from the crossing position
        weight = np.where(
            np.abs(t) <= _PULSE_HALF_WIDTH,
            0.5 + 0.5 * np.cos(np.pi * t / _PULSE_HALF_WIDTH),
            0.0,
        )
        idx = pulses + k
        ok = (idx >= 0) & (idx < length)
        np.add.at(exc, idx[ok], weight[ok] * _PULSE_GAIN)
    return exc


def vocode(
    mel: MelSpectrogram, hops: FrameHops, seed: int = DEFAULT_NOISE_SEED
) -> Waveform:
    """Overlap-add synthesis of a mel spectrogram into a 24 kHz waveform.

    Output length is the hop total plus one nominal hop of window tail.
    Peak normalization to 0.89 is applied only if the raw output clips.
    """
    n = mel.n_frames
    if len(hops) != n:
        raise ValueError(f"{len(hops)} hops for {n} mel frames")
    if n == 0:
        return Waveform(np.zeros(0))

    offsets = np.concatenate(([0], np.cumsum(hops.hops)))
    total = int(offsets[-1])
    length = total + NOMINAL_HOP

    magnitudes = mel.magnitudes.astype(np.float64)
    active = magnitudes.any(axis=1)
    exc = _excitation(
        mel.f0_track.astype(np.float64), active, offsets[:-1], length, seed
    )

    out = np.zeros(length)
    fir_cache: dict[bytes, np.ndarray] = {}
    delay = FIR_LENGTH // 2
    for i in range(n):
        if not active[i]:
            continue
        row = magnitudes[i]
        key = row.tobytes()
        h = fir_cache.get(key)
        if h is None:
            h = _envelope_to_fir(row)
            fir_cache[key] = h
        hop = hops[i]
        start = int(offsets[i])
        span = min(2 * hop, length - start)
        seg = np.zeros(2 * hop)
        seg[:span] = exc[start : start + span]
        shaped = fftconvolve(seg, h)[delay : delay + 2 * hop]
        window = 0.5 - 0.5 * np.cos(np.pi * np.arange(2 * hop) / hop)
        out[start : start + span] += (shaped * window)[:span]

    peak = float(np.max(np.abs(out))) if length else 0.0
    normalized = False
    if peak > 1.0:
        out *= _PEAK_NORM_TARGET / peak
        normalized = True
    return Waveform(out, peak_normalized=normalized)


def mel_emph(
    mel: MelSpectrogram,
    utt: Utterance,
    durations: DurationSequence,
    word_index: Optional[int],
    v_mel: float = DEFAULT_V_MEL,
    alpha_mel: float = DEFAULT_ALPHA_MEL,
    seed: int = DEFAULT_NOISE_SEED,
) -> Waveform:
    """Emphasize one word by mel gain + hop stretching, then vocode.

    ``word_index`` of None degenerates to the plain rendering. The mel must
    be on the plain duration grid (no injected silence frames).
    """
    if word_index is None:
        return vocode(mel, make_hops(mel.n_frames), seed=seed)
    if mel.n_frames != durations.total_frames:
        raise ValueError(
            f"mel has {mel.n_frames} frames but durations sum to "
            f"{durations.total_frames}; emphasis range would be misaligned"
        )
    frame_range = frames_for_word(utt, durations, word_index)
    boosted = apply_mel_emph_gain(mel, frame_range, v_mel)
    hops = make_hops(mel.n_frames, frame_range, alpha_mel)
    return vocode(boosted, hops, seed=seed)
