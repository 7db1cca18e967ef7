"""Acoustic measurement: F0 tracking, intensity, silences, per-word reports.

The F0 tracker is normalized-autocorrelation (NCCF) with parabolic peak
interpolation, searching 70-400 Hz on 40 ms windows every 10 ms. Intensity
uses short 5 ms windows so that injected pre-stress silences (a few synthesis
frames long) actually register below the silence threshold; dB values are
relative to full-scale RMS 1.0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .vocoder import Waveform

F0_MIN_HZ = 70.0
F0_MAX_HZ = 400.0
F0_HOP_S = 0.010
F0_WINDOW_S = 0.040
VOICING_THRESHOLD = 0.45
VOICING_ENERGY_GATE_DB = -50.0

INTENSITY_HOP_S = 0.005
INTENSITY_WINDOW_S = 0.005
INTENSITY_FLOOR_DB = -90.0

SILENCE_THRESHOLD_DB = -50.0
SILENCE_MIN_MS = 25.0

# candidate score is NCCF minus this cost per octave of lag, which keeps the
# fundamental ahead of its subharmonics (integer-sample pulse spacing can make
# the double-period lag slightly *more* coherent than the true period)
_OCTAVE_COST = 0.12


@dataclass
class F0Track:
    times_s: np.ndarray
    f0_hz: np.ndarray  # 0 where unvoiced

    def __len__(self) -> int:
        return len(self.times_s)

    @property
    def voiced(self) -> np.ndarray:
        return self.f0_hz > 0


@dataclass
class IntensityTrack:
    values_db: np.ndarray
    hop_s: float = INTENSITY_HOP_S
    window_s: float = INTENSITY_WINDOW_S

    def __len__(self) -> int:
        return len(self.values_db)

    @property
    def times_s(self) -> np.ndarray:
        return np.arange(len(self.values_db)) * self.hop_s + self.window_s / 2


def _frame_signal(x: np.ndarray, window: int, hop: int) -> np.ndarray:
    if len(x) < window:
        return np.empty((0, window))
    n = (len(x) - window) // hop + 1
    idx = np.arange(window)[None, :] + hop * np.arange(n)[:, None]
    return x[idx]


def estimate_f0(w: Waveform) -> F0Track:
    """NCCF pitch track: voiced where peak correlation and energy pass gates."""
    sr = w.sample_rate
    window = int(round(F0_WINDOW_S * sr))
    hop = int(round(F0_HOP_S * sr))
    frames = _frame_signal(np.asarray(w.samples, dtype=np.float64), window, hop)
    n = frames.shape[0]
    if n == 0:
        return F0Track(np.empty(0), np.empty(0))

    lag_min = int(math.floor(sr / F0_MAX_HZ))
    lag_max = int(math.ceil(sr / F0_MIN_HZ))

    frames = frames - frames.mean(axis=1, keepdims=True)
    rms = np.sqrt(np.mean(frames**2, axis=1))

    nfft = 1 << int(np.ceil(np.log2(2 * window)))
    spec = np.fft.rfft(frames, nfft, axis=1)
    corr = np.fft.irfft(spec.real**2 + spec.imag**2, nfft, axis=1)[:, : lag_max + 2]

    energy = np.concatenate(
        [np.zeros((n, 1)), np.cumsum(frames**2, axis=1)], axis=1
    )
    total = energy[:, -1:]
    lags = np.arange(lag_max + 2)
    head = energy[:, window - lags.clip(max=window)]  # sum of x[:W-tau]^2
    tail = total - energy[:, lags.clip(max=window)]  # sum of x[tau:]^2
    nccf = corr / np.sqrt(head * tail + 1e-12)

    f0 = np.zeros(n)
    gate = 10 ** (VOICING_ENERGY_GATE_DB / 20)
    # one extra lag each side so peaks at the range edges stay visible
    search = nccf[:, lag_min - 1 : lag_max + 2]
    peaks = (
        (search[:, 1:-1] > search[:, :-2]) & (search[:, 1:-1] >= search[:, 2:])
    )
    for i in range(n):
        if rms[i] < gate:
            continue
        cand = np.flatnonzero(peaks[i]) + lag_min
        if cand.size == 0:
            continue
        values = nccf[i, cand]
        if values.max() < VOICING_THRESHOLD:
            continue
        scores = values - _OCTAVE_COST * np.log2(cand / lag_min)
        tau = int(cand[np.argmax(scores)])
        r0, r1, r2 = nccf[i, tau - 1], nccf[i, tau], nccf[i, tau + 1]
        denom = r0 - 2 * r1 + r2
        shift = 0.5 * (r0 - r2) / denom if abs(denom) > 1e-12 else 0.0
        tau_hat = tau + float(np.clip(shift, -0.5, 0.5))
        f0[i] = float(np.clip(sr / tau_hat, F0_MIN_HZ, F0_MAX_HZ))

    _drop_octave_outliers(f0)
    times = (np.arange(n) * hop + window / 2) / sr
    return F0Track(times, f0)


def _drop_octave_outliers(f0: np.ndarray, radius: int = 5, rel: float = 0.3) -> None:
    """Unvoice frames far off the local voiced median (silence-edge misreads)."""
    voiced_idx = np.flatnonzero(f0 > 0)
    if voiced_idx.size < 3:
        return
    drop = []
    for pos, i in enumerate(voiced_idx):
        lo, hi = max(0, pos - radius), min(len(voiced_idx), pos + radius + 1)
        neighborhood = f0[voiced_idx[lo:hi]]
        med = float(np.median(neighborhood))
        if med > 0 and abs(f0[i] - med) / med > rel:
            drop.append(i)
    f0[drop] = 0.0


def intensity(w: Waveform) -> IntensityTrack:
    """Per-frame RMS level in dBFS, floored at -90 dB."""
    sr = w.sample_rate
    window = int(round(INTENSITY_WINDOW_S * sr))
    hop = int(round(INTENSITY_HOP_S * sr))
    frames = _frame_signal(np.asarray(w.samples, dtype=np.float64), window, hop)
    if frames.shape[0] == 0:
        return IntensityTrack(np.empty(0))
    rms = np.sqrt(np.mean(frames**2, axis=1))
    floor = 10 ** (INTENSITY_FLOOR_DB / 20)
    db = 20 * np.log10(np.maximum(rms, floor))
    return IntensityTrack(db)


def detect_silences(
    track: IntensityTrack,
    threshold_db: float = SILENCE_THRESHOLD_DB,
    min_ms: float = SILENCE_MIN_MS,
) -> list[tuple[float, float]]:
    """Maximal quiet runs of at least ``min_ms``, as [start_s, end_s) segments."""
    quiet = np.asarray(track.values_db) < threshold_db
    segments = []
    start = None
    for i, q in enumerate(np.concatenate([quiet, [False]])):
        if q and start is None:
            start = i
        elif not q and start is not None:
            if (i - start) * track.hop_s * 1000 >= min_ms:
                segments.append((start * track.hop_s, i * track.hop_s))
            start = None
    return segments


@dataclass(frozen=True)
class WordAlignment:
    """Sample interval of one word plus its stressed-vowel onset."""

    word_index: int
    start_sample: int
    end_sample: int
    stressed_vowel_sample: Optional[int] = None
    is_pause: bool = False
    orthography: str = ""


@dataclass
class WordAcousticReport:
    word_index: int
    duration_ms: float
    f0_mean_hz: Optional[float]
    f0_min_hz: Optional[float]
    f0_max_hz: Optional[float]
    f0_range_hz: Optional[float]
    intensity_mean_db: float
    intensity_max_db: float
    pre_stress_silence_ms: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def word_report(
    w: Waveform,
    alignment: Sequence[WordAlignment],
    f0_track: Optional[F0Track] = None,
    intensity_track: Optional[IntensityTrack] = None,
) -> list[WordAcousticReport]:
    """Aggregate F0/intensity per aligned word; measure pre-stress silence.

    The silence attributed to a word is any detected silence ending within
    50 ms before its stressed-vowel onset (with a small grace after the
    onset, since the vowel's own fade-in smears the detected boundary).
    """
    n_samples = len(w.samples)
    for a in alignment:
        if not (0 <= a.start_sample < a.end_sample <= n_samples):
            raise ValueError(
                f"word {a.word_index}: samples [{a.start_sample}, {a.end_sample}) "
                f"outside waveform of {n_samples}"
            )
    sr = w.sample_rate
    f0_track = f0_track if f0_track is not None else estimate_f0(w)
    intensity_track = (
        intensity_track if intensity_track is not None else intensity(w)
    )
    silences = detect_silences(intensity_track)

    reports = []
    for a in alignment:
        t0, t1 = a.start_sample / sr, a.end_sample / sr
        in_word = (f0_track.times_s >= t0) & (f0_track.times_s < t1)
        voiced = in_word & f0_track.voiced
        if voiced.any():
            vals = f0_track.f0_hz[voiced]
            f0_mean, f0_min, f0_max = (
                float(vals.mean()), float(vals.min()), float(vals.max())
            )
            f0_range: Optional[float] = f0_max - f0_min
        else:
            f0_mean = f0_min = f0_max = f0_range = None

        it = intensity_track.times_s
        in_word_i = (it >= t0) & (it < t1)
        if in_word_i.any():
            ivals = intensity_track.values_db[in_word_i]
            int_mean, int_max = float(ivals.mean()), float(ivals.max())
        else:
            int_mean = int_max = INTENSITY_FLOOR_DB

        silence_ms = 0.0
        if a.stressed_vowel_sample is not None:
            # the silence ending closest to the stressed-vowel onset wins
            onset = a.stressed_vowel_sample / sr
            for seg_start, seg_end in silences:
                if onset - 0.050 <= seg_end <= onset + 0.025:
                    silence_ms = (seg_end - seg_start) * 1000

        reports.append(
            WordAcousticReport(
                word_index=a.word_index,
                duration_ms=(t1 - t0) * 1000,
                f0_mean_hz=f0_mean,
                f0_min_hz=f0_min,
                f0_max_hz=f0_max,
                f0_range_hz=f0_range,
                intensity_mean_db=int_mean,
                intensity_max_db=int_max,
                pre_stress_silence_ms=silence_ms,
            )
        )
    return reports


@dataclass
class IdentificationResult:
    word_index: int
    detected: bool
    scores: list[float]


def _zscores(values: np.ndarray) -> np.ndarray:
    std = values.std()
    if std < 1e-9:
        return np.zeros_like(values)
    return (values - values.mean()) / std


def identify_emphasis(
    reports: Sequence[WordAcousticReport],
    baseline_reports: Sequence[WordAcousticReport],
    content_mask: Optional[Sequence[bool]] = None,
) -> IdentificationResult:
    """Pick the word whose duration/F0-range/silence/intensity deltas stand out.

    Each feature is z-scored across the utterance's content words and the
    four z-scores summed. A uniformly zero score profile is reported as "not
    detected" (the returned index is then just the tie-break).
    """
    if len(reports) != len(baseline_reports):
        raise ValueError(
            f"{len(reports)} reports vs {len(baseline_reports)} baseline reports"
        )
    if not reports:
        raise ValueError("empty report list")
    if content_mask is None:
        content_mask = [True] * len(reports)
    mask = np.asarray(content_mask, dtype=bool)
    if not mask.any():
        raise ValueError("no content words to score")

    def feature(get) -> np.ndarray:
        return np.array(
            [get(r, b) for r, b in zip(reports, baseline_reports)], dtype=np.float64
        )

    dur_ratio = feature(lambda r, b: r.duration_ms / b.duration_ms)
    f0_delta = feature(
        lambda r, b: (r.f0_range_hz or 0.0) - (b.f0_range_hz or 0.0)
    )
    sil_delta = feature(
        lambda r, b: r.pre_stress_silence_ms - b.pre_stress_silence_ms
    )
    int_delta = feature(lambda r, b: r.intensity_max_db - b.intensity_max_db)

    scores = np.zeros(len(reports))
    for values in (dur_ratio, f0_delta, sil_delta, int_delta):
        z = np.zeros(len(reports))
        z[mask] = _zscores(values[mask])
        scores += z

    masked = np.where(mask, scores, -np.inf)
    winner = int(np.argmax(masked))
    detected = bool(np.max(masked) > 1e-9)
    return IdentificationResult(winner, detected, [float(s) for s in scores])


def reports_to_json(reports: Sequence[WordAcousticReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2) + "\n"
