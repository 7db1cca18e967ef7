"""Mono 16-bit PCM RIFF/WAV reading and writing at 24 kHz.

Float samples are converted with round-half-away-from-zero and saturation,
so identical float inputs always produce identical files.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from .vocoder import Waveform


def float_to_pcm16(samples: np.ndarray) -> np.ndarray:
    v = np.asarray(samples, dtype=np.float64) * 32767.0
    rounded = np.where(v >= 0, np.floor(v + 0.5), np.ceil(v - 0.5))
    return np.clip(rounded, -32768, 32767).astype("<i2")


def pcm16_to_float(pcm: np.ndarray) -> np.ndarray:
    return np.asarray(pcm, dtype=np.float64) / 32767.0


def write_wav(path: str | Path, waveform: Waveform) -> None:
    pcm = float_to_pcm16(waveform.samples)
    with wave.open(str(path), "wb") as fp:
        fp.setnchannels(1)
        fp.setsampwidth(2)
        fp.setframerate(waveform.sample_rate)
        fp.writeframes(pcm.tobytes())


def read_wav(path: str | Path) -> Waveform:
    with wave.open(str(path), "rb") as fp:
        if fp.getnchannels() != 1 or fp.getsampwidth() != 2:
            raise ValueError(f"{path}: expected mono 16-bit PCM")
        rate = fp.getframerate()
        raw = fp.readframes(fp.getnframes())
    pcm = np.frombuffer(raw, dtype="<i2")
    return Waveform(pcm16_to_float(pcm), sample_rate=rate)
