"""Audio augmentation: noise injection, time shift, phase-vocoder stretch,
pitch shift, and the three-variant dataset expansion policy.

Every random draw comes from a SplitMix64 stream keyed by (rng_seed,
stream_id), so augmentation is bit-reproducible and clips can be processed
in parallel with per-clip stream ids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from serpent.audio_io import AudioClip, linear_interp
from serpent.dsp import hann_window
from serpent.errors import RateOutOfRange, SemitonesOutOfRange
from serpent.rng import SplitMix64

_PV_FRAME = 2048
_PV_HOP = 512

_NOISE_TAG = 0x4E
_SHIFT_TAG = 0x53


@dataclass(frozen=True)
class AugmentConfig:
    noise_coeff: float = 0.035
    shift_fraction: float = 0.05
    stretch_rate: float = 0.8
    pitch_semitones: float = 2.0
    rng_seed: int = 42

    def __post_init__(self):
        if self.noise_coeff < 0:
            raise ValueError("noise_coeff must be >= 0")
        if not 0.0 <= self.shift_fraction <= 1.0:
            raise ValueError("shift_fraction must be in [0, 1]")
        if self.stretch_rate <= 0:
            raise ValueError("stretch_rate must be > 0")


def _op_rng(cfg: AugmentConfig, tag: int, stream_id: int) -> SplitMix64:
    return SplitMix64(cfg.rng_seed, stream=(stream_id << 8) ^ tag)


def add_noise(clip: AudioClip, cfg: AugmentConfig, stream_id: int = 0) -> AudioClip:
    """Add Gaussian noise with amplitude noise_coeff * U(0,1) * max|x|."""
    if len(clip) == 0:
        raise ValueError("clip is empty")
    rng = _op_rng(cfg, _NOISE_TAG, stream_id)
    u = rng.random()
    amplitude = cfg.noise_coeff * u * np.max(np.abs(clip.samples))
    if amplitude == 0.0:
        return AudioClip(clip.samples, clip.sample_rate_hz)
    noise = rng.normals(len(clip))
    out = np.clip(clip.samples + amplitude * noise, -1.0, 1.0)
    return AudioClip(out, clip.sample_rate_hz)


def _shift_by(samples: np.ndarray, k: int) -> np.ndarray:
    """Shift by k samples: positive delays (zeros in front), negative advances."""
    n = len(samples)
    if k == 0:
        return samples.copy()
    if k > 0:
        return np.concatenate([np.zeros(min(k, n)), samples[: max(n - k, 0)]])
    k = -k
    return np.concatenate([samples[min(k, n) :], np.zeros(min(k, n))])


def time_shift(clip: AudioClip, cfg: AugmentConfig, stream_id: int = 0) -> AudioClip:
    """Shift left or right by a random integer number of samples, length kept."""
    if len(clip) == 0:
        raise ValueError("clip is empty")
    rng = _op_rng(cfg, _SHIFT_TAG, stream_id)
    max_shift = int(round(cfg.shift_fraction * len(clip)))
    k = rng.randbelow(2 * max_shift + 1) - max_shift
    return AudioClip(_shift_by(clip.samples, k), clip.sample_rate_hz)


def time_stretch(clip: AudioClip, rate: float) -> AudioClip:
    """Phase-vocoder time stretch; output length = round(n/rate), pitch kept.

    Analysis uses a 2048/512 periodic-Hann STFT with the signal centered and
    tail-padded, so the synthesis always covers round(n/rate) samples.
    """
    if not 0.25 <= rate <= 4.0:
        raise RateOutOfRange(f"rate {rate} outside [0.25, 4.0]")
    x = clip.samples
    n = len(x)
    if n == 0:
        raise ValueError("clip is empty")
    target = int(round(n / rate))

    frame, hop = _PV_FRAME, _PV_HOP
    half = frame // 2
    padded = np.concatenate([np.zeros(half), x, np.zeros(half + frame)])
    frames = sliding_window_view(padded, frame)[::hop]
    win = hann_window(frame)
    spec = np.fft.rfft(frames * win, axis=1)
    mag = np.abs(spec)
    phase = np.angle(spec)

    n_frames = len(frames)
    omega = 2.0 * np.pi * np.arange(frame // 2 + 1) * hop / frame
    n_syn = int(np.floor((n_frames - 2) / rate)) + 1

    acc = phase[0].copy()
    out_spec = np.empty((n_syn, frame // 2 + 1), dtype=np.complex128)
    for j in range(n_syn):
        t = j * rate
        i = int(t)
        frac = t - i
        m = (1.0 - frac) * mag[i] + frac * mag[i + 1]
        out_spec[j] = m * np.exp(1j * acc)
        dphi = phase[i + 1] - phase[i] - omega
        dphi -= 2.0 * np.pi * np.round(dphi / (2.0 * np.pi))
        acc = acc + omega + dphi

    chunks = np.fft.irfft(out_spec, n=frame, axis=1) * win
    out_len = (n_syn - 1) * hop + frame
    y = np.zeros(out_len)
    wsum = np.zeros(out_len)
    for j in range(n_syn):
        y[j * hop : j * hop + frame] += chunks[j]
        wsum[j * hop : j * hop + frame] += win * win
    y /= np.maximum(wsum, 1e-8)

    core = y[half : half + target]
    if len(core) < target:
        core = np.concatenate([core, np.zeros(target - len(core))])
    return AudioClip(np.clip(core, -1.0, 1.0), clip.sample_rate_hz)


def pitch_shift(clip: AudioClip, semitones: float) -> AudioClip:
    """Shift pitch by 2^(semitones/12): stretch then speed-change back.

    Output has exactly the input length and sample rate.
    """
    if abs(semitones) > 12.0:
        raise SemitonesOutOfRange(f"|semitones| must be <= 12, got {semitones}")
    n = len(clip)
    if n == 0:
        raise ValueError("clip is empty")
    factor = 2.0 ** (semitones / 12.0)
    stretched = time_stretch(clip, 1.0 / factor)
    positions = np.arange(n, dtype=np.float64) * factor
    out = linear_interp(stretched.samples, positions)
    return AudioClip(np.clip(out, -1.0, 1.0), clip.sample_rate_hz)


def augment_set(clip: AudioClip, cfg: AugmentConfig, stream_id: int = 0) -> list[AudioClip]:
    """Expansion policy: [original, noised, pitch-shifted] - 3 rows per clip."""
    if len(clip) == 0:
        raise ValueError("clip is empty")
    return [
        AudioClip(clip.samples, clip.sample_rate_hz),
        add_noise(clip, cfg, stream_id),
        pitch_shift(clip, cfg.pitch_semitones),
    ]
