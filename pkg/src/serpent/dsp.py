"""Frame-based signal analysis: STFT, mel filterbank, MFCC, ZCR, RMS.

All analysis is un-padded: a clip shorter than one frame raises ClipTooShort,
and num_frames = 1 + floor((n - frame_len) / hop_len).  The 22-value feature
vector is [zcr_mean, rms_mean, mfcc_mean[0..19]], the per-frame features
mean-pooled over frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from serpent.audio_io import AudioClip
from serpent.errors import ClipTooShort, InvalidBand

FEATURE_LEN = 22
LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class FrameConfig:
    """Analysis framing: frame_len must be a power of two, 0 < hop <= frame."""

    frame_len: int = 2048
    hop_len: int = 512
    window: str = "hann"

    def __post_init__(self):
        if self.frame_len <= 0 or self.frame_len & (self.frame_len - 1):
            raise ValueError("frame_len must be a positive power of two")
        if not 0 < self.hop_len <= self.frame_len:
            raise ValueError("hop_len must satisfy 0 < hop_len <= frame_len")
        if self.window not in ("hann", "rectangular"):
            raise ValueError(f"unknown window {self.window!r}")


@dataclass(frozen=True)
class Spectrogram:
    bins: np.ndarray  # complex, (num_frames, frame_len//2 + 1)
    frame_config: FrameConfig
    sample_rate_hz: int


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray  # (n_mels, frame_len//2 + 1), non-negative triangles
    n_mels: int
    f_min_hz: float
    f_max_hz: float
    center_freqs_hz: np.ndarray


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window (exact overlap-add at hop = n/4)."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


@lru_cache(maxsize=None)
def _window(frame_len: int, kind: str) -> np.ndarray:
    w = hann_window(frame_len) if kind == "hann" else np.ones(frame_len)
    w.flags.writeable = False
    return w


def frame_signal(samples: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Strided (num_frames, frame_len) view of the signal; no padding."""
    if len(samples) < cfg.frame_len:
        raise ClipTooShort(
            f"need at least {cfg.frame_len} samples, got {len(samples)}"
        )
    return sliding_window_view(samples, cfg.frame_len)[:: cfg.hop_len]


def zcr(clip: AudioClip, cfg: FrameConfig) -> np.ndarray:
    """Per-frame rate of adjacent-sample sign changes; sign(0) counts as positive."""
    frames = frame_signal(clip.samples, cfg)
    nonneg = frames >= 0.0
    crossings = np.count_nonzero(nonneg[:, 1:] != nonneg[:, :-1], axis=1)
    return crossings / cfg.frame_len


def rms(clip: AudioClip, cfg: FrameConfig) -> np.ndarray:
    """Per-frame root of the mean squared amplitude."""
    frames = frame_signal(clip.samples, cfg)
    return np.sqrt(np.mean(frames * frames, axis=1))


def stft(clip: AudioClip, cfg: FrameConfig) -> Spectrogram:
    """Windowed FFT per frame, keeping the non-negative frequency bins."""
    frames = frame_signal(clip.samples, cfg)
    bins = np.fft.rfft(frames * _window(cfg.frame_len, cfg.window), axis=1)
    return Spectrogram(bins, cfg, clip.sample_rate_hz)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=None)
def _cached_filterbank(n_mels, frame_len, sample_rate_hz, f_min, f_max):
    nyquist = sample_rate_hz / 2.0
    if not (0.0 <= f_min < f_max <= nyquist):
        raise InvalidBand(f"need 0 <= f_min < f_max <= {nyquist}, got [{f_min}, {f_max}]")
    if n_mels < 1:
        raise InvalidBand("n_mels must be >= 1")

    mel_pts = np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    bin_freqs = np.arange(frame_len // 2 + 1) * (sample_rate_hz / frame_len)

    weights = np.zeros((n_mels, frame_len // 2 + 1))
    for m in range(n_mels):
        lo, mid, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        rising = (bin_freqs - lo) / (mid - lo)
        falling = (hi - bin_freqs) / (hi - mid)
        weights[m] = np.maximum(0.0, np.minimum(rising, falling))

    if not np.all(weights.max(axis=1) > 0.0):
        raise InvalidBand("a mel filter covers no FFT bin; widen the band or lower n_mels")
    weights.flags.writeable = False
    centers = hz_pts[1:-1].copy()
    centers.flags.writeable = False
    return MelFilterbank(weights, n_mels, f_min, f_max, centers)


def mel_filterbank(
    n_mels: int,
    cfg: FrameConfig,
    sample_rate_hz: int,
    f_min_hz: float = 0.0,
    f_max_hz: float | None = None,
) -> MelFilterbank:
    """Triangular filters equally spaced on the mel scale, each peaking at 1."""
    if f_max_hz is None:
        f_max_hz = sample_rate_hz / 2.0
    return _cached_filterbank(n_mels, cfg.frame_len, sample_rate_hz, float(f_min_hz), float(f_max_hz))


@lru_cache(maxsize=None)
def _dct_ii_matrix(n: int) -> np.ndarray:
    # orthonormal DCT-II: D[k, m] = s_k * cos(pi * k * (2m + 1) / (2n))
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    d = np.cos(np.pi * k * (2 * m + 1) / (2 * n))
    d[0] *= np.sqrt(1.0 / n)
    d[1:] *= np.sqrt(2.0 / n)
    d.flags.writeable = False
    return d


def mfcc(
    clip: AudioClip,
    cfg: FrameConfig,
    n_mels: int = 40,
    n_mfcc: int = 20,
) -> np.ndarray:
    """Per-frame mel cepstra: |STFT|^2 -> mel bands -> log -> orthonormal DCT-II.

    Returns a (num_frames, n_mfcc) matrix.
    """
    spec = stft(clip, cfg)
    power = np.abs(spec.bins) ** 2
    fb = mel_filterbank(n_mels, cfg, clip.sample_rate_hz)
    mel_power = power @ fb.weights.T
    log_mel = np.log(mel_power + LOG_FLOOR)
    return log_mel @ _dct_ii_matrix(n_mels)[:n_mfcc].T


def extract_features(
    clip: AudioClip,
    cfg: FrameConfig | None = None,
    n_mels: int = 40,
    n_mfcc: int = 20,
) -> np.ndarray:
    """22-value descriptor: [mean ZCR, mean RMS, 20 mean MFCC coefficients]."""
    if cfg is None:
        cfg = FrameConfig()
    vec = np.concatenate(
        [
            [np.mean(zcr(clip, cfg))],
            [np.mean(rms(clip, cfg))],
            np.mean(mfcc(clip, cfg, n_mels=n_mels, n_mfcc=n_mfcc), axis=0),
        ]
    )
    assert vec.shape == (2 + n_mfcc,)
    return vec
