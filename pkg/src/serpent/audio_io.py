"""Decode, encode, resample, and crop audio into canonical mono clips.

Reader accepts RIFF/WAVE containers holding PCM-16/24/32 or IEEE float-32
samples, mono or stereo.  The writer emits PCM-16 mono little-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from serpent.errors import EmptyAudio, MalformedContainer, OffsetPastEnd, UnsupportedEncoding


@dataclass(frozen=True)
class AudioClip:
    """Mono sample buffer in [-1, 1] plus its sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if samples.size and np.max(np.abs(samples)) > 1.0 + 1e-9:
            raise ValueError("samples must lie in [-1, 1]")
        object.__setattr__(self, "samples", np.clip(samples, -1.0, 1.0))

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def __len__(self) -> int:
        return len(self.samples)


_PCM_SCALE = {16: 32768.0, 24: 8388608.0, 32: 2147483648.0}


def _parse_fmt(body: bytes) -> tuple[int, int, int, int]:
    if len(body) < 16:
        raise MalformedContainer("fmt chunk shorter than 16 bytes")
    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = struct.unpack_from(
        "<HHIIHH", body, 0
    )
    return audio_format, channels, sample_rate, bits


def decode_wav(data: bytes) -> AudioClip:
    """Decode a RIFF/WAVE byte string into a mono clip.

    Integer formats are scaled to [-1, 1] by the type's max magnitude;
    stereo is averaged to mono sample-wise.
    """
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedContainer("not a RIFF/WAVE container")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise MalformedContainer(f"chunk {chunk_id!r} extends past end of file")
        if chunk_id == b"fmt ":
            fmt = _parse_fmt(body)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None:
        raise MalformedContainer("missing fmt chunk")
    if payload is None:
        raise MalformedContainer("missing data chunk")

    audio_format, channels, sample_rate, bits = fmt
    if sample_rate == 0:
        raise MalformedContainer("sample rate is zero")
    if audio_format == 1:
        if bits not in (16, 24, 32):
            raise UnsupportedEncoding(f"PCM-{bits} is not supported")
    elif audio_format == 3:
        if bits != 32:
            raise UnsupportedEncoding(f"IEEE float-{bits} is not supported")
    else:
        raise UnsupportedEncoding(f"audio format tag {audio_format:#x} is not supported")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels not supported")

    bytes_per_frame = channels * bits // 8
    n_frames = len(payload) // bytes_per_frame
    if n_frames == 0:
        raise EmptyAudio("data chunk holds no complete frames")
    payload = payload[: n_frames * bytes_per_frame]

    if audio_format == 3:
        values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        values = np.clip(values, -1.0, 1.0)
    elif bits == 16:
        values = np.frombuffer(payload, dtype="<i2").astype(np.float64) / _PCM_SCALE[16]
    elif bits == 32:
        values = np.frombuffer(payload, dtype="<i4").astype(np.float64) / _PCM_SCALE[32]
    else:  # 24-bit: sign-extend 3-byte little-endian words
        raw = np.frombuffer(payload, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        ints = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        ints = np.where(ints & 0x800000, ints - (1 << 24), ints)
        values = ints.astype(np.float64) / _PCM_SCALE[24]

    if channels == 2:
        values = values.reshape(-1, 2).mean(axis=1)
    return AudioClip(values, int(sample_rate))


def encode_wav(clip: AudioClip) -> bytes:
    """Encode a clip as PCM-16 mono little-endian WAV bytes."""
    q = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    payload = q.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, 1, 1, clip.sample_rate_hz, clip.sample_rate_hz * 2, 2, 16
    )
    header += b"data" + struct.pack("<I", len(payload))
    return header + payload


def linear_interp(samples: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Linear interpolation of a 1-D signal at fractional sample positions.

    Positions are clamped to [0, len-1], so reads past either end repeat the
    edge sample.
    """
    n = len(samples)
    p = np.clip(positions, 0.0, n - 1.0)
    idx = np.floor(p).astype(np.int64)
    idx_hi = np.minimum(idx + 1, n - 1)
    frac = p - idx
    return (1.0 - frac) * samples[idx] + frac * samples[idx_hi]


def resample(clip: AudioClip, target_rate_hz: int) -> AudioClip:
    """Resample by linear interpolation; output length = round(n*target/source)."""
    if target_rate_hz <= 0:
        raise ValueError("target_rate_hz must be positive")
    if target_rate_hz == clip.sample_rate_hz:
        return AudioClip(clip.samples, clip.sample_rate_hz)
    n_out = int(round(len(clip.samples) * target_rate_hz / clip.sample_rate_hz))
    positions = np.arange(n_out, dtype=np.float64) * (clip.sample_rate_hz / target_rate_hz)
    out = linear_interp(clip.samples, positions)
    return AudioClip(np.clip(out, -1.0, 1.0), target_rate_hz)


def crop(
    clip: AudioClip,
    offset_s: float,
    duration_s: float,
    pad_to_duration: bool = False,
) -> AudioClip:
    """Samples in [offset_s, offset_s + duration_s), optionally zero-padded.

    Default pipeline values are offset 0.6 s, duration 2.5 s.
    """
    if offset_s < 0:
        raise ValueError("offset_s must be >= 0")
    if duration_s <= 0:
        raise ValueError("duration_s must be > 0")
    rate = clip.sample_rate_hz
    start = int(round(offset_s * rate))
    count = int(round(duration_s * rate))
    if start >= len(clip.samples):
        if not pad_to_duration:
            raise OffsetPastEnd(
                f"offset {offset_s}s is past clip end ({clip.duration_seconds:.3f}s)"
            )
        return AudioClip(np.zeros(count), rate)
    piece = clip.samples[start : start + count]
    if pad_to_duration and len(piece) < count:
        piece = np.concatenate([piece, np.zeros(count - len(piece))])
    return AudioClip(piece, rate)
