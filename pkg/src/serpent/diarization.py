"""Three-stage speaker diarization: energy VAD over a short sliding window,
per-segment MFCC-statistics embeddings, and average-linkage agglomerative
clustering on cosine distance.  Results serialize to RTTM, scored by DER.

The embedding is deliberately statistical (per-coefficient mean and standard
deviation of the segment's MFCC frames) rather than a learned speaker model;
it keeps the pipeline self-contained at the cost of speaker-discrimination
power on hard material.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from serpent.audio_io import AudioClip
from serpent.dsp import FrameConfig, mfcc
from serpent.errors import ClipTooShort, EmptyReference, MalformedRttm, SegmentTooShort


@dataclass(frozen=True)
class Segment:
    start_s: float
    end_s: float
    speaker: str

    def __post_init__(self):
        if self.start_s < 0 or self.end_s <= self.start_s:
            raise ValueError(f"invalid segment [{self.start_s}, {self.end_s})")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def vad_segments(
    clip: AudioClip,
    window_s: float = 0.03,
    min_speech_s: float = 0.25,
    min_gap_s: float = 0.20,
    energy_percentile: float = 30.0,
) -> list[tuple[float, float]]:
    """Speech spans from frame RMS against a percentile threshold.

    Frames at or above max(percentile RMS, 1e-4) are speech; gaps shorter
    than min_gap_s are bridged, spans shorter than min_speech_s dropped.
    """
    win = int(round(window_s * clip.sample_rate_hz))
    n = len(clip.samples)
    if n < win or win < 1:
        raise ClipTooShort(f"clip shorter than one {window_s}s window")
    n_frames = n // win
    frames = clip.samples[: n_frames * win].reshape(n_frames, win)
    energy = np.sqrt(np.mean(frames * frames, axis=1))
    threshold = max(float(np.percentile(energy, energy_percentile)), 1e-4)
    speech = energy >= threshold

    spans = []
    start = None
    for i, flag in enumerate(speech):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            spans.append((start * window_s, i * window_s))
            start = None
    if start is not None:
        spans.append((start * window_s, n_frames * window_s))

    merged = []
    for span in spans:
        if merged and span[0] - merged[-1][1] < min_gap_s:
            merged[-1] = (merged[-1][0], span[1])
        else:
            merged.append(span)
    return [s for s in merged if s[1] - s[0] >= min_speech_s]


def segment_embedding(
    clip: AudioClip,
    segment: tuple[float, float],
    cfg: FrameConfig | None = None,
    n_mfcc: int = 20,
) -> np.ndarray:
    """40-value embedding: per-coefficient MFCC mean ++ standard deviation.

    Short segments are zero-padded up to the two frames the statistics need.
    """
    if cfg is None:
        cfg = FrameConfig()
    start, end = segment
    rate = clip.sample_rate_hz
    samples = clip.samples[int(round(start * rate)) : int(round(end * rate))]
    if samples.size == 0:
        raise SegmentTooShort(f"segment [{start}, {end}) holds no samples")
    need = cfg.frame_len + cfg.hop_len
    if len(samples) < need:
        samples = np.concatenate([samples, np.zeros(need - len(samples))])
    coeffs = mfcc(AudioClip(samples, rate), cfg, n_mfcc=n_mfcc)
    return np.concatenate([coeffs.mean(axis=0), coeffs.std(axis=0)])


def _cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0.0:
        return 1.0
    return 1.0 - float(a @ b) / denom


def agglomerative_cluster(
    embeddings: list[np.ndarray],
    num_speakers: int | None = None,
    threshold: float = 0.35,
) -> list[str]:
    """Average-linkage clustering on cosine distance.

    Stops at num_speakers clusters when given, otherwise when the smallest
    inter-cluster distance exceeds the threshold.  Labels are SPEAKER_00,
    SPEAKER_01, ... in order of first appearance.
    """
    n = len(embeddings)
    if n == 0:
        raise ValueError("need at least one embedding")
    point_dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            point_dist[i, j] = point_dist[j, i] = _cosine_distance(embeddings[i], embeddings[j])

    clusters: list[list[int]] = [[i] for i in range(n)]
    target = max(1, num_speakers) if num_speakers is not None else 1
    while len(clusters) > target:
        best = None  # (distance, i, j)
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                d = float(
                    np.mean([point_dist[a, b] for a in clusters[i] for b in clusters[j]])
                )
                if best is None or d < best[0]:
                    best = (d, i, j)
        if num_speakers is None and best[0] > threshold:
            break
        _, i, j = best
        clusters[i] = clusters[i] + clusters[j]
        del clusters[j]

    labels = [""] * n
    order = sorted(clusters, key=min)
    for rank, members in enumerate(order):
        for m in members:
            labels[m] = f"SPEAKER_{rank:02d}"
    return labels


def diarize(
    clip: AudioClip,
    num_speakers: int | None = None,
    threshold: float = 0.35,
    window_s: float = 0.03,
    min_speech_s: float = 0.25,
    min_gap_s: float = 0.20,
) -> list[Segment]:
    """VAD -> embed -> cluster; same-speaker spans closer than min_gap_s merge."""
    spans = vad_segments(clip, window_s, min_speech_s, min_gap_s)
    if not spans:
        return []
    embeddings = [segment_embedding(clip, span) for span in spans]
    labels = agglomerative_cluster(embeddings, num_speakers, threshold)
    segments = [Segment(s, e, label) for (s, e), label in zip(spans, labels)]
    segments.sort(key=lambda seg: seg.start_s)
    merged: list[Segment] = []
    for seg in segments:
        if (
            merged
            and merged[-1].speaker == seg.speaker
            and seg.start_s - merged[-1].end_s < min_gap_s
        ):
            merged[-1] = Segment(merged[-1].start_s, seg.end_s, seg.speaker)
        else:
            merged.append(seg)
    return merged


def write_rttm(file_id: str, segments: list[Segment]) -> str:
    """One `SPEAKER <file> 1 <start> <dur> <NA> <NA> <label> <NA> <NA>` line each."""
    lines = [
        f"SPEAKER {file_id} 1 {seg.start_s:.3f} {seg.duration_s:.3f}"
        f" <NA> <NA> {seg.speaker} <NA> <NA>"
        for seg in segments
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_rttm(text: str) -> list[Segment]:
    """Inverse of write_rttm; tolerates blank lines, rejects malformed ones."""
    segments = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 10:
            raise MalformedRttm(f"line {lineno}: expected 10 fields, got {len(fields)}")
        if fields[0] != "SPEAKER":
            raise MalformedRttm(f"line {lineno}: expected SPEAKER record, got {fields[0]!r}")
        try:
            start = float(fields[3])
            dur = float(fields[4])
        except ValueError:
            raise MalformedRttm(f"line {lineno}: bad start/duration") from None
        if start < 0 or dur <= 0:
            raise MalformedRttm(f"line {lineno}: negative or zero duration span")
        segments.append(Segment(start, start + dur, fields[7]))
    return segments


def _scored_intervals(reference: list[Segment], collar_s: float, horizon: float):
    """Elementary-interval complement of the collars around reference bounds."""
    collars = []
    for seg in reference:
        for t in (seg.start_s, seg.end_s):
            collars.append((max(0.0, t - collar_s), t + collar_s))
    collars.sort()
    merged = []
    for c in collars:
        if merged and c[0] <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], c[1]))
        else:
            merged.append(c)
    scored = []
    cursor = 0.0
    for lo, hi in merged:
        if lo > cursor:
            scored.append((cursor, lo))
        cursor = max(cursor, hi)
    if cursor < horizon:
        scored.append((cursor, horizon))
    return scored


def der(reference: list[Segment], hypothesis: list[Segment], collar_s: float = 0.25) -> float:
    """Diarization error rate with optimal speaker mapping.

    (missed + false alarm + confusion time) / reference speech time, both
    measured outside a +-collar_s zone around every reference boundary.
    Speaker mapping is chosen by exhaustive search (intended for <= 6
    speakers a side).
    """
    if not reference:
        raise EmptyReference("reference has no segments")
    horizon = max(
        [seg.end_s for seg in reference] + [seg.end_s for seg in hypothesis] + [0.0]
    ) + collar_s
    scored = _scored_intervals(reference, collar_s, horizon)

    bounds = sorted(
        {t for seg in reference for t in (seg.start_s, seg.end_s)}
        | {t for seg in hypothesis for t in (seg.start_s, seg.end_s)}
        | {t for iv in scored for t in iv}
    )
    ref_speakers = sorted({seg.speaker for seg in reference})
    hyp_speakers = sorted({seg.speaker for seg in hypothesis})

    # per elementary interval: scored duration, active reference/hypothesis sets
    cells = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        mid = (lo + hi) / 2.0
        d = sum(max(0.0, min(hi, s_hi) - max(lo, s_lo)) for s_lo, s_hi in scored)
        if d <= 0.0:
            continue
        active_ref = frozenset(s.speaker for s in reference if s.start_s <= mid < s.end_s)
        active_hyp = frozenset(s.speaker for s in hypothesis if s.start_s <= mid < s.end_s)
        if active_ref or active_hyp:
            cells.append((d, active_ref, active_hyp))

    ref_time = sum(d * len(r) for d, r, _ in cells)
    if ref_time == 0.0:
        raise EmptyReference("no scored reference speech time (collar removed everything)")

    def error_for(mapping: dict[str, str]) -> float:
        total = 0.0
        for d, r, h in cells:
            matched = sum(1 for spk in r if mapping.get(spk) in h)
            total += d * (max(len(r), len(h)) - matched)
        return total

    best = None
    k = min(len(ref_speakers), len(hyp_speakers))
    if k == 0:
        best = error_for({})
    elif len(ref_speakers) <= len(hyp_speakers):
        for perm in itertools.permutations(hyp_speakers, k):
            err = error_for(dict(zip(ref_speakers, perm)))
            best = err if best is None else min(best, err)
    else:
        for perm in itertools.permutations(ref_speakers, k):
            err = error_for(dict(zip(perm, hyp_speakers)))
            best = err if best is None else min(best, err)
    return best / ref_time
