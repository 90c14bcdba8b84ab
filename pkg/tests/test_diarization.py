import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from serpent.audio_io import AudioClip
from serpent.diarization import (
    Segment,
    agglomerative_cluster,
    der,
    diarize,
    parse_rttm,
    segment_embedding,
    vad_segments,
    write_rttm,
)
from serpent.errors import ClipTooShort, EmptyReference, MalformedRttm
from serpent.rng import SplitMix64

import synth
from oracles import naive_average_linkage

SR = synth.SR
WINDOW = 0.03


class TestVad:
    def test_silence_gives_nothing(self):
        clip = AudioClip(np.zeros(SR), SR)
        assert vad_segments(clip) == []

    def test_tone_silence_tone(self):
        tone = synth.harmonic_clip(300.0, 1.0, duration_s=1.0).samples
        clip = AudioClip(np.concatenate([tone, np.zeros(SR), tone]), SR)
        spans = vad_segments(clip)
        assert len(spans) == 2
        assert spans[0][0] == pytest.approx(0.0, abs=2 * WINDOW)
        assert spans[0][1] == pytest.approx(1.0, abs=2 * WINDOW)
        assert spans[1][0] == pytest.approx(2.0, abs=2 * WINDOW)
        assert spans[1][1] == pytest.approx(3.0, abs=2 * WINDOW)

    def test_continuous_signal_single_span(self):
        clip = synth.harmonic_clip(250.0, 1.0, duration_s=2.0)
        spans = vad_segments(clip)
        assert len(spans) == 1
        assert spans[0][0] == pytest.approx(0.0, abs=WINDOW)
        assert spans[0][1] == pytest.approx(2.0, abs=2 * WINDOW)

    def test_too_short(self):
        with pytest.raises(ClipTooShort):
            vad_segments(AudioClip(np.zeros(100), SR))

    def test_short_blips_dropped_and_gaps_bridged(self):
        tone = synth.harmonic_clip(300.0, 1.0, duration_s=0.1).samples
        blip = AudioClip(
            np.concatenate([tone, np.zeros(2 * SR)]), SR
        )  # 0.1 s < min_speech 0.25 s
        assert vad_segments(blip) == []
        a = synth.harmonic_clip(300.0, 1.0, duration_s=0.5).samples
        gapped = AudioClip(np.concatenate([a, np.zeros(int(0.1 * SR)), a]), SR)
        assert len(vad_segments(gapped)) == 1  # 0.1 s gap < min_gap 0.2 s bridges


class TestEmbedding:
    def test_stationary_tone_subsegments_agree(self):
        clip = synth.harmonic_clip(220.0, 1.0, duration_s=4.0)
        e1 = segment_embedding(clip, (0.0, 1.5))
        e2 = segment_embedding(clip, (2.0, 3.5))
        cos = 1 - e1 @ e2 / (np.linalg.norm(e1) * np.linalg.norm(e2))
        assert cos < 0.1

    def test_different_tones_separate(self):
        a = synth.harmonic_clip(300.0, 1.0, duration_s=2.0)
        b = synth.harmonic_clip(1200.0, 2.0, duration_s=2.0)
        ea1 = segment_embedding(a, (0.0, 1.0))
        ea2 = segment_embedding(a, (1.0, 2.0))
        eb = segment_embedding(b, (0.0, 1.0))

        def cos(u, v):
            return 1 - u @ v / (np.linalg.norm(u) * np.linalg.norm(v))

        assert cos(ea1, eb) > cos(ea1, ea2)

    def test_deterministic_and_40_dim(self):
        clip = synth.harmonic_clip(260.0, 1.3, duration_s=1.0)
        e1 = segment_embedding(clip, (0.1, 0.9))
        e2 = segment_embedding(clip, (0.1, 0.9))
        assert e1.shape == (40,)
        assert np.array_equal(e1, e2)


class TestClustering:
    @staticmethod
    def blob(center, n, seed):
        rng = SplitMix64(seed)
        return [np.array(center) + 0.01 * rng.normals(len(center)) for _ in range(n)]

    def test_single_embedding(self):
        assert agglomerative_cluster([np.ones(4)]) == ["SPEAKER_00"]

    def test_two_blobs_recovered(self):
        pts = self.blob([1.0, 0.0, 0.0], 4, 1) + self.blob([0.0, 1.0, 0.0], 4, 2)
        labels = agglomerative_cluster(pts, num_speakers=2)
        assert labels[:4] == ["SPEAKER_00"] * 4
        assert labels[4:] == ["SPEAKER_01"] * 4

    def test_every_point_its_own_cluster(self):
        pts = self.blob([1.0, 0.2, 0.1], 5, 3)
        labels = agglomerative_cluster(pts, num_speakers=5)
        assert sorted(labels) == [f"SPEAKER_{i:02d}" for i in range(5)]

    def test_matches_independent_average_linkage(self):
        rng = SplitMix64(44)
        for trial in range(10):
            n = 4 + rng.randbelow(3)
            pts = [rng.normals(5) for _ in range(n)]
            k = 1 + rng.randbelow(n)
            labels = agglomerative_cluster(pts, num_speakers=k)
            ours = {}
            for i, lab in enumerate(labels):
                ours.setdefault(lab, set()).add(i)
            got = {frozenset(v) for v in ours.values()}
            want = naive_average_linkage([p.tolist() for p in pts], k)
            assert got == want

    def test_threshold_stop(self):
        pts = self.blob([1.0, 0.0], 3, 5) + self.blob([0.0, 1.0], 3, 6)
        labels = agglomerative_cluster(pts, num_speakers=None, threshold=0.35)
        assert len(set(labels)) == 2


class TestDiarize:
    def test_silence_empty(self):
        assert diarize(AudioClip(np.zeros(SR), SR)) == []

    def test_two_speaker_alternation(self):
        clip, reference = synth.two_speaker_clip()
        ref_segments = [Segment(s, e, spk) for s, e, spk in reference]
        hyp = diarize(clip, num_speakers=2)
        assert {seg.speaker for seg in hyp} == {"SPEAKER_00", "SPEAKER_01"}
        assert der(ref_segments, hyp) <= 0.10

    def test_single_speaker(self):
        clip = synth.harmonic_clip(220.0, 1.0, duration_s=2.0)
        segments = diarize(clip, num_speakers=1)
        assert len(segments) >= 1
        assert {seg.speaker for seg in segments} == {"SPEAKER_00"}

    def test_output_sorted_and_in_bounds(self):
        clip, _ = synth.two_speaker_clip(reps=2)
        segments = diarize(clip, num_speakers=2)
        for a, b in zip(segments, segments[1:]):
            assert a.start_s <= b.start_s
        for seg in segments:
            assert 0.0 <= seg.start_s < seg.end_s <= clip.duration_seconds + WINDOW

    def test_deterministic(self):
        clip, _ = synth.two_speaker_clip(reps=2)
        a = write_rttm("x", diarize(clip, num_speakers=2))
        b = write_rttm("x", diarize(clip, num_speakers=2))
        assert a == b


class TestRttm:
    def test_format_line(self):
        text = write_rttm("fileA", [Segment(0.0, 1.5, "SPEAKER_00")])
        assert text == "SPEAKER fileA 1 0.000 1.500 <NA> <NA> SPEAKER_00 <NA> <NA>\n"

    @given(
        st.lists(
            st.tuples(st.integers(0, 10_000_000), st.integers(1, 1_000_000), st.integers(0, 5)),
            min_size=0,
            max_size=20,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_roundtrip_on_millisecond_grid(self, triples):
        segments = [
            Segment(start_ms / 1000.0, start_ms / 1000.0 + dur_ms / 1000.0, f"SPEAKER_{spk:02d}")
            for start_ms, dur_ms, spk in triples
        ]
        back = parse_rttm(write_rttm("f", segments))
        assert len(back) == len(segments)
        for orig, rebuilt in zip(segments, back):
            assert rebuilt.speaker == orig.speaker
            assert abs(rebuilt.start_s - orig.start_s) < 1e-9
            assert abs(rebuilt.end_s - orig.end_s) < 1e-9

    def test_quantization_bound(self):
        seg = Segment(0.12345, 0.98765, "SPEAKER_03")
        back = parse_rttm(write_rttm("f", [seg]))[0]
        assert abs(back.start_s - seg.start_s) <= 0.0005
        assert abs(back.duration_s - seg.duration_s) <= 0.001

    def test_malformed_field_count(self):
        with pytest.raises(MalformedRttm):
            parse_rttm("SPEAKER f 1 0.0 1.0 <NA> <NA> S\n")  # 8 fields

    def test_malformed_record_type(self):
        with pytest.raises(MalformedRttm):
            parse_rttm("LEXEME f 1 0.0 1.0 <NA> <NA> S <NA> <NA>\n")

    def test_negative_duration(self):
        with pytest.raises(MalformedRttm):
            parse_rttm("SPEAKER f 1 0.5 -1.0 <NA> <NA> S <NA> <NA>\n")


class TestDer:
    REF = [Segment(0.0, 2.0, "A"), Segment(3.0, 5.0, "B")]

    def test_identity_is_zero(self):
        assert der(self.REF, self.REF) == 0.0

    def test_empty_hypothesis_is_one(self):
        assert der(self.REF, []) == pytest.approx(1.0)

    def test_label_swap_invariant(self):
        swapped = [Segment(0.0, 2.0, "B"), Segment(3.0, 5.0, "A")]
        assert der(self.REF, swapped) == 0.0

    def test_renamed_speakers_invariant(self):
        renamed = [Segment(0.0, 2.0, "SPEAKER_07"), Segment(3.0, 5.0, "Q")]
        assert der(self.REF, renamed) == 0.0

    def test_half_missed(self):
        hyp = [Segment(0.0, 2.0, "A")]
        # collar 0.25 removes 0.5 s around each boundary; scored ref time is
        # 2*(2.0 - 0.5) = 3.0 s, missed scored time 1.5 s
        assert der(self.REF, hyp) == pytest.approx(0.5)

    def test_empty_reference(self):
        with pytest.raises(EmptyReference):
            der([], [Segment(0.0, 1.0, "A")])


def test_segment_validation():
    with pytest.raises(ValueError):
        Segment(1.0, 1.0, "A")
    with pytest.raises(ValueError):
        Segment(-0.5, 1.0, "A")
