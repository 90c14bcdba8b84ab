import numpy as np
import pytest

from serpent.audio_io import AudioClip
from serpent.augment import (
    AugmentConfig,
    _shift_by,
    add_noise,
    augment_set,
    pitch_shift,
    time_shift,
    time_stretch,
)
from serpent.errors import RateOutOfRange, SemitonesOutOfRange
from serpent.rng import SplitMix64

import synth

SR = synth.SR
HOP = 512


def dominant_hz(clip):
    spectrum = np.abs(np.fft.rfft(clip.samples))
    return spectrum.argmax() * clip.sample_rate_hz / len(clip.samples)


class TestAddNoise:
    def test_zero_coeff_is_identity(self):
        clip = synth.sine_clip(200.0, duration_s=0.3)
        out = add_noise(clip, AugmentConfig(noise_coeff=0.0, rng_seed=1))
        np.testing.assert_array_equal(out.samples, clip.samples)

    def test_silent_clip_stays_silent(self):
        clip = AudioClip(np.zeros(1000), SR)
        out = add_noise(clip, AugmentConfig(rng_seed=1))
        np.testing.assert_array_equal(out.samples, np.zeros(1000))

    def test_snr_bound_monte_carlo(self):
        # amplitude law A <= 0.035*max|x| gives SNR >= 26 dB essentially always
        clip = synth.sine_clip(440.0, duration_s=1.0)
        signal_rms = np.sqrt(np.mean(clip.samples**2))
        cfg = AugmentConfig(noise_coeff=0.035, rng_seed=31337)
        ok = 0
        trials = 1000
        for stream in range(trials):
            out = add_noise(clip, cfg, stream_id=stream)
            added = out.samples - clip.samples
            noise_rms = np.sqrt(np.mean(added**2))
            if noise_rms == 0.0 or 20 * np.log10(signal_rms / noise_rms) >= 26.0:
                ok += 1
        assert ok / trials > 0.99

    def test_deterministic(self):
        clip = synth.sine_clip(300.0, duration_s=0.2)
        cfg = AugmentConfig(rng_seed=7)
        a = add_noise(clip, cfg, stream_id=3)
        b = add_noise(clip, cfg, stream_id=3)
        assert np.array_equal(a.samples, b.samples)
        c = add_noise(clip, cfg, stream_id=4)
        assert not np.array_equal(a.samples, c.samples)

    def test_length_rate_range_preserved(self):
        clip = synth.sine_clip(250.0, duration_s=0.37)
        out = add_noise(clip, AugmentConfig(rng_seed=2))
        assert len(out) == len(clip) and out.sample_rate_hz == SR
        assert np.max(np.abs(out.samples)) <= 1.0


class TestTimeShift:
    def test_zero_fraction_is_identity(self):
        clip = synth.sine_clip(100.0, duration_s=0.1)
        out = time_shift(clip, AugmentConfig(shift_fraction=0.0, rng_seed=1))
        np.testing.assert_array_equal(out.samples, clip.samples)

    def test_forced_positive_shift(self):
        np.testing.assert_array_equal(
            _shift_by(np.array([1.0, 2.0, 3.0, 4.0]), 2), [0.0, 0.0, 1.0, 2.0]
        )

    def test_forced_negative_shift(self):
        np.testing.assert_array_equal(
            _shift_by(np.array([1.0, 2.0, 3.0, 4.0]), -1), [2.0, 3.0, 4.0, 0.0]
        )

    def test_length_preserved_over_many_seeds(self):
        clip = AudioClip(SplitMix64(1).uniforms(500) - 0.5, 1000)
        cfg = AugmentConfig(shift_fraction=0.05, rng_seed=9)
        for stream in range(1000):
            out = time_shift(clip, cfg, stream_id=stream)
            assert len(out) == 500

    def test_deterministic(self):
        clip = synth.sine_clip(120.0, duration_s=0.2)
        cfg = AugmentConfig(rng_seed=11)
        assert np.array_equal(
            time_shift(clip, cfg, stream_id=5).samples,
            time_shift(clip, cfg, stream_id=5).samples,
        )


class TestTimeStretch:
    def test_rate_one_reconstructs(self):
        clip = synth.harmonic_clip(220.0, 1.0, duration_s=1.0)
        out = time_stretch(clip, 1.0)
        assert abs(len(out) - len(clip)) <= HOP
        n = min(len(out), len(clip))
        corr = np.corrcoef(out.samples[:n], clip.samples[:n])[0, 1]
        assert corr >= 0.95

    def test_half_rate_doubles_duration(self):
        clip = synth.sine_clip(330.0, duration_s=2.0)
        out = time_stretch(clip, 0.5)
        assert abs(len(out) - round(len(clip) / 0.5)) <= HOP

    def test_pitch_preserved(self):
        clip = synth.sine_clip(440.0, duration_s=1.0)
        out = time_stretch(clip, 0.8)
        bin_hz = SR / len(out.samples)
        assert abs(dominant_hz(out) - 440.0) <= bin_hz

    def test_rate_out_of_range(self):
        clip = synth.sine_clip(100.0, duration_s=0.1)
        with pytest.raises(RateOutOfRange):
            time_stretch(clip, 0.1)
        with pytest.raises(RateOutOfRange):
            time_stretch(clip, 5.0)

    def test_sample_rate_and_range(self):
        clip = synth.harmonic_clip(180.0, 0.8, duration_s=0.7)
        out = time_stretch(clip, 1.3)
        assert out.sample_rate_hz == SR
        assert np.max(np.abs(out.samples)) <= 1.0


class TestPitchShift:
    def test_zero_semitones_near_identity(self):
        clip = synth.harmonic_clip(260.0, 1.2, duration_s=1.0)
        out = pitch_shift(clip, 0.0)
        assert len(out) == len(clip)
        corr = np.corrcoef(out.samples, clip.samples)[0, 1]
        assert corr >= 0.95

    def test_octave_up(self):
        clip = synth.sine_clip(440.0, duration_s=1.0)
        out = pitch_shift(clip, 12.0)
        bin_hz = SR / len(out.samples)
        assert abs(dominant_hz(out) - 880.0) <= bin_hz

    def test_length_exact_for_any_semitones(self):
        clip = synth.sine_clip(200.0, duration_s=0.8)
        for semis in (-12.0, -5.5, -1.0, 2.0, 7.3, 12.0):
            out = pitch_shift(clip, semis)
            assert len(out) == len(clip)
            assert out.sample_rate_hz == SR

    def test_semitones_out_of_range(self):
        with pytest.raises(SemitonesOutOfRange):
            pitch_shift(synth.sine_clip(100.0, 0.1), 12.5)


class TestAugmentSet:
    def test_three_variants_first_is_original(self):
        clip = synth.sine_clip(310.0, duration_s=0.5)
        variants = augment_set(clip, AugmentConfig(rng_seed=3))
        assert len(variants) == 3
        np.testing.assert_array_equal(variants[0].samples, clip.samples)
        for v in variants:
            assert len(v) == len(clip)
            assert v.sample_rate_hz == SR

    def test_bit_identical_for_same_seed(self):
        clip = synth.harmonic_clip(270.0, 1.1, duration_s=0.5)
        cfg = AugmentConfig(rng_seed=21)
        a = augment_set(clip, cfg, stream_id=2)
        b = augment_set(clip, cfg, stream_id=2)
        for va, vb in zip(a, b):
            assert np.array_equal(va.samples, vb.samples)

    def test_pitch_variant_uses_configured_semitones(self):
        clip = synth.sine_clip(440.0, duration_s=1.0)
        variants = augment_set(clip, AugmentConfig(rng_seed=1, pitch_semitones=12.0))
        bin_hz = SR / len(variants[2].samples)
        assert abs(dominant_hz(variants[2]) - 880.0) <= bin_hz


def test_config_validation():
    with pytest.raises(ValueError):
        AugmentConfig(noise_coeff=-0.1)
    with pytest.raises(ValueError):
        AugmentConfig(shift_fraction=1.5)
    with pytest.raises(ValueError):
        AugmentConfig(stretch_rate=0.0)
