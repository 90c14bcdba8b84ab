import json
import os

import numpy as np
import pytest

from serpent.audio_io import encode_wav
from serpent.cli import main
from serpent.config import load_config
from serpent.dataset import EMOTIONS

import synth


@pytest.fixture
def workspace(tmp_path, tiny_corpora):
    out_dir = tmp_path / "out"
    config = tmp_path / "serpent.ini"
    config.write_text(
        f"""[paths]
ravdess_dir = {tiny_corpora["ravdess"]}
cremad_dir = {tiny_corpora["cremad"]}
tess_dir = {tiny_corpora["tess"]}
savee_dir = {tiny_corpora["savee"]}
movieclips_manifest = {tiny_corpora["movieclips_manifest"]}
out_dir = {out_dir}

[train]
conv_widths = 8,8,8,8,8,8
dense_units = 16
epochs = 3
batch_size = 16
seed = 5
"""
    )
    return {"config": str(config), "out": out_dir, "corpora": tiny_corpora}


def run(workspace, *argv):
    return main(["--config", workspace["config"], *argv])


class TestConfig:
    def test_defaults_without_file(self):
        cfg = load_config(None)
        assert cfg.sample_rate_hz == 22050
        assert cfg.crop_offset_s == 0.6
        assert cfg.crop_duration_s == 2.5
        assert cfg.frame.frame_len == 2048
        assert cfg.frame.hop_len == 512
        assert cfg.augment.noise_coeff == 0.035
        assert cfg.model.conv_widths == (512, 512, 256, 256, 128, 128)
        assert cfg.model.epochs == 50
        assert cfg.model.batch_size == 64
        assert cfg.split.test_fraction == 0.2
        assert cfg.split.seed == 42

    def test_file_values_respected(self, workspace):
        cfg = load_config(workspace["config"])
        assert cfg.model.conv_widths == (8, 8, 8, 8, 8, 8)
        assert cfg.model.epochs == 3
        assert cfg.corpus_roots["ravdess"] == workspace["corpora"]["ravdess"]

    def test_env_var_default(self, workspace, monkeypatch):
        monkeypatch.setenv("SERPENT_CONFIG", workspace["config"])
        cfg = load_config(None)
        assert cfg.model.epochs == 3


class TestPipeline:
    @pytest.fixture
    def ingested(self, workspace):
        with pytest.warns(UserWarning):
            assert run(workspace, "ingest") == 0
        return workspace

    @pytest.fixture
    def extracted(self, ingested):
        assert run(ingested, "extract") == 0
        return ingested

    def test_ingest_outputs(self, ingested, capsys):
        manifest = (ingested["out"] / "manifest.csv").read_text().splitlines()
        assert manifest[0] == "path,corpus,emotion,source_tag"
        assert len(manifest) - 1 == ingested["corpora"]["n_clips"]
        counts = (ingested["out"] / "emotion_counts.csv").read_text().splitlines()
        assert counts[0] == "emotion,count"
        assert len(counts) == 8
        total = sum(int(line.split(",")[1]) for line in counts[1:])
        assert total == ingested["corpora"]["n_clips"]

    def test_ingest_rerun_identical_bytes(self, ingested):
        first = (ingested["out"] / "manifest.csv").read_bytes()
        with pytest.warns(UserWarning):
            assert run(ingested, "ingest") == 0
        assert (ingested["out"] / "manifest.csv").read_bytes() == first

    def test_ingest_without_roots_fails(self, tmp_path):
        config = tmp_path / "empty.ini"
        config.write_text("[paths]\nout_dir = {}\n".format(tmp_path / "o"))
        assert main(["--config", str(config), "ingest"]) == 1

    def test_extract_three_rows_per_clip(self, extracted):
        lines = (extracted["out"] / "features.csv").read_text().splitlines()
        n_clips = extracted["corpora"]["n_clips"]
        assert lines[0].startswith("path,label,f0,")
        assert len(lines) - 1 == 3 * n_clips
        noise_rows = [l for l in lines[1:] if "#noise" in l]
        pitch_rows = [l for l in lines[1:] if "#pitch" in l]
        assert len(noise_rows) == n_clips and len(pitch_rows) == n_clips
        # 22 feature columns, 9 significant digits
        cells = lines[1].split(",")
        assert len(cells) == 24
        for cell in cells[2:]:
            mantissa = cell.replace("-", "").replace(".", "").split("e")[0].lstrip("0")
            assert len(mantissa) <= 9

    def test_extract_deterministic_bytes(self, extracted):
        first = (extracted["out"] / "features.csv").read_bytes()
        assert run(extracted, "extract") == 0
        assert (extracted["out"] / "features.csv").read_bytes() == first

    def test_train_and_artifacts(self, extracted, capsys):
        assert run(extracted, "train") == 0
        printed = capsys.readouterr().out
        assert "epoch 1: train_loss" in printed
        out = extracted["out"]
        for name in ("checkpoint.json", "history.csv", "report.txt", "report.csv", "confusion.csv"):
            assert (out / name).exists(), name
        history = (out / "history.csv").read_text().splitlines()
        assert history[0] == "epoch,train_loss,train_acc,test_loss,test_acc"
        assert len(history) == 1 + 3
        report = (out / "report.txt").read_text()
        assert "weighted avg" in report
        confusion = (out / "confusion.csv").read_text().splitlines()
        assert confusion[0] == "true\\pred," + ",".join(EMOTIONS)

    def test_train_rerun_identical_report(self, extracted):
        assert run(extracted, "train") == 0
        first = (extracted["out"] / "report.txt").read_bytes()
        hist1 = (extracted["out"] / "history.csv").read_bytes()
        assert run(extracted, "train") == 0
        assert (extracted["out"] / "report.txt").read_bytes() == first
        assert (extracted["out"] / "history.csv").read_bytes() == hist1

    def test_train_epoch_override_wins(self, extracted):
        assert run(extracted, "train", "--epochs", "1") == 0
        history = (extracted["out"] / "history.csv").read_text().splitlines()
        assert len(history) == 2

    def test_split_by_clip_keeps_variants_together(self, extracted):
        assert run(extracted, "train", "--epochs", "1", "--split-by-clip") == 0

    def test_predict_json_schema(self, extracted, capsys, tmp_path):
        assert run(extracted, "train", "--epochs", "1") == 0
        capsys.readouterr()
        wav = os.path.join(
            extracted["corpora"]["ravdess"], sorted(os.listdir(extracted["corpora"]["ravdess"]))[0]
        )
        ckpt = str(extracted["out"] / "checkpoint.json")
        out_json = tmp_path / "result.json"
        assert run(extracted, "predict", ckpt, wav, "--out", str(out_json)) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["file"] == wav
        assert result["label"] in EMOTIONS
        assert set(result["probabilities"]) == set(EMOTIONS)
        assert sum(result["probabilities"].values()) == pytest.approx(1.0, abs=1e-6)
        assert json.loads(out_json.read_text()) == result

    def test_predict_diarize_two_speakers(self, extracted, capsys, tmp_path):
        assert run(extracted, "train", "--epochs", "1") == 0
        capsys.readouterr()
        clip, _ = synth.two_speaker_clip(reps=2)
        wav = tmp_path / "two.wav"
        wav.write_bytes(encode_wav(clip))
        ckpt = str(extracted["out"] / "checkpoint.json")
        assert (
            run(extracted, "predict", ckpt, str(wav), "--diarize", "--num-speakers", "2") == 0
        )
        result = json.loads(capsys.readouterr().out)
        assert os.path.exists(result["rttm"])
        speakers = {seg["speaker"] for seg in result["segments"]}
        assert speakers == {"SPEAKER_00", "SPEAKER_01"}
        for seg in result["segments"]:
            assert seg["end"] > seg["start"]
            assert seg["label"] in EMOTIONS
            assert sum(seg["probabilities"].values()) == pytest.approx(1.0, abs=1e-6)


class TestStandaloneCommands:
    def test_diarize_writes_rttm(self, workspace, tmp_path):
        clip, _ = synth.two_speaker_clip(reps=1)
        wav = tmp_path / "pair.wav"
        wav.write_bytes(encode_wav(clip))
        rttm = tmp_path / "pair.rttm"
        assert (
            run(workspace, "diarize", str(wav), "--num-speakers", "2", "--rttm-out", str(rttm))
            == 0
        )
        lines = rttm.read_text().splitlines()
        assert lines and all(l.startswith("SPEAKER pair 1 ") for l in lines)

    def test_report_from_predictions(self, workspace, tmp_path, capsys):
        preds = tmp_path / "preds.csv"
        preds.write_text("true,pred\nangry,angry\nsad,angry\nsad,sad\n")
        assert run(workspace, "report", "--predictions-csv", str(preds)) == 0
        text = capsys.readouterr().out
        assert "angry" in text and "weighted avg" in text
        assert (workspace["out"] / "report.txt").exists()

    def test_augment_writes_variants(self, workspace, tmp_path):
        clip = synth.harmonic_clip(250.0, 1.0, duration_s=0.6)
        wav = tmp_path / "clip.wav"
        wav.write_bytes(encode_wav(clip))
        assert run(workspace, "augment", str(wav)) == 0
        assert (tmp_path / "clip.noise.wav").exists()
        assert (tmp_path / "clip.pitch.wav").exists()

    def test_missing_wav_errors_cleanly(self, workspace):
        code = run(workspace, "diarize", "/nonexistent/audio.wav")
        assert code == 1
