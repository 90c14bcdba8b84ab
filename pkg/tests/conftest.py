import numpy as np
import pytest

from serpent.audio_io import AudioClip, encode_wav

import synth


def _write_wav(path, clip):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_wav(clip))


@pytest.fixture(scope="session")
def tiny_corpora(tmp_path_factory):
    """Miniature corpora following each corpus's real naming scheme.

    Clip timbres correlate with labels so tiny end-to-end training runs have
    something to learn.
    """
    root = tmp_path_factory.mktemp("corpora")

    def clip_for(cls, variant, rate=synth.SR):
        clip = synth.tone_class_clip(cls, variant, duration_s=1.2, seed=777)
        if rate != synth.SR:
            # store at a different rate to exercise ingest-time resampling
            from serpent.audio_io import resample

            clip = resample(clip, rate)
        return clip

    # RAVDESS: emotion field 03='03' maps per corpus table; two takes each
    rav_codes = {
        "01": 4, "03": 3, "04": 5, "05": 0, "06": 2, "07": 1, "08": 6,
    }
    for code, cls in rav_codes.items():
        for take in (1, 2):
            name = f"03-01-{code}-01-01-0{take}-01.wav"
            _write_wav(root / "ravdess" / name, clip_for(cls, take))

    # CREMA-D: six emotions, third underscore token
    crema_codes = {"ANG": 0, "DIS": 1, "FEA": 2, "HAP": 3, "NEU": 4, "SAD": 5}
    for code, cls in crema_codes.items():
        _write_wav(root / "cremad" / f"1001_DFA_{code}_XX.wav", clip_for(cls, 3, rate=16000))

    # TESS: emotion in the parent directory suffix
    tess_dirs = {
        "OAF_angry": 0, "OAF_disgust": 1, "OAF_Fear": 2, "OAF_happy": 3,
        "OAF_neutral": 4, "OAF_Sad": 5, "OAF_Pleasant_surprise": 6,
    }
    for dirname, cls in tess_dirs.items():
        _write_wav(root / "tess" / dirname / f"OAF_back_{dirname.split('_', 1)[1].lower()}.wav",
                   clip_for(cls, 4))

    # SAVEE: letter prefix after the speaker tag
    savee_codes = {"a": 0, "d": 1, "f": 2, "h": 3, "n": 4, "sa": 5, "su": 6}
    for code, cls in savee_codes.items():
        _write_wav(root / "savee" / f"DC_{code}01.wav", clip_for(cls, 5))

    # movie clips: CSV manifest of free-text emotions
    clips_dir = root / "movieclips"
    rows = ["path,emotion"]
    for cls, emotion in enumerate(("anger", "happy", "surprise", "sad")):
        name = f"clip{cls}.wav"
        cls_map = {"anger": 0, "happy": 3, "surprise": 6, "sad": 5}
        _write_wav(clips_dir / name, clip_for(cls_map[emotion], 6))
        rows.append(f"{name},{emotion}")
    (clips_dir / "manifest.csv").write_text("\n".join(rows) + "\n")

    return {
        "ravdess": str(root / "ravdess"),
        "cremad": str(root / "cremad"),
        "tess": str(root / "tess"),
        "savee": str(root / "savee"),
        "movieclips_manifest": str(clips_dir / "manifest.csv"),
        "n_clips": 14 + 6 + 7 + 7 + 4,
    }


@pytest.fixture
def rng_np():
    return np.random.default_rng(20240809)
