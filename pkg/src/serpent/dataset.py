"""Corpus ingest, label unification into seven emotions, the deterministic
80/20 split, and feature standardization.

Filename-convention tables follow each corpus's published naming scheme and
are kept in one mapping table per corpus.  RAVDESS "calm" is folded into
neutral so every corpus lands on the same seven classes.
"""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from serpent.errors import (
    EmptyTrainSet,
    MalformedCsv,
    MissingFile,
    TooFewRows,
    UnknownCode,
    UnknownEmotion,
    UnrecognizedPattern,
)
from serpent.rng import SplitMix64


class EmotionLabel(IntEnum):
    """Seven emotions with fixed codes 0..6 in alphabetical order."""

    ANGRY = 0
    DISGUST = 1
    FEAR = 2
    HAPPY = 3
    NEUTRAL = 4
    SAD = 5
    SURPRISE = 6

    @property
    def label_name(self) -> str:
        return self.name.lower()

    @classmethod
    def from_name(cls, name: str) -> "EmotionLabel":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise UnknownEmotion(f"unknown emotion name {name!r}") from None


EMOTIONS = tuple(e.label_name for e in EmotionLabel)
NUM_CLASSES = len(EMOTIONS)

CORPORA = ("ravdess", "cremad", "tess", "savee", "movieclips")

# per-corpus file totals from the corpora's own documentation; checked with a
# warning (not an error) at ingest
EXPECTED_COUNTS = {
    "ravdess": 1440,
    "cremad": 7442,
    "tess": 2800,
    "savee": 480,
    "movieclips": 166,
}


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    corpus: str
    label: EmotionLabel
    source_tag: str = "original"


@dataclass(frozen=True)
class SplitResult:
    train_indices: list[int]
    test_indices: list[int]


_RAVDESS_CODES = {
    "01": EmotionLabel.NEUTRAL,
    "02": EmotionLabel.NEUTRAL,  # calm folded into neutral
    "03": EmotionLabel.HAPPY,
    "04": EmotionLabel.SAD,
    "05": EmotionLabel.ANGRY,
    "06": EmotionLabel.FEAR,
    "07": EmotionLabel.DISGUST,
    "08": EmotionLabel.SURPRISE,
}

_CREMAD_CODES = {
    "ANG": EmotionLabel.ANGRY,
    "DIS": EmotionLabel.DISGUST,
    "FEA": EmotionLabel.FEAR,
    "HAP": EmotionLabel.HAPPY,
    "NEU": EmotionLabel.NEUTRAL,
    "SAD": EmotionLabel.SAD,
}

_TESS_SUFFIXES = {
    "angry": EmotionLabel.ANGRY,
    "disgust": EmotionLabel.DISGUST,
    "fear": EmotionLabel.FEAR,
    "happy": EmotionLabel.HAPPY,
    "neutral": EmotionLabel.NEUTRAL,
    "sad": EmotionLabel.SAD,
    "surprise": EmotionLabel.SURPRISE,
    "pleasant_surprise": EmotionLabel.SURPRISE,
    "ps": EmotionLabel.SURPRISE,
}

_SAVEE_CODES = {
    "a": EmotionLabel.ANGRY,
    "d": EmotionLabel.DISGUST,
    "f": EmotionLabel.FEAR,
    "h": EmotionLabel.HAPPY,
    "n": EmotionLabel.NEUTRAL,
    "sa": EmotionLabel.SAD,
    "su": EmotionLabel.SURPRISE,
}

# movie-clips manifests carry free-text emotion words
_MOVIECLIPS_NAMES = {name: EmotionLabel[name.upper()] for name in EMOTIONS}
_MOVIECLIPS_NAMES["anger"] = EmotionLabel.ANGRY


def parse_ravdess(filename: str) -> EmotionLabel:
    """Label from the 7-field dashed RAVDESS name, e.g. 03-01-05-01-02-01-12.wav."""
    stem = Path(filename).stem
    parts = stem.split("-")
    if len(parts) != 7 or not all(p.isdigit() and len(p) == 2 for p in parts):
        raise UnrecognizedPattern(f"not a RAVDESS filename: {filename!r}")
    code = parts[2]
    if code not in _RAVDESS_CODES:
        raise UnrecognizedPattern(f"RAVDESS emotion field {code!r} out of range")
    return _RAVDESS_CODES[code]


def parse_cremad(filename: str) -> EmotionLabel:
    """Label from the third underscore token, e.g. 1001_DFA_ANG_XX.wav."""
    stem = Path(filename).stem
    parts = stem.split("_")
    if len(parts) != 4:
        raise UnrecognizedPattern(f"not a CREMA-D filename: {filename!r}")
    code = parts[2].upper()
    if code not in _CREMAD_CODES:
        raise UnknownCode(f"unknown CREMA-D emotion code {code!r}")
    return _CREMAD_CODES[code]


def parse_tess(path: str) -> EmotionLabel:
    """Label from the parent-directory suffix, e.g. OAF_Fear/OAF_back_fear.wav."""
    parent = Path(path).parent.name
    if "_" not in parent:
        raise UnrecognizedPattern(f"TESS parent directory {parent!r} has no emotion suffix")
    suffix = parent.split("_", 1)[1].lower()
    if suffix not in _TESS_SUFFIXES:
        raise UnknownCode(f"unknown TESS emotion suffix {suffix!r}")
    return _TESS_SUFFIXES[suffix]


def parse_savee(filename: str) -> EmotionLabel:
    """Label from the letter prefix, e.g. DC_sa01.wav or h07.wav."""
    stem = Path(filename).stem
    if "_" in stem:
        stem = stem.split("_", 1)[1]
    letters = ""
    for ch in stem:
        if ch.isalpha():
            letters += ch
        else:
            break
    digits = stem[len(letters) :]
    if not letters or not digits.isdigit():
        raise UnrecognizedPattern(f"not a SAVEE filename: {filename!r}")
    code = letters.lower()
    if code not in _SAVEE_CODES:
        raise UnknownCode(f"unknown SAVEE emotion code {code!r}")
    return _SAVEE_CODES[code]


def load_movieclips(manifest_csv: str, check_files: bool = True) -> list[ManifestEntry]:
    """Entries from a `path,emotion` CSV; paths resolve relative to the CSV."""
    base = Path(manifest_csv).parent
    try:
        with open(manifest_csv, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise MissingFile(str(exc)) from None
    if not rows or [c.strip() for c in rows[0]] != ["path", "emotion"]:
        raise MalformedCsv("movie-clips manifest must start with header 'path,emotion'")
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise MalformedCsv(f"line {lineno}: expected 2 fields, got {len(row)}")
        rel, emotion = row[0].strip(), row[1].strip().lower()
        if emotion not in _MOVIECLIPS_NAMES:
            raise UnknownEmotion(f"line {lineno}: unknown emotion {emotion!r}")
        full = base / rel
        if check_files and not full.is_file():
            raise MissingFile(f"line {lineno}: no such file {full}")
        entries.append(ManifestEntry(str(full), "movieclips", _MOVIECLIPS_NAMES[emotion]))
    return entries


def _wav_files(root: str) -> list[Path]:
    return sorted(p for p in Path(root).rglob("*") if p.suffix.lower() == ".wav")


def _is_ravdess_speech(filename: str) -> bool:
    # modality 03 (audio-only) and vocal channel 01 (speech); song files excluded
    parts = Path(filename).stem.split("-")
    return len(parts) == 7 and parts[0] == "03" and parts[1] == "01"


def scan_corpus(corpus: str, root: str) -> tuple[list[ManifestEntry], list[str]]:
    """Scan one corpus directory; returns (entries, per-file warnings)."""
    entries: list[ManifestEntry] = []
    problems: list[str] = []
    for path in _wav_files(root):
        name = path.name
        try:
            if corpus == "ravdess":
                if not _is_ravdess_speech(name):
                    continue
                label = parse_ravdess(name)
            elif corpus == "cremad":
                label = parse_cremad(name)
            elif corpus == "tess":
                label = parse_tess(str(path))
            elif corpus == "savee":
                label = parse_savee(name)
            else:
                raise ValueError(f"unknown corpus {corpus!r}")
            entries.append(ManifestEntry(str(path), corpus, label))
        except (UnrecognizedPattern, UnknownCode) as exc:
            problems.append(f"{path}: {exc}")
    return entries, problems


def ingest(
    corpus_roots: dict[str, str],
    movieclips_manifest: str | None = None,
    check_counts: bool = True,
) -> list[ManifestEntry]:
    """Scan all configured corpora and merge into one path-sorted manifest."""
    entries: list[ManifestEntry] = []
    for corpus in ("ravdess", "cremad", "tess", "savee"):
        root = corpus_roots.get(corpus)
        if not root:
            continue
        if not os.path.isdir(root):
            warnings.warn(f"{corpus}: directory {root!r} does not exist; skipped")
            continue
        found, problems = scan_corpus(corpus, root)
        for msg in problems:
            warnings.warn(f"{corpus}: skipped {msg}")
        if check_counts and len(found) != EXPECTED_COUNTS[corpus]:
            warnings.warn(
                f"{corpus}: found {len(found)} files, expected {EXPECTED_COUNTS[corpus]}"
            )
        entries.extend(found)
    if movieclips_manifest:
        found = load_movieclips(movieclips_manifest)
        if check_counts and len(found) != EXPECTED_COUNTS["movieclips"]:
            warnings.warn(
                f"movieclips: found {len(found)} rows, expected {EXPECTED_COUNTS['movieclips']}"
            )
        entries.extend(found)
    return sorted(entries, key=lambda e: e.path)


def write_manifest(entries: list[ManifestEntry], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "corpus", "emotion", "source_tag"])
        for e in entries:
            writer.writerow([e.path, e.corpus, e.label.label_name, e.source_tag])


def read_manifest(path: str) -> list[ManifestEntry]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["path", "corpus", "emotion", "source_tag"]:
        raise MalformedCsv("manifest must start with header 'path,corpus,emotion,source_tag'")
    return [
        ManifestEntry(r[0], r[1], EmotionLabel.from_name(r[2]), r[3]) for r in rows[1:]
    ]


def split(
    n_rows: int,
    test_fraction: float = 0.2,
    seed: int = 42,
    shuffle: bool = True,
) -> SplitResult:
    """Deterministic train/test split: Fisher-Yates shuffle, last rows test."""
    if n_rows < 2:
        raise TooFewRows(f"need at least 2 rows, got {n_rows}")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    n_test = int(n_rows * test_fraction + 0.5)
    order = SplitMix64(seed).permutation(n_rows) if shuffle else list(range(n_rows))
    return SplitResult(order[: n_rows - n_test], order[n_rows - n_test :])


def standardize(
    train_features: np.ndarray, all_features: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column-wise (x - mean)/std with constants from training rows only."""
    train_features = np.asarray(train_features, dtype=np.float64)
    all_features = np.asarray(all_features, dtype=np.float64)
    if train_features.size == 0:
        raise EmptyTrainSet("cannot standardize with an empty training set")
    mean = train_features.mean(axis=0)
    std = np.maximum(train_features.std(axis=0), 1e-8)
    return (all_features - mean) / std, mean, std


def one_hot(label: EmotionLabel) -> np.ndarray:
    vec = np.zeros(NUM_CLASSES)
    vec[int(label)] = 1.0
    return vec


def labels_to_onehot(labels: list[EmotionLabel]) -> np.ndarray:
    out = np.zeros((len(labels), NUM_CLASSES))
    out[np.arange(len(labels)), [int(l) for l in labels]] = 1.0
    return out
