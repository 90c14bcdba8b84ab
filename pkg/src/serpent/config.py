"""Pipeline configuration: one INI-style key-value file, flag overrides win.

Sections and keys (all optional; defaults shown by `serpent --help`):

    [paths]    ravdess_dir cremad_dir tess_dir savee_dir movieclips_manifest out_dir
    [audio]    sample_rate crop_offset_s crop_duration_s pad_to_duration
    [features] frame_len hop_len window n_mels n_mfcc
    [augment]  noise_coeff shift_fraction stretch_rate pitch_semitones seed
    [train]    epochs batch_size learning_rate conv_widths dense_units dropout_rate seed
    [split]    test_fraction seed shuffle split_by_clip
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace

from serpent.augment import AugmentConfig
from serpent.dsp import FrameConfig
from serpent.nn.model import ModelConfig

CONFIG_ENV_VAR = "SERPENT_CONFIG"


@dataclass(frozen=True)
class SplitConfig:
    test_fraction: float = 0.2
    seed: int = 42
    shuffle: bool = True
    split_by_clip: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    corpus_roots: dict = field(default_factory=dict)
    movieclips_manifest: str | None = None
    out_dir: str = "out"
    sample_rate_hz: int = 22050
    crop_offset_s: float = 0.6
    crop_duration_s: float = 2.5
    pad_to_duration: bool = False
    frame: FrameConfig = field(default_factory=FrameConfig)
    n_mels: int = 40
    n_mfcc: int = 20
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    split: SplitConfig = field(default_factory=SplitConfig)


def load_config(path: str | None = None) -> PipelineConfig:
    """Config from an INI file; a missing path yields pure defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    cfg = PipelineConfig()
    if not path:
        return cfg
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)

    def get(section, key, cast, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        if cast is bool:
            return parser.getboolean(section, key)
        return cast(raw)

    roots = {}
    for corpus in ("ravdess", "cremad", "tess", "savee"):
        value = get("paths", f"{corpus}_dir", str, None)
        if value:
            roots[corpus] = value

    frame = FrameConfig(
        frame_len=get("features", "frame_len", int, 2048),
        hop_len=get("features", "hop_len", int, 512),
        window=get("features", "window", str, "hann"),
    )
    augment = AugmentConfig(
        noise_coeff=get("augment", "noise_coeff", float, 0.035),
        shift_fraction=get("augment", "shift_fraction", float, 0.05),
        stretch_rate=get("augment", "stretch_rate", float, 0.8),
        pitch_semitones=get("augment", "pitch_semitones", float, 2.0),
        rng_seed=get("augment", "seed", int, 42),
    )
    widths_raw = get("train", "conv_widths", str, None)
    defaults = ModelConfig()
    model = ModelConfig(
        conv_widths=(
            tuple(int(w) for w in widths_raw.split(",")) if widths_raw else defaults.conv_widths
        ),
        dense_units=get("train", "dense_units", int, defaults.dense_units),
        dropout_rate=get("train", "dropout_rate", float, defaults.dropout_rate),
        learning_rate=get("train", "learning_rate", float, defaults.learning_rate),
        epochs=get("train", "epochs", int, defaults.epochs),
        batch_size=get("train", "batch_size", int, defaults.batch_size),
        rng_seed=get("train", "seed", int, defaults.rng_seed),
    )
    split = SplitConfig(
        test_fraction=get("split", "test_fraction", float, 0.2),
        seed=get("split", "seed", int, 42),
        shuffle=get("split", "shuffle", bool, True),
        split_by_clip=get("split", "split_by_clip", bool, False),
    )
    return PipelineConfig(
        corpus_roots=roots,
        movieclips_manifest=get("paths", "movieclips_manifest", str, None),
        out_dir=get("paths", "out_dir", str, "out"),
        sample_rate_hz=get("audio", "sample_rate", int, 22050),
        crop_offset_s=get("audio", "crop_offset_s", float, 0.6),
        crop_duration_s=get("audio", "crop_duration_s", float, 2.5),
        pad_to_duration=get("audio", "pad_to_duration", bool, False),
        frame=frame,
        n_mels=get("features", "n_mels", int, 40),
        n_mfcc=get("features", "n_mfcc", int, 20),
        augment=augment,
        model=model,
        split=split,
    )


def apply_overrides(cfg: PipelineConfig, args) -> PipelineConfig:
    """Fold recognized CLI flags into the config; flags win over the file."""
    model = cfg.model
    augment = cfg.augment
    if getattr(args, "seed", None) is not None:
        model = replace(model, rng_seed=args.seed)
        augment = replace(augment, rng_seed=args.seed)
    if getattr(args, "epochs", None) is not None:
        model = replace(model, epochs=args.epochs)
    if getattr(args, "batch_size", None) is not None:
        model = replace(model, batch_size=args.batch_size)
    out_dir = getattr(args, "out_dir", None) or cfg.out_dir
    return replace(cfg, model=model, augment=augment, out_dir=out_dir)
