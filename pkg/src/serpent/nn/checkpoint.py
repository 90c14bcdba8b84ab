"""Lossless checkpoint serialization.

A checkpoint is one JSON document holding the format version, model config,
every persistent array (weights, biases, batchnorm scale/shift and running
statistics) as a named flat list with an explicit shape, the feature
standardization constants, and the training history.  Reals are stored as
hex-float strings so decode(encode(x)) is bit-identical.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from serpent.errors import BadCheckpoint
from serpent.nn.model import Model, ModelConfig, TrainingHistory, build_ser_model

FORMAT_VERSION = 1


@dataclass
class ModelCheckpoint:
    config: ModelConfig
    state: list[tuple[str, np.ndarray]]
    history: TrainingHistory
    feature_mean: np.ndarray
    feature_std: np.ndarray
    format_version: int = FORMAT_VERSION


def _enc(arr: np.ndarray) -> list[str]:
    return [v.hex() for v in np.asarray(arr, dtype=np.float64).ravel().tolist()]


def _dec(values: list[str], shape=None) -> np.ndarray:
    arr = np.array([float.fromhex(v) for v in values], dtype=np.float64)
    return arr.reshape(shape) if shape is not None else arr


def checkpoint_to_doc(ckpt: ModelCheckpoint) -> dict:
    cfg = asdict(ckpt.config)
    cfg["conv_widths"] = list(cfg["conv_widths"])
    return {
        "format_version": ckpt.format_version,
        "config": cfg,
        "standardization": {"mean": _enc(ckpt.feature_mean), "std": _enc(ckpt.feature_std)},
        "parameters": [
            {"name": name, "shape": list(arr.shape), "data": _enc(arr)}
            for name, arr in ckpt.state
        ],
        "history": {
            "train_loss": _enc(np.array(ckpt.history.train_loss)),
            "train_acc": _enc(np.array(ckpt.history.train_acc)),
            "test_loss": _enc(np.array(ckpt.history.test_loss)),
            "test_acc": _enc(np.array(ckpt.history.test_acc)),
        },
    }


def checkpoint_from_doc(doc: dict) -> ModelCheckpoint:
    try:
        if doc["format_version"] != FORMAT_VERSION:
            raise BadCheckpoint(f"unrecognized format version {doc['format_version']!r}")
        cfg_dict = dict(doc["config"])
        cfg_dict["conv_widths"] = tuple(cfg_dict["conv_widths"])
        config = ModelConfig(**cfg_dict)
        state = [
            (p["name"], _dec(p["data"], tuple(p["shape"]))) for p in doc["parameters"]
        ]
        history = TrainingHistory(
            train_loss=_dec(doc["history"]["train_loss"]).tolist(),
            train_acc=_dec(doc["history"]["train_acc"]).tolist(),
            test_loss=_dec(doc["history"]["test_loss"]).tolist(),
            test_acc=_dec(doc["history"]["test_acc"]).tolist(),
        )
        mean = _dec(doc["standardization"]["mean"])
        std = _dec(doc["standardization"]["std"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BadCheckpoint(f"malformed checkpoint document: {exc}") from None
    return ModelCheckpoint(config, state, history, mean, std)


def save_checkpoint(ckpt: ModelCheckpoint, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(checkpoint_to_doc(ckpt), fh)


def load_checkpoint(path: str) -> ModelCheckpoint:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise BadCheckpoint(f"cannot read checkpoint: {exc}") from None
    return checkpoint_from_doc(doc)


def restore_model(ckpt: ModelCheckpoint) -> Model:
    """Rebuild the architecture from the config and load all stored arrays."""
    model = build_ser_model(ckpt.config.rng_seed, ckpt.config)
    targets = model.state_items()
    if len(targets) != len(ckpt.state):
        raise BadCheckpoint(
            f"checkpoint has {len(ckpt.state)} arrays, architecture needs {len(targets)}"
        )
    for (want_name, target), (got_name, value) in zip(targets, ckpt.state):
        if want_name != got_name or target.shape != value.shape:
            raise BadCheckpoint(
                f"array mismatch: expected {want_name}{target.shape}, "
                f"got {got_name}{value.shape}"
            )
        target[...] = value
    return model
