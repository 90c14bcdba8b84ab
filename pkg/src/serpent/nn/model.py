"""The emotion CNN: architecture builder, training loop, and inference.

Architecture over the 22-long feature vector (treated as a 1-channel
sequence): six conv(k=5, same)+ReLU+BatchNorm+MaxPool(5,2) blocks with
dropout 0.2 after every second block, then flatten, dense(512)+ReLU+BatchNorm,
and dense(7)+softmax.  Pooling halves the length ceil-wise:
22 -> 11 -> 6 -> 3 -> 2 -> 1 -> 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from serpent.errors import EmptyDataset, NonFiniteLoss, ShapeMismatch
from serpent.nn.layers import (
    BatchNorm,
    Conv1D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool1D,
    ReLU,
    Softmax,
    TrainContext,
)
from serpent.nn.loss import batch_accuracy, cce_loss
from serpent.nn.optim import Adam
from serpent.rng import SplitMix64

_INIT_STREAM = 0x494E4954
_SHUFFLE_STREAM_BASE = 0x53 << 32


@dataclass(frozen=True)
class ModelConfig:
    conv_widths: tuple[int, ...] = (512, 512, 256, 256, 128, 128)
    kernel_size: int = 5
    pool_size: int = 5
    pool_stride: int = 2
    dropout_rate: float = 0.2
    dense_units: int = 512
    class_count: int = 7
    input_len: int = 22
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    bn_momentum: float = 0.99
    bn_epsilon: float = 1e-3
    epochs: int = 50
    batch_size: int = 64
    rng_seed: int = 42
    # stop once train and (when test data exists) test accuracy both reach
    # these thresholds; None trains the full epoch budget
    early_stop_train_acc: float | None = None
    early_stop_test_acc: float | None = None

    def __post_init__(self):
        if len(self.conv_widths) != 6:
            raise ValueError("conv_widths must list six conv layer widths")


@dataclass
class TrainingHistory:
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    test_loss: list[float] = field(default_factory=list)
    test_acc: list[float] = field(default_factory=list)


class Model:
    """An ordered layer stack ending in dense(class_count) + softmax."""

    def __init__(self, layers: list[Layer], config: ModelConfig):
        self.layers = layers
        self.config = config

    def forward(self, x: np.ndarray, ctx: TrainContext) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, ctx)
        return x

    def backward_from_logits(self, grad_logits: np.ndarray) -> np.ndarray:
        """Backpropagate the combined softmax+CCE gradient (skips the softmax)."""
        grad = grad_logits
        for layer in reversed(self.layers[:-1]):
            grad = layer.backward(grad)
        return grad

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads()]

    def state_items(self) -> list[tuple[str, np.ndarray]]:
        items = []
        for i, layer in enumerate(self.layers):
            items.extend(layer.state_items(f"L{i:02d}.{type(layer).__name__.lower()}"))
        return items

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """Inference-mode forward pass over (batch, input_len) features."""
        if features.ndim != 2 or features.shape[1] != self.config.input_len:
            raise ShapeMismatch(
                f"expected (batch, {self.config.input_len}) features, got {features.shape}"
            )
        return self.forward(features[:, :, None], TrainContext(train=False))


def build_ser_model(seed: int, config: ModelConfig | None = None) -> Model:
    """Build the CNN with He-normal weights drawn from SplitMix64(seed)."""
    cfg = config or ModelConfig()
    if config is not None and config.rng_seed != seed:
        cfg = replace(config, rng_seed=seed)
    rng = SplitMix64(seed, stream=_INIT_STREAM)

    def he_init(shape, fan_in):
        return rng.normals(int(np.prod(shape))).reshape(shape) * np.sqrt(2.0 / fan_in)

    layers: list[Layer] = []
    length = cfg.input_len
    in_ch = 1
    dropout_id = 0
    for block, width in enumerate(cfg.conv_widths):
        conv = Conv1D(in_ch, width, cfg.kernel_size)
        conv.w[...] = he_init(conv.w.shape, cfg.kernel_size * in_ch)
        layers.append(conv)
        layers.append(ReLU())
        layers.append(BatchNorm(width, cfg.bn_momentum, cfg.bn_epsilon))
        layers.append(MaxPool1D(cfg.pool_size, cfg.pool_stride))
        length = MaxPool1D.output_length(length, cfg.pool_stride)
        in_ch = width
        if block % 2 == 1:  # dropout after every second conv block
            layers.append(Dropout(cfg.dropout_rate, layer_id=dropout_id))
            dropout_id += 1
    layers.append(Flatten())
    flat = length * in_ch
    dense1 = Dense(flat, cfg.dense_units)
    dense1.w[...] = he_init(dense1.w.shape, flat)
    layers.append(dense1)
    layers.append(ReLU())
    layers.append(BatchNorm(cfg.dense_units, cfg.bn_momentum, cfg.bn_epsilon))
    dense2 = Dense(cfg.dense_units, cfg.class_count)
    dense2.w[...] = he_init(dense2.w.shape, cfg.dense_units)
    layers.append(dense2)
    layers.append(Softmax())
    return Model(layers, cfg)


def _evaluate(model: Model, features: np.ndarray, onehot: np.ndarray) -> tuple[float, float]:
    probs = model.predict_proba(features)
    loss, _ = cce_loss(probs, onehot)
    return loss, batch_accuracy(probs, onehot)


def _batches(order: list[int], batch_size: int) -> list[list[int]]:
    chunks = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        # batchnorm needs >= 2 rows; fold a trailing singleton into the
        # previous batch
        chunks[-2].extend(chunks.pop())
    if len(chunks) == 1 and len(chunks[0]) == 1:
        # a single-sample dataset is duplicated within the batch, which is
        # gradient-equivalent and keeps batchnorm statistics defined
        chunks[0] = chunks[0] * 2
    return chunks


def train(
    features: np.ndarray,
    onehot: np.ndarray,
    config: ModelConfig | None = None,
    test_features: np.ndarray | None = None,
    test_onehot: np.ndarray | None = None,
    standardization: tuple[np.ndarray, np.ndarray] | None = None,
    log=None,
) -> tuple["ModelCheckpoint", TrainingHistory]:
    """Mini-batch Adam training; returns the checkpoint and per-epoch history.

    Features must already be split and standardized; `standardization` is the
    (mean, std) pair to persist in the checkpoint for inference time.
    """
    from serpent.nn.checkpoint import ModelCheckpoint  # local: avoids import cycle

    cfg = config or ModelConfig()
    features = np.asarray(features, dtype=np.float64)
    onehot = np.asarray(onehot, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise EmptyDataset("training features must be a non-empty 2-D matrix")
    if onehot.shape != (features.shape[0], cfg.class_count):
        raise ShapeMismatch(
            f"labels {onehot.shape} do not match ({features.shape[0]}, {cfg.class_count})"
        )
    if features.shape[1] != cfg.input_len:
        raise ShapeMismatch(f"features have {features.shape[1]} columns, expected {cfg.input_len}")
    has_test = test_features is not None and len(test_features) > 0

    model = build_ser_model(cfg.rng_seed, cfg)
    optimizer = Adam(model.params(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    history = TrainingHistory()

    for epoch in range(cfg.epochs):
        order = SplitMix64(cfg.rng_seed, stream=_SHUFFLE_STREAM_BASE + epoch).permutation(
            len(features)
        )
        total_loss = 0.0
        total_correct = 0.0
        total_rows = 0
        for batch_idx, batch in enumerate(_batches(order, cfg.batch_size)):
            ctx = TrainContext(train=True, epoch=epoch, batch=batch_idx, seed=cfg.rng_seed)
            x = features[batch][:, :, None]
            y = onehot[batch]
            probs = model.forward(x, ctx)
            if not np.all(np.isfinite(probs)):
                raise NonFiniteLoss(
                    f"non-finite network output at epoch {epoch}, batch {batch_idx}"
                )
            loss, grad_logits = cce_loss(probs, y)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"non-finite loss at epoch {epoch}, batch {batch_idx}")
            model.backward_from_logits(grad_logits)
            optimizer.step(model.grads())
            total_loss += loss * len(batch)
            total_correct += batch_accuracy(probs, y) * len(batch)
            total_rows += len(batch)

        history.train_loss.append(total_loss / total_rows)
        history.train_acc.append(total_correct / total_rows)
        if has_test:
            test_loss, test_acc = _evaluate(model, test_features, test_onehot)
            history.test_loss.append(test_loss)
            history.test_acc.append(test_acc)
        if log is not None:
            test_part = (
                f" test_loss {history.test_loss[-1]:.6f} test_acc {history.test_acc[-1]:.4f}"
                if has_test
                else ""
            )
            log(
                f"epoch {epoch + 1}: train_loss {history.train_loss[-1]:.6f}"
                f" train_acc {history.train_acc[-1]:.4f}{test_part}"
            )
        if cfg.early_stop_train_acc is not None:
            ok_train = history.train_acc[-1] >= cfg.early_stop_train_acc
            ok_test = (
                not has_test
                or cfg.early_stop_test_acc is None
                or history.test_acc[-1] >= cfg.early_stop_test_acc
            )
            if ok_train and ok_test:
                break

    if standardization is None:
        standardization = (np.zeros(cfg.input_len), np.ones(cfg.input_len))
    checkpoint = ModelCheckpoint(
        config=cfg,
        state=model.state_items(),
        history=history,
        feature_mean=np.asarray(standardization[0], dtype=np.float64),
        feature_std=np.asarray(standardization[1], dtype=np.float64),
    )
    return checkpoint, history


def predict(checkpoint: "ModelCheckpoint", feature_vector: np.ndarray) -> tuple[np.ndarray, int]:
    """Probabilities over the 7 classes and the argmax code for one vector."""
    from serpent.nn.checkpoint import restore_model

    vec = np.asarray(feature_vector, dtype=np.float64).ravel()
    if vec.shape != (checkpoint.config.input_len,):
        raise ShapeMismatch(
            f"feature vector has shape {vec.shape}, expected ({checkpoint.config.input_len},)"
        )
    model = restore_model(checkpoint)
    x = (vec - checkpoint.feature_mean) / checkpoint.feature_std
    probs = model.predict_proba(x[None, :])[0]
    return probs, int(probs.argmax())
