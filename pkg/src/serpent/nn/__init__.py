"""From-scratch tensor layers, Adam, backpropagation, and the emotion CNN."""

from serpent.nn.layers import (
    BatchNorm,
    Conv1D,
    Dense,
    Dropout,
    Flatten,
    MaxPool1D,
    ReLU,
    Softmax,
    TrainContext,
)
from serpent.nn.loss import cce_loss
from serpent.nn.model import Model, ModelConfig, TrainingHistory, build_ser_model, predict, train
from serpent.nn.optim import Adam
from serpent.nn.checkpoint import ModelCheckpoint, load_checkpoint, restore_model, save_checkpoint

__all__ = [
    "Adam",
    "BatchNorm",
    "Conv1D",
    "Dense",
    "Dropout",
    "Flatten",
    "MaxPool1D",
    "Model",
    "ModelCheckpoint",
    "ModelConfig",
    "ReLU",
    "Softmax",
    "TrainContext",
    "TrainingHistory",
    "build_ser_model",
    "cce_loss",
    "load_checkpoint",
    "predict",
    "restore_model",
    "save_checkpoint",
    "train",
]
