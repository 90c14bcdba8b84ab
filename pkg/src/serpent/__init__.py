"""Speech emotion recognition pipeline.

Decodes WAV audio into canonical mono clips, extracts 22-dimensional
acoustic feature vectors (ZCR, RMS, 20 MFCC means), augments training data,
trains a from-scratch 1D CNN over seven emotion classes, and diarizes
multi-speaker audio with RTTM output.
"""

__version__ = "0.1.0"

from serpent.audio_io import AudioClip, crop, decode_wav, encode_wav, resample
from serpent.augment import AugmentConfig, add_noise, augment_set, pitch_shift, time_shift, time_stretch
from serpent.dataset import EMOTIONS, EmotionLabel, one_hot, split, standardize
from serpent.diarization import Segment, der, diarize, parse_rttm, write_rttm
from serpent.dsp import FEATURE_LEN, FrameConfig, extract_features, mel_filterbank, mfcc, rms, stft, zcr
from serpent.metrics import accuracy, confusion_matrix, precision_recall_f1, render_report
from serpent.nn import ModelConfig, build_ser_model, load_checkpoint, predict, save_checkpoint, train

__all__ = [
    "AudioClip",
    "AugmentConfig",
    "EMOTIONS",
    "EmotionLabel",
    "FEATURE_LEN",
    "FrameConfig",
    "ModelConfig",
    "Segment",
    "accuracy",
    "add_noise",
    "augment_set",
    "build_ser_model",
    "confusion_matrix",
    "crop",
    "decode_wav",
    "der",
    "diarize",
    "encode_wav",
    "extract_features",
    "load_checkpoint",
    "mel_filterbank",
    "mfcc",
    "one_hot",
    "parse_rttm",
    "pitch_shift",
    "precision_recall_f1",
    "predict",
    "render_report",
    "resample",
    "rms",
    "save_checkpoint",
    "split",
    "standardize",
    "stft",
    "time_shift",
    "time_stretch",
    "train",
    "write_rttm",
    "zcr",
]
