"""Exception types raised across the pipeline."""


class SerpentError(Exception):
    """Base class for all pipeline errors."""


# audio I/O
class MalformedContainer(SerpentError):
    pass


class UnsupportedEncoding(SerpentError):
    pass


class EmptyAudio(SerpentError):
    pass


class OffsetPastEnd(SerpentError):
    pass


# framing / DSP
class ClipTooShort(SerpentError):
    pass


class InvalidBand(SerpentError):
    pass


# augmentation
class RateOutOfRange(SerpentError):
    pass


class SemitonesOutOfRange(SerpentError):
    pass


# neural network
class ShapeMismatch(SerpentError):
    pass


class DegenerateBatch(SerpentError):
    pass


class EmptyDataset(SerpentError):
    pass


class NonFiniteLoss(SerpentError):
    pass


class BadCheckpoint(SerpentError):
    pass


# dataset ingest / split
class UnrecognizedPattern(SerpentError):
    pass


class UnknownCode(SerpentError):
    pass


class UnknownEmotion(SerpentError):
    pass


class MissingFile(SerpentError):
    pass


class MalformedCsv(SerpentError):
    pass


class TooFewRows(SerpentError):
    pass


class EmptyTrainSet(SerpentError):
    pass


# diarization
class SegmentTooShort(SerpentError):
    pass


class MalformedRttm(SerpentError):
    pass


class EmptyReference(SerpentError):
    pass


# metrics
class EmptyMatrix(SerpentError):
    pass


class LengthMismatch(SerpentError):
    pass


class InvalidLabel(SerpentError):
    pass
