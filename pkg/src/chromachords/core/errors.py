"""Exception hierarchy for ChromaChords."""


class ChromaChordsError(Exception):
    """Base class for every domain error raised by the toolchain."""


class InvalidParameter(ChromaChordsError, ValueError):
    """An argument is outside its documented range."""


# MIDI

class MalformedFile(ChromaChordsError):
    """Bad chunk structure or truncated MIDI data."""


class UnsupportedFormat(ChromaChordsError):
    """SMF format 2 or SMPTE time division."""


class InvalidSong(ChromaChordsError):
    """A MidiSong violates its invariants."""


# Chroma

class NegativeWeight(ChromaChordsError, ValueError):
    """A histogram weight was negative."""


# Key classifier

class EmptyInput(ChromaChordsError):
    """No examples were supplied."""


class DegenerateData(ChromaChordsError):
    """Data has no variance, or too few samples for the requested fit."""


class InsufficientClasses(ChromaChordsError):
    """Fewer than two distinct labels in the training data."""


# Dataset

class InvalidTrack(ChromaChordsError):
    """Track index out of range or pointing at a drum track."""


class EmptyCorpus(ChromaChordsError):
    """The corpus directory contains no MIDI files."""


# Model

class ShapeMismatch(ChromaChordsError, ValueError):
    """Input shape does not match the model configuration."""


class NonFiniteActivation(ChromaChordsError, FloatingPointError):
    """NaN or infinity appeared in a forward pass."""


class NegativeInput(ChromaChordsError, ValueError):
    """MSLE received a negative prediction or target."""


class DatasetTooSmall(ChromaChordsError):
    """No song is longer than the sequence length."""


class VersionMismatch(ChromaChordsError):
    """A persisted file has an unknown format version."""


class CorruptCheckpoint(ChromaChordsError):
    """Checksum mismatch or truncated checkpoint/model file."""


# Harmonizer

class NoMelodyTrack(ChromaChordsError):
    """No melody track could be selected from the input file."""


class ModelLoadError(ChromaChordsError):
    """The chord model could not be loaded."""
