"""Data models for ChromaChords."""
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

N_PITCH_CLASSES = 12
DEFAULT_TICKS_PER_QUARTER = 480
DEFAULT_TEMPO_US = 500_000


class KeyMode(str, Enum):
    """Key mode enumeration."""
    MAJOR = "major"
    MINOR = "minor"


class Note(BaseModel):
    """A sounding note, in absolute ticks."""
    model_config = ConfigDict(frozen=True)

    pitch: int = Field(ge=0, le=127)
    onset: int = Field(ge=0)
    duration: int = Field(gt=0)
    velocity: int = Field(default=100, ge=1, le=127)
    track_index: int = Field(default=0, ge=0)

    @property
    def end(self) -> int:
        return self.onset + self.duration


class Track(BaseModel):
    """One instrument part: notes sorted by onset, ties by pitch."""
    model_config = ConfigDict(frozen=True)

    name: str = ""
    program: int = Field(default=0, ge=0, le=127)
    is_drum: bool = False
    notes: tuple[Note, ...] = ()

    @field_validator("notes")
    @classmethod
    def _sorted(cls, notes: tuple[Note, ...]) -> tuple[Note, ...]:
        keys = [(n.onset, n.pitch) for n in notes]
        if keys != sorted(keys):
            raise ValueError("track notes must be sorted by (onset, pitch)")
        return notes

    @property
    def mean_pitch(self) -> float:
        if not self.notes:
            return 0.0
        return float(np.mean([n.pitch for n in self.notes]))


class KeySignature(BaseModel):
    """A key-signature meta event."""
    model_config = ConfigDict(frozen=True)

    tonic_pc: int = Field(ge=0, le=11)
    mode: KeyMode = KeyMode.MAJOR
    tick: int = Field(default=0, ge=0)


class MidiSong(BaseModel):
    """Parsed multi-track song."""
    model_config = ConfigDict(frozen=True)

    ticks_per_quarter: int = Field(default=DEFAULT_TICKS_PER_QUARTER, gt=0)
    tempo_us_per_quarter: int = Field(default=DEFAULT_TEMPO_US, gt=0)
    tracks: tuple[Track, ...] = ()
    key_events: tuple[KeySignature, ...] = ()

    @model_validator(mode="after")
    def _track_indices(self) -> "MidiSong":
        for i, track in enumerate(self.tracks):
            for note in track.notes:
                if note.track_index != i:
                    raise ValueError(
                        f"note track_index {note.track_index} does not match track {i}"
                    )
        return self

    def ticks_to_seconds(self, ticks: int) -> float:
        """Convert ticks to seconds using the first tempo only."""
        return ticks * self.tempo_us_per_quarter / (self.ticks_per_quarter * 1_000_000)


class ArrayModel(BaseModel):
    """Base for frozen records carrying numpy arrays."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        for name in type(self).model_fields:
            a, b = getattr(self, name), getattr(other, name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True


class TrainingExample(ArrayModel):
    """(melody pitch class, accompanying chord histogram) pair."""
    melody_pc: int = Field(ge=0, le=11)
    chord: np.ndarray
    song_start: bool = False


class KeyExample(ArrayModel):
    """Whole-file histogram with its native key label."""
    histogram: np.ndarray
    tonic_pc: int = Field(ge=0, le=11)
    mode: KeyMode = KeyMode.MAJOR


class CorpusStats(BaseModel):
    """Counters collected while building a dataset."""
    files_seen: int = 0
    files_skipped_no_key: int = 0
    files_skipped_no_melody: int = 0
    files_skipped_malformed: int = 0
    examples_before_prune: int = 0
    examples_after_prune: int = 0

    def __add__(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(**{
            name: getattr(self, name) + getattr(other, name)
            for name in type(self).model_fields
        })

    def summary(self) -> str:
        """Human-readable summary, one counter per line."""
        return "\n".join(f"{name}={getattr(self, name)}" for name in type(self).model_fields) + "\n"


class ModelConfig(BaseModel):
    """Hyperparameters of the stacked-LSTM chord model."""
    model_config = ConfigDict(frozen=True)

    seq_len: int = Field(default=8, ge=1)
    input_dim: int = Field(default=13, ge=1)
    hidden_dim: int = Field(default=64, ge=1)
    num_layers: int = Field(default=3, ge=1)
    dropout_rate: float = Field(default=0.5, ge=0.0, lt=1.0)
    output_dim: int = Field(default=12, ge=1)
    learning_rate: float = Field(default=1e-4, gt=0.0)
    batch_size: int = Field(default=64, ge=1)
    seed: int = 0


class GenerationConfig(BaseModel):
    """Settings for harmonizing one melody file."""
    model_config = ConfigDict(frozen=True)

    tonic_pc: int = Field(default=0, ge=0, le=11)
    voicing_threshold: float = Field(default=0.14, gt=0.0, lt=1.0)
    overlap_threshold: float = Field(default=0.2, ge=0.0, lt=1.0)
    model_path: Optional[Path] = None


class VoicedChord(BaseModel):
    """Concrete pitches for one predicted chord."""
    model_config = ConfigDict(frozen=True)

    pitches: tuple[int, ...]
    root_pc: int = Field(ge=0, le=11)
    onset: int = Field(default=0, ge=0)
    duration: int = Field(default=1, gt=0)


class LatencyReport(BaseModel):
    """Per-prediction wall-clock statistics in milliseconds."""
    mean_ms: float
    p95_ms: float
    max_ms: float
    trials: int

    def to_lines(self) -> list[str]:
        return [
            f"mean_ms={self.mean_ms:.4f}",
            f"p95_ms={self.p95_ms:.4f}",
            f"max_ms={self.max_ms:.4f}",
            f"trials={self.trials}",
        ]


class GenerationResult(BaseModel):
    """Output of one harmonization run."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    song: MidiSong
    chords: list[Optional[VoicedChord]] = Field(default_factory=list)
    histograms: list[np.ndarray] = Field(default_factory=list)
    prediction_ms: list[float] = Field(default_factory=list)


# API request/response models

class VoiceRequest(BaseModel):
    """Request body for voicing one histogram."""
    histogram: list[float] = Field(min_length=12, max_length=12)
    tonic: Union[int, str] = 0
    threshold: float = Field(default=0.14, gt=0.0, lt=1.0)


class VoiceResponse(BaseModel):
    """Voiced pitches; empty for a silent beat."""
    pitches: list[int] = Field(default_factory=list)
    root_pc: Optional[int] = None


class StatusResponse(BaseModel):
    """Service status."""
    status: str
    version: str
    predictor: str
    model_loaded: bool
    use_fake_predictor: bool
    voicing_threshold: float
