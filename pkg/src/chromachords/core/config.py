"""Configuration management for ChromaChords."""
import os
from pathlib import Path
from typing import Optional

from dotenv import dotenv_values
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

ENV_PREFIX = "CHROMACHORDS_"


class Settings(BaseSettings):
    """
    Toolchain settings.

    Precedence: explicit keyword arguments (CLI flags) > environment
    variables (CHROMACHORDS_*) > config file (flat key=value, dotenv syntax)
    > defaults below.
    """

    # Paths
    corpus_dir: Path = Path("./data/midi")
    dataset_path: Path = Path("./data/dataset.chrd")
    key_model_path: Path = Path("./data/key_model.keyc")
    model_path: Path = Path("./data/model.ckpt")
    output_path: Path = Path("./data/harmonized.mid")
    log_dir: Path = Path("./data/logs")

    # Melody selection / voicing
    overlap_threshold: float = 0.2
    voicing_threshold: float = 0.14

    # Chord model hyperparameters
    seq_len: int = Field(default=8, ge=1)
    hidden_dim: int = Field(default=64, ge=1)
    num_layers: int = Field(default=3, ge=1)
    dropout_rate: float = Field(default=0.5, ge=0.0, lt=1.0)
    learning_rate: float = Field(default=1e-4, gt=0.0)
    batch_size: int = Field(default=64, ge=1)
    epochs: int = Field(default=10, ge=0)

    # Key classifier
    pca_components: int = Field(default=9, ge=1, le=12)
    svm_c: float = Field(default=0.5, gt=0.0)
    svm_gamma: float = Field(default=1.0, gt=0.0)
    svm_degree: int = 1  # recorded only; the RBF kernel ignores it
    svm_tol: float = Field(default=1e-3, gt=0.0)
    svm_max_iter: int = Field(default=10_000, ge=1)

    # Reproducibility and parallelism
    seed: int = 0
    workers: int = Field(default=1, ge=1)

    # Server settings
    host: str = "127.0.0.1"
    port: int = 8000

    # Predictor mode
    use_fake_predictor: bool = False

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix=ENV_PREFIX,
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("voicing_threshold")
    @classmethod
    def _open_unit_interval(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"threshold must lie in (0, 1), got {value}")
        return value

    @field_validator("overlap_threshold")
    @classmethod
    def _overlap_range(cls, value: float) -> float:
        # 0.0 is accepted: only perfectly monophonic tracks qualify then
        if not 0.0 <= value < 1.0:
            raise ValueError(f"overlap threshold must lie in [0, 1), got {value}")
        return value


def load_settings(config_file: Optional[Path] = None, **overrides) -> Settings:
    """
    Build settings from an optional config file plus explicit overrides.

    The config file is flat key=value (dotenv syntax); keys may carry the
    CHROMACHORDS_ prefix or not. An environment variable or a `.env` entry
    beats the file for the same key, and overrides beat all of them.
    Overrides whose value is None are dropped so that unset CLI flags fall
    through to the lower layers.
    """
    values: dict[str, object] = {}
    if config_file is not None:
        if not Path(config_file).exists():
            raise FileNotFoundError(f"Config file not found: {config_file}")
        environ = {k.upper() for k in os.environ}
        env_file = Path(Settings.model_config.get("env_file") or ".env")
        if env_file.is_file():
            environ.update(k.upper() for k in dotenv_values(env_file))
        for key, value in dotenv_values(config_file).items():
            name = key.lower().removeprefix(ENV_PREFIX.lower())
            if value is None or f"{ENV_PREFIX}{name}".upper() in environ:
                continue
            values[name] = value
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Settings(**values)


# Global settings instance
settings = Settings()
