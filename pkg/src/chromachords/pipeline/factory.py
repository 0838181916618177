"""Factory for creating a real or fake chord predictor."""
from pathlib import Path
from typing import Optional, Union

from .interfaces import ChordPredictor


def create_predictor(
    use_fake_predictor: Optional[bool] = None,
    model_path: Optional[Union[str, Path]] = None,
    fallback_to_fake: bool = False,
) -> ChordPredictor:
    """
    Create the predictor used by generation and the HTTP service.

    Args:
        use_fake_predictor: If True, return the cadence-cycling fake. If None,
                            read it from settings.
        model_path: Checkpoint to load; defaults to settings.model_path.
        fallback_to_fake: Return the fake when the checkpoint does not exist
                          instead of failing.

    Raises:
        ModelLoadError: The checkpoint is missing or unreadable.
    """
    if use_fake_predictor is None or model_path is None:
        from ..core.config import settings
        if use_fake_predictor is None:
            use_fake_predictor = settings.use_fake_predictor
        if model_path is None:
            model_path = settings.model_path

    if use_fake_predictor or (fallback_to_fake and not Path(model_path).exists()):
        from .fake_clients import FakeChordPredictor
        return FakeChordPredictor()

    from .predictors import LstmChordPredictor
    return LstmChordPredictor.from_checkpoint(model_path)
