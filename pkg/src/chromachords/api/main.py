"""FastAPI application for ChromaChords."""
from typing import Optional

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, Request, UploadFile
from fastapi.responses import Response
from pydantic import ValidationError

from .. import __version__
from ..core.config import settings
from ..core.errors import ChromaChordsError, ModelLoadError
from ..core.models import GenerationConfig, StatusResponse, VoiceRequest, VoiceResponse
from ..core.parsing import parse_tonic
from ..midi.smf import parse_midi, write_midi
from ..pipeline.factory import create_predictor
from ..pipeline.interfaces import ChordPredictor
from ..pipeline.runner import HarmonizerRunner
from ..pipeline.voicing import voice_chord


def create_app(predictor: Optional[ChordPredictor] = None) -> FastAPI:
    """
    Build the app around a predictor.

    Without one, the predictor comes from settings: the checkpoint at
    settings.model_path, or the fake when it is configured or missing.
    """
    app = FastAPI(
        title="ChromaChords API",
        description="Melody harmonization with chroma-histogram chord prediction",
        version=__version__,
    )
    if predictor is None:
        try:
            predictor = create_predictor(fallback_to_fake=True)
        except ModelLoadError as e:
            print(f"[API] ❌ {e}")
            raise
    app.state.runner = HarmonizerRunner(predictor)
    print(f"[API] Predictor: {predictor.describe()}")

    @app.get("/status", response_model=StatusResponse)
    async def get_status(request: Request):
        """Get service status and configuration."""
        current = request.app.state.runner.predictor
        return StatusResponse(
            status="running",
            version=__version__,
            predictor=current.describe(),
            model_loaded=current.__class__.__name__ == "LstmChordPredictor",
            use_fake_predictor=settings.use_fake_predictor,
            voicing_threshold=settings.voicing_threshold,
        )

    @app.post("/harmonize")
    async def harmonize(
        request: Request,
        melody: UploadFile = File(..., description="Standard MIDI file with the melody"),
        tonic: str = Form("C", description="Tonic of the melody's major key, name or 0-11"),
        threshold: Optional[float] = Form(None, description="Voicing threshold in (0, 1)"),
    ):
        """Harmonize an uploaded melody and return melody + accompaniment as MIDI."""
        try:
            config = GenerationConfig(
                tonic_pc=parse_tonic(tonic),
                voicing_threshold=settings.voicing_threshold if threshold is None else threshold,
                overlap_threshold=settings.overlap_threshold,
            )
            song = parse_midi(await melody.read())
            result = request.app.state.runner.harmonize(song, config)
        except (ChromaChordsError, ValidationError) as e:
            raise HTTPException(status_code=400, detail=str(e))

        mean_ms = float(np.mean(result.prediction_ms)) if result.prediction_ms else 0.0
        return Response(
            content=write_midi(result.song),
            media_type="audio/midi",
            headers={
                "X-Chord-Count": str(sum(c is not None for c in result.chords)),
                "X-Note-Count": str(len(result.chords)),
                "X-Mean-Prediction-Ms": f"{mean_ms:.4f}",
            },
        )

    @app.post("/voice", response_model=VoiceResponse)
    async def voice(body: VoiceRequest):
        """Voice one C-aligned histogram in the given key."""
        try:
            tonic_pc = parse_tonic(body.tonic)
        except ChromaChordsError as e:
            raise HTTPException(status_code=400, detail=str(e))
        chord = voice_chord(body.histogram, tonic_pc, body.threshold)
        if chord is None:
            return VoiceResponse()
        return VoiceResponse(pitches=list(chord.pitches), root_pc=chord.root_pc)

    return app
