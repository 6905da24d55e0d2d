"""FastAPI application exposing the simulator over HTTP."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import ValidationError

from .. import __version__
from ..experiments import PRESET_NAMES
from . import ops
from .models import (
    BeamformRequest,
    BeamformResponse,
    EstimateRequest,
    EstimateResponse,
    GenChannelsRequest,
    GenChannelsResponse,
    HealthResponse,
    ReproduceRequest,
    RowsResponse,
    SweepRequest,
    ValidateRequest,
    ValidateResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="bios-mimo", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__, presets=list(PRESET_NAMES))

    @app.post("/api/validate", response_model=ValidateResponse)
    def validate(request: ValidateRequest):
        try:
            return ops.validate(request)
        except (ValidationError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=_error_detail(exc))

    @app.post("/api/channels", response_model=GenChannelsResponse)
    def gen_channels(request: GenChannelsRequest):
        return ops.gen_channels(request)

    @app.post("/api/estimate", response_model=EstimateResponse)
    def estimate(request: EstimateRequest):
        try:
            return ops.estimate(request)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/api/beamform", response_model=BeamformResponse)
    def beamform(request: BeamformRequest):
        try:
            return ops.beamform(request)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/api/sweep", response_model=RowsResponse)
    def sweep(request: SweepRequest):
        return ops.sweep(request)

    @app.post("/api/reproduce", response_model=RowsResponse)
    def reproduce(request: ReproduceRequest):
        if request.preset not in PRESET_NAMES:
            raise HTTPException(
                status_code=422,
                detail=f"unknown preset {request.preset!r}; choose from {PRESET_NAMES}",
            )
        return ops.reproduce(request)

    return app


def _error_detail(exc: Exception):
    if isinstance(exc, ValidationError):
        return [
            {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
    return str(exc)


app = create_app()
