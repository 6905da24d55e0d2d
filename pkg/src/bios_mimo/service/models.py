"""Pydantic request/response models shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from ..config import SystemConfig
from ..experiments import Scenario


class ComplexMatrix(BaseModel):
    """Dense complex matrix split into real/imaginary parts for JSON."""

    re: list[list[float]]
    im: list[list[float]]

    @classmethod
    def wrap(cls, x: np.ndarray) -> "ComplexMatrix":
        x = np.atleast_2d(np.asarray(x, dtype=complex))
        return cls(re=x.real.tolist(), im=x.imag.tolist())

    def unwrap(self) -> np.ndarray:
        return np.asarray(self.re, dtype=float) + 1j * np.asarray(self.im, dtype=float)


class ComplexVector(BaseModel):
    re: list[float]
    im: list[float]

    @classmethod
    def wrap(cls, x: np.ndarray) -> "ComplexVector":
        x = np.asarray(x, dtype=complex).ravel()
        return cls(re=x.real.tolist(), im=x.imag.tolist())

    def unwrap(self) -> np.ndarray:
        return np.asarray(self.re, dtype=float) + 1j * np.asarray(self.im, dtype=float)


class ChannelsModel(BaseModel):
    """One channel realization on the wire."""

    g: ComplexMatrix
    h: list[ComplexMatrix]
    l: ComplexMatrix
    k_fle: int


class EstimatesModel(BaseModel):
    g_hat: ComplexMatrix
    h_hat: list[ComplexMatrix]


class NMSEModel(BaseModel):
    nmse_fra: float
    nmse_avg: float
    per_ue: list[float]


class RateModel(BaseModel):
    per_ue: list[float]
    sum_rate: float
    overhead_factor: float


class ValidateRequest(BaseModel):
    config: dict = Field(default_factory=dict)


class ValidateResponse(BaseModel):
    config: SystemConfig


class GenChannelsRequest(BaseModel):
    config: SystemConfig = Field(default_factory=SystemConfig)
    seed: int = 0


class GenChannelsResponse(BaseModel):
    channels: ChannelsModel


class EstimateRequest(BaseModel):
    config: SystemConfig = Field(default_factory=SystemConfig)
    seed: int = 0
    channels: ChannelsModel | None = None


class EstimateResponse(BaseModel):
    estimates: EstimatesModel
    nmse: NMSEModel
    overhead: int
    iterations: int
    objective_tail: list[float]


class BeamformRequest(BaseModel):
    config: SystemConfig = Field(default_factory=SystemConfig)
    seed: int = 0
    channels: ChannelsModel | None = None
    estimates: EstimatesModel | None = None
    mode: Literal["bios", "ios", "irs"] = "bios"
    count_overhead: bool = False


class BeamformResponse(BaseModel):
    phi_d1: ComplexVector
    phi_d2: ComplexVector
    rate: RateModel
    iterations: int
    objective_tail: list[float]


class SweepRequest(BaseModel):
    scenario: Scenario


class RowsResponse(BaseModel):
    rows: list[dict]
    summary: list[dict]


class ReproduceRequest(BaseModel):
    preset: str
    trials: int | None = None
    seed: int = 0
    full: bool = False


class HealthResponse(BaseModel):
    status: str
    version: str
    presets: list[str]
