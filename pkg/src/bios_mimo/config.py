"""System configuration: defaults, validation, file loading, env overrides.

Config files are flat JSON objects keyed by the field names below. Any field
can also be overridden from the environment with the ``BIOS_MIMO_`` prefix,
e.g. ``BIOS_MIMO_T_G=600``.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from pydantic import BaseModel, Field, model_validator

from .estimation import EstimationConfig
from .geometry import ArrayGeometry

ENV_PREFIX = "BIOS_MIMO_"


class SystemConfig(BaseModel):
    """Dimensions, power split, timescales, pilot budgets, and noise levels."""

    n_bs: int = Field(default=8, ge=1)
    n_ue: int = Field(default=8, ge=1)
    m_x: int = Field(default=7, ge=1)
    m_y: int = Field(default=7, ge=1)
    wavelength: float = Field(default=0.03, gt=0)
    layer_gap: float = Field(default=0.03, gt=0)
    element_size: float | None = Field(default=None, gt=0)
    eps: float = Field(default=0.5, gt=0, lt=1)
    k_fle: int = Field(default=2, ge=0)
    k_fra: int = Field(default=3, ge=0)
    p: int = Field(default=5, ge=1)
    q: int = Field(default=5, ge=1)
    t_g: int = Field(default=900, ge=1)
    t_h: int = Field(default=75, ge=1)
    y_large: int = Field(default=10000, ge=1)
    y_small: int = Field(default=2500, ge=1)
    pnr_db: float = 20.0
    snr_db: float = 10.0
    n_s: int = Field(default=1, ge=1)
    phase_hold: int = Field(default=1, ge=1)  # pilots per surface phase draw
    k_c: int | None = Field(default=None, ge=0)
    upsilon_g: float | None = Field(default=None, ge=0)
    upsilon_h: float | None = Field(default=None, ge=0)
    trials: int = Field(default=200, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        if self.k_fle + self.k_fra < 1:
            raise ValueError("at least one UE is required")
        if self.y_large < self.y_small:
            raise ValueError("y_large must be at least y_small")
        if self.y_large % self.y_small != 0:
            raise ValueError("y_large must be an integer multiple of y_small")
        if self.k_c is not None:
            if not (self.k_fle <= self.k_c < self.k_fle + self.k_fra):
                raise ValueError(
                    "k_c must index a refraction-side UE "
                    f"({self.k_fle} <= k_c < {self.k_fle + self.k_fra})"
                )
        return self

    @property
    def k(self) -> int:
        return self.k_fle + self.k_fra

    @property
    def m(self) -> int:
        return self.m_x * self.m_y

    @property
    def tau(self) -> int:
        return self.y_large // self.y_small

    def helper_ue(self) -> int:
        """0-based index of the UE that trains the large timescale."""
        if self.k_fra == 0:
            raise ValueError(
                "the two-timescale estimator needs a refraction-side UE to train from"
            )
        return self.k_c if self.k_c is not None else self.k_fle

    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(
            n_bs=self.n_bs,
            n_ue=self.n_ue,
            m_x=self.m_x,
            m_y=self.m_y,
            wavelength=self.wavelength,
            layer_gap=self.layer_gap,
            element_size=self.element_size,
        )

    def estimation(self, **overrides) -> EstimationConfig:
        base = dict(
            t_g=self.t_g,
            t_h=self.t_h,
            tau=self.tau,
            upsilon_g=self.upsilon_g,
            upsilon_h=self.upsilon_h,
            k_c=self.helper_ue() if self.k_fra > 0 else None,
        )
        base.update(overrides)
        return EstimationConfig(**base)


def apply_env_overrides(raw: dict, environ: dict | None = None) -> dict:
    """Overlay BIOS_MIMO_* environment variables onto a raw config dict."""
    environ = os.environ if environ is None else environ
    out = dict(raw)
    for field_name in SystemConfig.model_fields:
        key = ENV_PREFIX + field_name.upper()
        if key in environ:
            out[field_name] = environ[key]
    return out


def validate_config(raw: dict | None = None, use_env: bool = False) -> SystemConfig:
    """Build a SystemConfig from a flat mapping; invalid fields are reported
    by pydantic with their field paths. An empty input yields the defaults."""
    raw = dict(raw or {})
    if use_env:
        raw = apply_env_overrides(raw)
    return SystemConfig(**raw)


def load_config(path: str | Path | None, use_env: bool = True) -> SystemConfig:
    """Read a flat JSON config file (missing path: defaults) and apply
    environment overrides on top."""
    raw: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ValueError("config file must contain a flat JSON object")
    return validate_config(raw, use_env=use_env)
