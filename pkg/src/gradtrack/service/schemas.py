"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    """A config file's text plus optional CLI-style overrides."""

    config_text: str
    seed: int | None = Field(default=None, ge=0, lt=1 << 64)
    trials: int | None = Field(default=None, ge=1)


class ArtifactResponse(BaseModel):
    """Named artifact files (CSV/JSON text) produced by one command."""

    out_dir: str
    files: dict[str, str]


class SweepResponse(ArtifactResponse):
    summary: dict
    failed_fraction: float
    ok: bool


class SelftestResponse(BaseModel):
    ok: bool
    lines: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str
