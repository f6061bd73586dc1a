"""HTTP service exposing the experiment harness.

Endpoints mirror the CLI subcommands and return artifact files inline, so a
thin client can write them wherever it likes.  Configuration problems map to
422 with a stable error code; pipeline-stage failures map to 409.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import ExperimentConfig, parse_config, with_overrides
from ..errors import ConfigError, GradtrackError
from ..harness import (
    diagnose_artifacts,
    selftest,
    simulate_artifacts,
    sweep_artifacts,
    track_artifacts,
)
from .schemas import (
    ArtifactResponse,
    HealthResponse,
    RunRequest,
    SelftestResponse,
    SweepResponse,
)


def _load(req: RunRequest) -> ExperimentConfig:
    try:
        cfg = parse_config(req.config_text)
        return with_overrides(cfg, seed=req.seed, trials=req.trials)
    except ConfigError as err:
        raise HTTPException(
            status_code=422, detail={"code": err.code, "message": str(err)}
        ) from err


def _run(builder, cfg: ExperimentConfig) -> dict[str, str]:
    try:
        return builder(cfg)
    except ConfigError as err:
        raise HTTPException(
            status_code=422, detail={"code": err.code, "message": str(err)}
        ) from err
    except GradtrackError as err:
        raise HTTPException(
            status_code=409, detail={"code": err.code, "message": str(err)}
        ) from err


def create_app() -> FastAPI:
    app = FastAPI(title="gradtrack", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/v1/simulate", response_model=ArtifactResponse)
    def simulate(req: RunRequest) -> ArtifactResponse:
        cfg = _load(req)
        return ArtifactResponse(out_dir=cfg.out_dir, files=_run(simulate_artifacts, cfg))

    @app.post("/v1/track", response_model=ArtifactResponse)
    def track(req: RunRequest) -> ArtifactResponse:
        cfg = _load(req)
        return ArtifactResponse(out_dir=cfg.out_dir, files=_run(track_artifacts, cfg))

    @app.post("/v1/diagnose", response_model=ArtifactResponse)
    def diagnose(req: RunRequest) -> ArtifactResponse:
        cfg = _load(req)
        return ArtifactResponse(out_dir=cfg.out_dir, files=_run(diagnose_artifacts, cfg))

    @app.post("/v1/sweep", response_model=SweepResponse)
    def sweep(req: RunRequest) -> SweepResponse:
        cfg = _load(req)

        def build(c: ExperimentConfig):
            return sweep_artifacts(c)

        files, result = _run(build, cfg)
        return SweepResponse(
            out_dir=cfg.out_dir,
            files=files,
            summary=result.summary,
            failed_fraction=result.failed_fraction,
            ok=result.ok,
        )

    @app.post("/v1/selftest", response_model=SelftestResponse)
    def run_selftest() -> SelftestResponse:
        ok, lines = selftest()
        return SelftestResponse(ok=ok, lines=lines)

    return app
