"""FastAPI app exposing the experiment runner to multiple clients.

Long operations (runs, grids) return 202 with a job id and run in the
background; reports and footprint math answer synchronously. Configuration
problems surface as 422 with the offending dotted field name.
"""

from __future__ import annotations

from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import ExperimentConfig
from ..errors import ConfigError, WbrError
from ..experiments import build_report, footprint_report, run_experiment, run_grid
from .jobs import JobRegistry
from .schemas import (
    FootprintRequest,
    GridRequest,
    JobStatus,
    JobSubmitted,
    ReportRequest,
    RunRequest,
)

API = "/api/v1"


def create_app() -> FastAPI:
    registry = JobRegistry()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        registry.shutdown()

    app = FastAPI(title="wbr service", version=__version__, lifespan=lifespan)
    app.state.jobs = registry

    @app.exception_handler(ConfigError)
    async def config_error(request: Request, exc: ConfigError):
        return JSONResponse(
            status_code=422,
            content={"detail": [{"loc": exc.field.split("."), "msg": exc.message}]},
        )

    @app.exception_handler(WbrError)
    async def wbr_error(request: Request, exc: WbrError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get(API + "/health")
    async def health():
        return {"status": "ok", "version": __version__}

    @app.post(API + "/runs", response_model=JobSubmitted, status_code=202)
    async def submit_run(body: RunRequest):
        cfg = ExperimentConfig.from_dict(body.to_raw())  # reject bad configs now
        job = registry.submit("run", lambda: run_experiment(cfg))
        return JobSubmitted(job_id=job.job_id, kind=job.kind,
                            status_url=f"{API}/jobs/{job.job_id}")

    @app.post(API + "/grids", response_model=JobSubmitted, status_code=202)
    async def submit_grid(body: GridRequest):
        cfg = ExperimentConfig.from_dict(body.to_raw())
        axes = dict(body.axes)
        jobs = body.jobs

        def work() -> dict:
            rows = run_grid(cfg, axes, jobs=jobs)
            return {"cells": rows, "output_dir": cfg.output_dir}

        job = registry.submit("grid", work)
        return JobSubmitted(job_id=job.job_id, kind=job.kind,
                            status_url=f"{API}/jobs/{job.job_id}")

    @app.get(API + "/jobs/{job_id}", response_model=JobStatus)
    async def job_status(job_id: str):
        try:
            job = registry.get(job_id)
        except KeyError:
            return JSONResponse(status_code=404, content={"detail": f"no job {job_id}"})
        return JobStatus(job_id=job.job_id, kind=job.kind, state=job.state, error=job.error)

    @app.get(API + "/jobs/{job_id}/result")
    async def job_result(job_id: str):
        try:
            job = registry.get(job_id)
        except KeyError:
            return JSONResponse(status_code=404, content={"detail": f"no job {job_id}"})
        if job.state == "error":
            return JSONResponse(status_code=400, content={"detail": job.error})
        if job.state != "done":
            return JSONResponse(status_code=409, content={"detail": f"job is {job.state}"})
        return job.result

    @app.post(API + "/reports")
    async def make_report(body: ReportRequest):
        markdown = build_report(body.runs, body.output, baseline_dir=body.baseline)
        return {"output": body.output, "markdown": markdown}

    @app.post(API + "/footprint")
    async def footprint(body: FootprintRequest):
        return footprint_report(body.store, body.shape)

    return app
