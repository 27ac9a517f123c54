"""HTTP facade over the engine for interactive scenario exploration.

A thin transport: request fragments are parsed by the same config module
the CLI uses and answered with the same result documents, so a given
(dataset, config) pair yields identical numbers on either surface.
Datasets are immutable once uploaded and held in memory; there is no
persistent store, restarting clears sessions.

Sweeps larger than the inline threshold run as background jobs the
client polls via GET /jobs/{id}.
"""

from __future__ import annotations

import io
import itertools
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from . import __version__
from .config import parse_config
from .errors import AllocsimError, ConfigError, DataError
from .population import Population, load_population
from .reporting import analysis_cell_count, config_hash, run_analysis


def _error_body(err: Exception) -> dict:
    return {"error": type(err).__name__, "detail": str(err)}


class JobRegistry:
    """Single-process job queue with bounded workers."""

    def __init__(self, max_workers: int = 2):
        self._executor = ThreadPoolExecutor(max_workers=max_workers)
        self._jobs: dict[str, dict] = {}
        self._lock = threading.Lock()
        self._counter = itertools.count(1)

    def submit(self, fn) -> str:
        job_id = f"job-{next(self._counter)}"
        with self._lock:
            self._jobs[job_id] = {"status": "pending", "result": None, "error": None}

        def run():
            with self._lock:
                self._jobs[job_id]["status"] = "running"
            try:
                result = fn()
            except Exception as err:  # job errors surface via polling
                with self._lock:
                    self._jobs[job_id].update(status="failed", error=_error_body(err))
                return
            with self._lock:
                self._jobs[job_id].update(status="done", result=result)

        self._executor.submit(run)
        return job_id

    def get(self, job_id: str) -> dict | None:
        with self._lock:
            job = self._jobs.get(job_id)
            return None if job is None else dict(job)


def create_app(*, inline_threshold: int = 2000, workers: int = 1, job_workers: int = 2) -> FastAPI:
    app = FastAPI(title="allocsim service", version=__version__)
    datasets: dict[str, Population] = {}
    dataset_meta: dict[str, dict] = {}
    # results keyed by (engine version, config hash): the engine is
    # deterministic, so a hit reproduces the original numbers exactly
    result_cache: dict[tuple[str, str], dict] = {}
    jobs = JobRegistry(max_workers=job_workers)
    ids = itertools.count(1)

    @app.exception_handler(ConfigError)
    async def _config_error(_req, err):
        return JSONResponse(status_code=422, content=_error_body(err))

    @app.exception_handler(DataError)
    async def _data_error(_req, err):
        return JSONResponse(status_code=400, content=_error_body(err))

    @app.exception_handler(AllocsimError)
    async def _engine_error(_req, err):
        return JSONResponse(status_code=422, content=_error_body(err))

    @app.get("/health")
    def health():
        return {"status": "ok", "engine_version": __version__}

    @app.post("/datasets")
    def upload_dataset(body: dict):
        content = body.get("content")
        schema = body.get("schema") or {}
        if not isinstance(content, str) or not content:
            raise DataError("body needs a non-empty 'content' string with delimited text")
        if "outcome_col" not in schema or "prediction_col" not in schema:
            raise DataError("schema needs outcome_col and prediction_col")
        pop = load_population(
            io.StringIO(content),
            outcome_col=schema["outcome_col"],
            prediction_col=schema["prediction_col"],
            labeled_col=schema.get("labeled_col"),
            weight_col=schema.get("weight_col"),
            group_cols=schema.get("group_cols", []),
            id_col=schema.get("id_col"),
            outcome_direction=body.get("direction", "higher_is_risk"),
            delimiter=schema.get("delimiter"),
            missing=schema.get("missing", ""),
        )
        dataset_id = f"ds-{next(ids)}"
        datasets[dataset_id] = pop
        outcomes = pop.outcomes[np.isfinite(pop.outcomes)]
        summary = (
            {"mean": float(outcomes.mean()), "min": float(outcomes.min()),
             "max": float(outcomes.max())}
            if len(outcomes)
            else {"mean": None, "min": None, "max": None}
        )
        dataset_meta[dataset_id] = {
            "dataset_id": dataset_id,
            "name": body.get("name") or dataset_id,
            "size": pop.size,
            "labeled_share": float(pop.labeled.mean()),
            "outcome_summary": summary,
        }
        return dataset_meta[dataset_id]

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        meta = dataset_meta.get(dataset_id)
        if meta is None:
            return JSONResponse(status_code=404, content={"error": "NotFound",
                                                          "detail": dataset_id})
        return meta

    def parse_request(body: dict, expected_kind: str):
        if not isinstance(body, dict):
            raise ConfigError("request body must be a config mapping")
        population = None
        dataset_id = body.get("dataset_id")
        if dataset_id is not None:
            population = datasets.get(dataset_id)
            if population is None:
                raise DataError(f"unknown dataset {dataset_id!r}")
        cfg = parse_config(body, population=population)
        if cfg.analysis["kind"] != expected_kind:
            raise ConfigError(
                f"endpoint runs {expected_kind!r}, config declares {cfg.analysis['kind']!r}",
                field="analysis.kind",
            )
        return cfg

    def answer(body: dict, expected_kind: str):
        # the echo token is transport metadata: strip it before parsing so
        # the config hash matches the CLI's for the same fragment
        token = body.get("client_token")
        fragment = {k: v for k, v in body.items() if k != "client_token"}
        cfg = parse_request(fragment, expected_kind)
        cache_key = (__version__, config_hash(cfg.raw))

        def with_token(response: dict) -> dict:
            if token is not None:
                return {**response, "client_token": token}
            return response

        def compute():
            document, rows = run_analysis(cfg, workers=workers)
            response: dict[str, Any] = dict(document)
            response["table"] = rows
            result_cache[cache_key] = response
            return with_token(response)

        cached = result_cache.get(cache_key)
        if cached is not None:
            return with_token(cached)
        if analysis_cell_count(cfg) > inline_threshold:
            job_id = jobs.submit(compute)
            return JSONResponse(
                status_code=202,
                content={"job_id": job_id, "status": "pending",
                         "config_hash": config_hash(cfg.raw),
                         **({"client_token": token} if token is not None else {})},
            )
        return compute()

    @app.post("/evaluate")
    def evaluate_endpoint(body: dict):
        return answer(body, "evaluate")

    @app.post("/curve")
    def curve_endpoint(body: dict):
        return answer(body, "curve")

    @app.post("/break-even")
    def break_even_endpoint(body: dict):
        return answer(body, "break_even")

    @app.post("/ratio-grid")
    def ratio_grid_endpoint(body: dict):
        return answer(body, "ratio_grid")

    @app.post("/optimize")
    def optimize_endpoint(body: dict):
        return answer(body, "optimize_budget")

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": "NotFound",
                                                          "detail": job_id})
        body = {"job_id": job_id, "status": job["status"]}
        if job["status"] == "done":
            body["result"] = job["result"]
        if job["status"] == "failed":
            body["error"] = job["error"]
        return body

    return app
