"""HTTP service exposing the estimator, theory tables, and simulations.

Run with: uvicorn robust_psd.service.app:app
Domain errors from the core raise 400 with the core's message; schema
violations are FastAPI's standard 422.
"""
from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, mc, spectrum, tables, theory
from .. import taper as taper_mod
from . import models

app = FastAPI(title="robust-psd", version=__version__)


def _domain_guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _or_none(fn, *args):
    try:
        value = fn(*args)
    except ValueError:
        return None
    return None if isinstance(value, float) and math.isnan(value) else value


@app.get("/v1/health", response_model=models.HealthResponse)
def health() -> models.HealthResponse:
    return models.HealthResponse(status="ok", version=__version__)


@app.post("/v1/estimate", response_model=models.EstimateResponse)
def estimate(req: models.EstimateRequest) -> models.EstimateResponse:
    est = _domain_guard(
        spectrum.estimate_psd,
        np.asarray(req.samples, dtype=float),
        req.fs,
        n_seg=req.n_seg,
        overlap=req.overlap,
        window=req.window,
        quantile=req.quantile,
        bias_method=req.bias_method,
        use_edof=req.use_edof,
        edof_mode=req.edof_mode,
        detrend=req.detrend,
        mean=req.mean,
    )
    if req.sided == "one":
        est = _domain_guard(spectrum.one_sided, est)
    return models.EstimateResponse(
        frequency=est.freqs.tolist(),
        psd=est.psd.tolist(),
        fs=est.fs,
        method=est.method,
        k=est.k,
        edof=est.edof,
        q=est.q,
        bias_method=est.bias_method,
        bias_factor=est.bias_factor,
        effective_k=est.effective_k,
        sided=req.sided,
    )


@app.post("/v1/theory/bias", response_model=models.TheoryBiasResponse)
def theory_bias(req: models.TheoryBiasRequest) -> models.TheoryBiasResponse:
    rows = []
    for k in req.k_list:
        for q in req.q_list:
            harmonic = _domain_guard(theory.bias_factor, "harmonic", k, q)
            rows.append(
                models.TheoryBiasRow(
                    k=k,
                    q=q,
                    none=1.0,
                    allen=_or_none(theory.bias_factor, "allen", k, q),
                    harmonic=harmonic,
                    digamma=_or_none(theory.bias_factor, "digamma", k, q),
                    limit=_or_none(theory.bias_factor, "limit", k, q),
                )
            )
    return models.TheoryBiasResponse(rows=rows)


@app.post("/v1/theory/variance", response_model=models.TheoryVarianceResponse)
def theory_variance(
    req: models.TheoryVarianceRequest,
) -> models.TheoryVarianceResponse:
    rows = []
    for k in req.k_list:
        if k < 1:
            raise HTTPException(status_code=400, detail=f"k must be >= 1, got {k}")
        for q in req.q_list:
            rows.append(
                models.TheoryVarianceRow(
                    k=k,
                    q=q,
                    var_theory=_or_none(theory.variance_digamma, k, q, 1.0),
                    var_limit=_or_none(theory.variance_limit, k, q, 1.0),
                )
            )
    return models.TheoryVarianceResponse(rows=rows)


@app.post("/v1/theory/edof", response_model=models.TheoryEdofResponse)
def theory_edof(req: models.TheoryEdofRequest) -> models.TheoryEdofResponse:
    tp = _domain_guard(taper_mod.make_taper, req.window, req.n_seg)
    tp = taper_mod.normalize_energy(tp)
    n_overlap = int(np.floor(req.overlap * req.n_seg + 0.5))
    nu = _domain_guard(taper_mod.edof, tp, req.k, n_overlap, mode=req.mode)
    return models.TheoryEdofResponse(
        window=req.window,
        overlap=req.overlap,
        k=req.k,
        n_seg=req.n_seg,
        mode=req.mode,
        edof=nu,
        ratio=nu / (2.0 * req.k),
    )


@app.post("/v1/theory/optimum", response_model=models.TheoryOptimumResponse)
def theory_optimum(req: models.TheoryOptimumRequest) -> models.TheoryOptimumResponse:
    q_grid = np.round(np.arange(req.q_step, 1.0, req.q_step), 10)
    q_opt, table = _domain_guard(theory.scan_variance_optimum, req.k, q_grid)
    return models.TheoryOptimumResponse(
        k=req.k,
        q_opt=q_opt,
        rows=[models.TheoryOptimumRow(q=q, var=v) for q, v in table],
    )


@app.post("/v1/simulate", response_model=models.SimulateResponse)
def simulate(req: models.SimulateRequest) -> models.SimulateResponse:
    cfg = _domain_guard(
        mc.ExperimentConfig,
        k_list=tuple(req.k_list),
        q_list=tuple(req.q_list),
        trials=req.trials,
        seed=req.seed,
        n_seg=req.n_seg,
        overlap=req.overlap,
        window=req.window,
        bias_methods=tuple(req.bias_methods),
        use_edof=req.use_edof,
        edof_mode=req.edof_mode,
        sigma=req.sigma,
        fs=req.fs,
    )
    runner = (
        mc.run_bias_experiment if req.kind == "bias" else mc.run_variance_experiment
    )
    rows = _domain_guard(runner, cfg, threads=req.threads)
    out = [
        models.SimulateRow(
            k=r.k,
            edof_half=r.edof_half,
            q=r.q,
            method=r.method,
            bias_db=r.bias_db,
            var_sim=r.var_sim,
            var_theory=None if math.isnan(r.var_theory) else r.var_theory,
            var_limit=None if math.isnan(r.var_limit) else r.var_limit,
            trials=r.trials,
        )
        for r in rows
    ]
    meta = tables.experiment_metadata(cfg, req.kind)
    return models.SimulateResponse(metadata=meta, rows=out)
