"""Service operations: the single implementation behind both the HTTP routes
and the in-process CLI execution."""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from .. import beamforming as bf
from .. import estimation as est
from .. import geometry as geo
from .. import signal_model as sm
from ..config import SystemConfig, validate_config
from ..experiments import run_preset, run_scenario, summarize
from .models import (
    BeamformRequest,
    BeamformResponse,
    ChannelsModel,
    ComplexMatrix,
    ComplexVector,
    EstimateRequest,
    EstimateResponse,
    EstimatesModel,
    GenChannelsRequest,
    GenChannelsResponse,
    NMSEModel,
    RateModel,
    ReproduceRequest,
    RowsResponse,
    SweepRequest,
    ValidateRequest,
    ValidateResponse,
)


def channels_to_model(realization: geo.ChannelRealization) -> ChannelsModel:
    return ChannelsModel(
        g=ComplexMatrix.wrap(realization.g),
        h=[ComplexMatrix.wrap(h) for h in realization.h],
        l=ComplexMatrix.wrap(realization.l),
        k_fle=realization.k_fle,
    )


def model_to_channels(model: ChannelsModel) -> geo.ChannelRealization:
    return geo.ChannelRealization(
        g=model.g.unwrap(),
        h=[h.unwrap() for h in model.h],
        l=model.l.unwrap(),
        k_fle=model.k_fle,
    )


def _get_channels(
    channels: ChannelsModel | None, config: SystemConfig, rng: np.random.Generator
) -> geo.ChannelRealization:
    if channels is not None:
        return model_to_channels(channels)
    return geo.draw_channel_set(
        rng, config.geometry(), config.k_fle, config.k_fra, config.p, config.q
    )


def validate(request: ValidateRequest) -> ValidateResponse:
    return ValidateResponse(config=validate_config(request.config))


def gen_channels(request: GenChannelsRequest) -> GenChannelsResponse:
    rng = np.random.default_rng(request.seed)
    realization = _get_channels(None, request.config, rng)
    return GenChannelsResponse(channels=channels_to_model(realization))


def estimate(request: EstimateRequest) -> EstimateResponse:
    """Single-shot two-timescale estimation of one realization: the large
    stage from the helper UE, then every UE's surface channel."""
    cfg = request.config
    geometry = cfg.geometry()
    rng = np.random.default_rng(request.seed)
    realization = _get_channels(request.channels, cfg, rng)
    l = realization.l
    dicts = geo.build_dictionaries(geometry)
    k_c = cfg.helper_ue()

    schedule = sm.random_phase_schedule(rng, cfg.t_g, geometry.m, cfg.phase_hold)
    pilots = sm.random_pilots(rng, cfg.t_g, cfg.n_ue, cfg.pnr_db)
    block = sm.simulate_uplink_block(
        realization.g, realization.h[k_c], schedule, pilots, l, cfg.eps,
        realization.side(k_c), rng, ue_index=k_c,
    )
    e_cfg = cfg.estimation()
    g_pt, h_pt_kc, trace = est.estimate_large_timescale(
        block, schedule, pilots, l, dicts, cfg.eps, cfg.p, cfg.q, e_cfg, rng
    )
    g_hat = g_pt.matrix()
    nmse_fra = est.nmse_kron(realization.g, realization.h[k_c], g_hat, h_pt_kc.matrix())

    h_hats, iterations = [], len(trace)
    for k in range(realization.n_ues):
        sch = sm.random_phase_schedule(rng, cfg.t_h, geometry.m, cfg.phase_hold)
        pil = sm.random_pilots(rng, cfg.t_h, cfg.n_ue, cfg.pnr_db)
        blk = sm.simulate_uplink_block(
            realization.g, realization.h[k], sch, pil, l, cfg.eps,
            realization.side(k), rng, ue_index=k,
        )
        h_pt, info = est.estimate_small_timescale(
            blk, g_hat, sch, pil, l, dicts, cfg.eps, cfg.q, e_cfg, rng
        )
        h_hats.append(h_pt.matrix())
        iterations += info.iterations

    per_ue = [
        est.nmse_kron(realization.g, realization.h[k], g_hat, h_hats[k])
        for k in range(realization.n_ues)
    ]
    return EstimateResponse(
        estimates=EstimatesModel(
            g_hat=ComplexMatrix.wrap(g_hat),
            h_hat=[ComplexMatrix.wrap(h) for h in h_hats],
        ),
        nmse=NMSEModel(
            nmse_fra=nmse_fra, nmse_avg=float(np.mean(per_ue)), per_ue=per_ue
        ),
        overhead=est.total_overhead(cfg.t_g, cfg.t_h, cfg.tau, cfg.k),
        iterations=iterations,
        objective_tail=[float(v) for v in trace[-5:]],
    )


def beamform(request: BeamformRequest) -> BeamformResponse:
    """Solve the downlink problem with estimated CSI when provided, perfect
    CSI otherwise; rates are always scored on the supplied/drawn channels."""
    cfg = request.config
    rng = np.random.default_rng(request.seed)
    realization = _get_channels(request.channels, cfg, rng)
    if request.estimates is not None:
        solver_channels = geo.ChannelRealization(
            g=request.estimates.g_hat.unwrap(),
            h=[h.unwrap() for h in request.estimates.h_hat],
            l=realization.l,
            k_fle=realization.k_fle,
        )
    else:
        solver_channels = realization
    sigma_d2 = 10.0 ** (-cfg.snr_db / 10.0)
    state = bf.wmmse_cd_solve(
        solver_channels, cfg.eps, sigma_d2,
        bf.BeamformerConfig(n_s=cfg.n_s, mode=request.mode), rng,
    )
    t_tot = est.total_overhead(cfg.t_g, cfg.t_h, cfg.tau, cfg.k) if request.count_overhead else 0
    report = bf.sum_rate(state, realization, min(t_tot, cfg.y_large), cfg.y_large)
    return BeamformResponse(
        phi_d1=ComplexVector.wrap(state.phi_d1),
        phi_d2=ComplexVector.wrap(state.phi_d2),
        rate=RateModel(
            per_ue=report.per_ue,
            sum_rate=report.sum_rate,
            overhead_factor=report.overhead_factor,
        ),
        iterations=state.iterations,
        objective_tail=[float(v) for v in state.objective_trace[-5:]],
    )


def sweep(request: SweepRequest) -> RowsResponse:
    rows = run_scenario(request.scenario)
    return RowsResponse(rows=[asdict(r) for r in rows], summary=summarize(rows))


def reproduce(request: ReproduceRequest) -> RowsResponse:
    rows = run_preset(
        request.preset, trials=request.trials, seed=request.seed, full=request.full
    )
    return RowsResponse(rows=[asdict(r) for r in rows], summary=summarize(rows))
