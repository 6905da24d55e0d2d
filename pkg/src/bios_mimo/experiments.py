"""Seeded Monte Carlo scenarios reproducing the headline NMSE and sum-rate sweeps.

A scenario sweeps one axis (t_g, t_h, or snr) over a trial ensemble. Each
trial draws one large-timescale channel set; where the estimator is involved,
the shared channel is estimated once per large timescale and the UE channels
are re-drawn and re-estimated for each simulated small timescale. Results are
one row per (trial, sweep value), deterministic for a fixed seed apart from
the wall-clock column.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from . import beamforming as bf
from . import estimation as est
from . import geometry as geo
from . import signal_model as sm
from .config import SystemConfig

SweepAxis = Literal["t_g", "t_h", "snr"]
Estimator = Literal["htt-mo", "perfect-csi", "ls-bound"]


class Scenario(BaseModel):
    """One sweep definition: base config, axis, values, and estimator/mode."""

    name: str
    config: SystemConfig = Field(default_factory=SystemConfig)
    sweep: SweepAxis = "t_g"
    values: list[float] = Field(min_length=1)
    trials: int = Field(default=20, ge=1)
    seed: int = 0
    estimator: Estimator = "htt-mo"
    mode: Literal["bios", "ios", "irs"] = "bios"
    measure_rate: bool = True
    count_overhead: bool = True
    pnr_offset_db: float = 10.0
    # how many of the tau small timescales are simulated per trial; None = all
    small_blocks: int | None = Field(default=None, ge=1)

    @property
    def sweep_values(self) -> list[float]:
        if any(v <= 0 for v in self.values) and self.sweep != "snr":
            raise ValueError("sweep values must be positive")
        return self.values


@dataclass
class ResultRow:
    scenario: str
    seed: int
    trial: int
    sweep_value: float
    pnr_db: float
    snr_db: float
    t_g: int
    t_h: int
    nmse_fra: float
    nmse_avg: float
    sum_rate: float
    iterations: int
    wall_ms: float


RESULT_COLUMNS = [f.name for f in fields(ResultRow)]
_INT_COLUMNS = {"seed", "trial", "t_g", "t_h", "iterations"}


def _run_large(rng, realization, geometry, l, dicts, cfg: SystemConfig, t_g: int, pnr_db: float):
    """Large-timescale stage: pilots from the helper refraction-side UE."""
    k_c = cfg.helper_ue()
    schedule = sm.random_phase_schedule(rng, t_g, geometry.m, cfg.phase_hold)
    pilots = sm.random_pilots(rng, t_g, cfg.n_ue, pnr_db)
    block = sm.simulate_uplink_block(
        realization.g, realization.h[k_c], schedule, pilots, l, cfg.eps,
        realization.side(k_c), rng, ue_index=k_c,
    )
    e_cfg = cfg.estimation(t_g=t_g)
    g_pt, h_pt, trace = est.estimate_large_timescale(
        block, schedule, pilots, l, dicts, cfg.eps, cfg.p, cfg.q, e_cfg, rng
    )
    nmse_fra = est.nmse_kron(
        realization.g, realization.h[k_c], g_pt.matrix(), h_pt.matrix()
    )
    return g_pt.matrix(), nmse_fra, len(trace)


def _run_small_block(rng, realization, geometry, l, dicts, cfg: SystemConfig, g_hat, t_h, pnr_db):
    """One small timescale: fresh UE channels, per-UE estimation."""
    fresh = geo.redraw_ue_channels(rng, realization, geometry)
    e_cfg = cfg.estimation(t_h=t_h)
    h_hats, iters = [], 0
    for k in range(fresh.n_ues):
        schedule = sm.random_phase_schedule(rng, t_h, geometry.m, cfg.phase_hold)
        pilots = sm.random_pilots(rng, t_h, cfg.n_ue, pnr_db)
        block = sm.simulate_uplink_block(
            fresh.g, fresh.h[k], schedule, pilots, l, cfg.eps, fresh.side(k), rng, ue_index=k
        )
        h_pt, info = est.estimate_small_timescale(
            block, g_hat, schedule, pilots, l, dicts, cfg.eps, cfg.q, e_cfg, rng
        )
        h_hats.append(h_pt.matrix())
        iters += info.iterations
    nmse = est.nmse_avg(fresh.g, fresh.h, g_hat, h_hats)
    return fresh, h_hats, nmse, iters


def run_scenario(scenario: Scenario) -> list[ResultRow]:
    """Run the full trial-by-sweep grid and return one row per cell."""
    cfg = scenario.config
    geometry = cfg.geometry()
    l = geo.near_field_l(geometry)
    dicts = geo.build_dictionaries(geometry)
    values = scenario.sweep_values
    n_small = scenario.small_blocks or cfg.tau
    n_small = min(n_small, cfg.tau)

    rows: list[ResultRow] = []
    trial_seqs = np.random.SeedSequence(scenario.seed).spawn(scenario.trials)
    for trial in range(scenario.trials):
        seqs = trial_seqs[trial].spawn(1 + len(values))
        rng_trial = np.random.default_rng(seqs[0])
        realization = geo.draw_channel_set(
            rng_trial, geometry, cfg.k_fle, cfg.k_fra, cfg.p, cfg.q
        )
        shared_large = None
        if scenario.estimator == "htt-mo" and scenario.sweep == "t_h":
            shared_large = _run_large(
                rng_trial, realization, geometry, l, dicts, cfg, cfg.t_g, cfg.pnr_db
            )

        for vi, value in enumerate(values):
            rng = np.random.default_rng(seqs[1 + vi])
            t_g = int(value) if scenario.sweep == "t_g" else cfg.t_g
            t_h = int(value) if scenario.sweep == "t_h" else cfg.t_h
            snr_db = float(value) if scenario.sweep == "snr" else cfg.snr_db
            if scenario.sweep == "snr" and scenario.estimator == "htt-mo":
                pnr_db = snr_db + scenario.pnr_offset_db
            else:
                pnr_db = cfg.pnr_db
            sigma_d2 = 10.0 ** (-snr_db / 10.0)
            t_tot = est.total_overhead(t_g, t_h, cfg.tau, cfg.k)

            started = time.perf_counter()
            iterations = 0
            nmse_fra = nmse_avg = 0.0
            sum_rate = 0.0

            if scenario.estimator == "htt-mo":
                if shared_large is not None:
                    g_hat, nmse_fra, it_large = shared_large
                else:
                    g_hat, nmse_fra, it_large = _run_large(
                        rng, realization, geometry, l, dicts, cfg, t_g, pnr_db
                    )
                iterations += it_large
                nmse_blocks, rate_blocks = [], []
                for _ in range(n_small):
                    fresh, h_hats, block_nmse, it_small = _run_small_block(
                        rng, realization, geometry, l, dicts, cfg, g_hat, t_h, pnr_db
                    )
                    iterations += it_small
                    nmse_blocks.append(block_nmse)
                    if scenario.measure_rate:
                        estimated = geo.ChannelRealization(
                            g=g_hat, h=h_hats, l=l, k_fle=cfg.k_fle
                        )
                        state = bf.wmmse_cd_solve(
                            estimated, cfg.eps, sigma_d2,
                            bf.BeamformerConfig(n_s=cfg.n_s, mode=scenario.mode), rng,
                        )
                        iterations += state.iterations
                        report = bf.sum_rate(state, fresh, min(t_tot, cfg.y_large), cfg.y_large)
                        rate_blocks.append(report.sum_rate)
                nmse_avg = float(np.mean(nmse_blocks)) if nmse_blocks else nmse_fra
                sum_rate = float(np.mean(rate_blocks)) if rate_blocks else 0.0
            else:
                # perfect CSI, optionally discounted by a training budget
                if scenario.estimator == "ls-bound":
                    budget = est.ls_overhead_bound(
                        cfg.k_fle, cfg.k_fra, cfg.m, cfg.n_ue, cfg.tau
                    )
                elif scenario.count_overhead:
                    budget = t_tot
                else:
                    budget = 0
                if scenario.measure_rate:
                    state = bf.wmmse_cd_solve(
                        realization, cfg.eps, sigma_d2,
                        bf.BeamformerConfig(n_s=cfg.n_s, mode=scenario.mode), rng,
                    )
                    iterations += state.iterations
                    report = bf.sum_rate(
                        state, realization, min(budget, cfg.y_large), cfg.y_large
                    )
                    sum_rate = report.sum_rate

            rows.append(
                ResultRow(
                    scenario=scenario.name,
                    seed=scenario.seed,
                    trial=trial,
                    sweep_value=float(value),
                    pnr_db=float(pnr_db),
                    snr_db=float(snr_db),
                    t_g=t_g,
                    t_h=t_h,
                    nmse_fra=float(nmse_fra),
                    nmse_avg=float(nmse_avg),
                    sum_rate=float(sum_rate),
                    iterations=int(iterations),
                    wall_ms=(time.perf_counter() - started) * 1e3,
                )
            )
    return rows


def summarize(rows: list[ResultRow]) -> list[dict]:
    """Mean and standard error per (scenario, sweep value) group."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.scenario, row.sweep_value), []).append(row)
    out = []
    for (name, value), members in sorted(groups.items()):
        entry = {"scenario": name, "sweep_value": value, "n": len(members)}
        for col in ("nmse_fra", "nmse_avg", "sum_rate"):
            data = np.array([getattr(m, col) for m in members], dtype=float)
            entry[f"{col}_mean"] = float(data.mean())
            entry[f"{col}_stderr"] = float(
                data.std(ddof=1) / math.sqrt(len(data)) if len(data) > 1 else 0.0
            )
        out.append(entry)
    return out


def emit_results(rows: list[ResultRow], fmt: str, path: str | Path) -> Path:
    """Write rows as CSV or JSON (identical values, one record per row)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULT_COLUMNS)
            for row in rows:
                d = asdict(row)
                writer.writerow([d[c] for c in RESULT_COLUMNS])
    elif fmt == "json":
        path.write_text(json.dumps([asdict(r) for r in rows], indent=1))
    else:
        raise ValueError("format must be 'csv' or 'json'")
    return path


def load_results(path: str | Path) -> list[ResultRow]:
    """Parse rows back from either emitted format."""
    path = Path(path)
    if path.suffix == ".json":
        records = json.loads(path.read_text())
    else:
        with path.open(newline="") as fh:
            records = list(csv.DictReader(fh))
    rows = []
    for rec in records:
        kwargs = {}
        for col in RESULT_COLUMNS:
            raw = rec[col]
            if col == "scenario":
                kwargs[col] = str(raw)
            elif col in _INT_COLUMNS:
                kwargs[col] = int(raw)
            else:
                kwargs[col] = float(raw)
        rows.append(ResultRow(**kwargs))
    return rows


def _reference_config(**overrides) -> SystemConfig:
    return SystemConfig(**overrides)


def build_preset(name: str, trials: int | None = None, seed: int = 0, full: bool = False):
    """Scenario lists for the figure presets. Desk-scale trial counts by
    default; ``full`` switches to the 200-trial ensembles."""
    n = trials if trials is not None else (200 if full else 20)
    pnrs = [0.0, 10.0, 20.0, 30.0]
    if name == "fig3a":
        t_gs = [100, 300, 500, 700, 900, 1100, 1300, 1500]
        return [
            Scenario(
                name=f"fig3a-pnr{int(p)}", config=_reference_config(pnr_db=p), sweep="t_g",
                values=t_gs, trials=n, seed=seed, estimator="htt-mo", measure_rate=False,
            )
            for p in pnrs
        ]
    if name == "fig3b":
        t_hs = [20, 40, 60, 80, 100, 120, 160, 200]
        return [
            Scenario(
                name=f"fig3b-pnr{int(p)}", config=_reference_config(pnr_db=p), sweep="t_h",
                values=t_hs, trials=n, seed=seed, estimator="htt-mo", measure_rate=False,
            )
            for p in pnrs
        ]
    if name == "fig4a":
        cfg = _reference_config(t_h=150, snr_db=10.0, pnr_db=20.0)
        values = [300, 500, 700, 900, 1200, 1500]
        return [
            Scenario(name="fig4a-htt-mo", config=cfg, sweep="t_g", values=values,
                     trials=n, seed=seed, estimator="htt-mo"),
            Scenario(name="fig4a-perfect", config=cfg, sweep="t_g", values=values,
                     trials=n, seed=seed, estimator="perfect-csi"),
        ]
    if name == "fig4b":
        cfg = _reference_config(t_g=900, snr_db=10.0, pnr_db=20.0)
        values = [25, 50, 75, 100, 150, 200, 300]
        return [
            Scenario(name="fig4b-htt-mo", config=cfg, sweep="t_h", values=values,
                     trials=n, seed=seed, estimator="htt-mo"),
            Scenario(name="fig4b-perfect", config=cfg, sweep="t_h", values=values,
                     trials=n, seed=seed, estimator="perfect-csi"),
        ]
    if name == "fig5a":
        snrs = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]
        return [
            Scenario(
                name=f"fig5a-{mode}", config=_reference_config(), sweep="snr", values=snrs,
                trials=n, seed=seed, estimator="perfect-csi", mode=mode,
                count_overhead=False,
            )
            for mode in ("bios", "ios", "irs")
        ]
    if name == "fig5b":
        snrs = [0.0, 5.0, 10.0, 15.0, 20.0]
        return [
            Scenario(
                name="fig5b-ls-bound", config=_reference_config(), sweep="snr", values=snrs,
                trials=n, seed=seed, estimator="ls-bound",
            )
        ]
    raise ValueError(f"unknown preset {name!r}")


PRESET_NAMES = ("fig3a", "fig3b", "fig4a", "fig4b", "fig5a", "fig5b")

# best-overhead search grids for the estimated-CSI rate-vs-SNR figure
FIG5B_GRID_DESK = ([300, 900, 1500], [25, 75, 150])
FIG5B_GRID_FULL = (list(range(300, 1501, 150)), list(range(25, 201, 25)))


def run_best_overhead(
    config: SystemConfig,
    snr_values: list[float],
    t_g_grid: list[int],
    t_h_grid: list[int],
    trials: int,
    seed: int,
    name: str = "fig5b-htt-mo",
) -> list[ResultRow]:
    """For each SNR, sweep the training-budget grid and keep the rows of the
    (t_g, t_h) pair with the best mean sum rate."""
    out: list[ResultRow] = []
    for si, snr in enumerate(snr_values):
        best_rows, best_rate = None, -np.inf
        for gi, t_g in enumerate(t_g_grid):
            for hi, t_h in enumerate(t_h_grid):
                cfg = config.model_copy(
                    update=dict(t_g=t_g, t_h=t_h, snr_db=snr, pnr_db=snr + 10.0)
                )
                scn = Scenario(
                    name=name, config=cfg, sweep="snr", values=[snr], trials=trials,
                    seed=seed + 7919 * si + 101 * gi + hi, estimator="htt-mo",
                )
                rows = run_scenario(scn)
                rate = float(np.mean([r.sum_rate for r in rows]))
                if rate > best_rate:
                    best_rate, best_rows = rate, rows
        out.extend(best_rows)
    return out


def run_preset(
    name: str, trials: int | None = None, seed: int = 0, full: bool = False
) -> list[ResultRow]:
    """Run every scenario of a preset and merge the rows."""
    rows: list[ResultRow] = []
    for scenario in build_preset(name, trials=trials, seed=seed, full=full):
        rows.extend(run_scenario(scenario))
    if name == "fig5b":
        n = trials if trials is not None else (20 if full else 5)
        grid = FIG5B_GRID_FULL if full else FIG5B_GRID_DESK
        snrs = [0.0, 5.0, 10.0, 15.0, 20.0]
        rows.extend(run_best_overhead(_reference_config(), snrs, grid[0], grid[1], n, seed))
    return rows
