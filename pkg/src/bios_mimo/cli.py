"""Thin command-line client for the simulator service.

Every subcommand builds the same request models the HTTP API accepts and, by
default, executes them in-process; pass ``--server URL`` to run against a
live service instead. Files (channels/estimates as .npz, results as CSV or
JSON) are read and written on the client side.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .experiments import PRESET_NAMES, ResultRow, Scenario, emit_results, summarize
from .service import ops
from .service.models import (
    BeamformRequest,
    BeamformResponse,
    ChannelsModel,
    ComplexMatrix,
    EstimateRequest,
    EstimateResponse,
    EstimatesModel,
    GenChannelsRequest,
    GenChannelsResponse,
    ReproduceRequest,
    RowsResponse,
    SweepRequest,
    ValidateRequest,
    ValidateResponse,
)


class ServiceClient:
    """Dispatches a request either to the in-process ops or a remote server."""

    def __init__(self, server: str | None):
        self.server = server.rstrip("/") if server else None

    def call(self, endpoint: str, request, response_cls, local_op):
        if self.server is None:
            return local_op(request)
        import httpx

        resp = httpx.post(
            f"{self.server}/api/{endpoint}",
            json=request.model_dump(mode="json"),
            timeout=None,
        )
        if resp.status_code != 200:
            raise SystemExit(f"server returned {resp.status_code}: {resp.text}")
        return response_cls.model_validate(resp.json())


def _save_channels_npz(path: Path, channels: ChannelsModel):
    np.savez(
        path,
        g=channels.g.unwrap(),
        h=np.array([h.unwrap() for h in channels.h]),
        l=channels.l.unwrap(),
        k_fle=channels.k_fle,
    )


def _load_channels_npz(path: Path) -> ChannelsModel:
    data = np.load(path)
    return ChannelsModel(
        g=ComplexMatrix.wrap(data["g"]),
        h=[ComplexMatrix.wrap(h) for h in data["h"]],
        l=ComplexMatrix.wrap(data["l"]),
        k_fle=int(data["k_fle"]),
    )


def _save_estimates_npz(path: Path, estimates: EstimatesModel):
    np.savez(
        path,
        g_hat=estimates.g_hat.unwrap(),
        h_hat=np.array([h.unwrap() for h in estimates.h_hat]),
    )


def _load_estimates_npz(path: Path) -> EstimatesModel:
    data = np.load(path)
    return EstimatesModel(
        g_hat=ComplexMatrix.wrap(data["g_hat"]),
        h_hat=[ComplexMatrix.wrap(h) for h in data["h_hat"]],
    )


def _write_rows(rows_response: RowsResponse, out: Path, fmt: str):
    rows = [ResultRow(**r) for r in rows_response.rows]
    emit_results(rows, fmt, out)
    mirror = out.with_suffix(".json" if fmt == "csv" else ".csv")
    emit_results(rows, "json" if fmt == "csv" else "csv", mirror)
    print(f"wrote {len(rows)} rows to {out} (mirror: {mirror})")
    for entry in rows_response.summary:
        print(
            f"  {entry['scenario']} @ {entry['sweep_value']}: "
            f"nmse_avg {entry['nmse_avg_mean']:.4g} +/- {entry['nmse_avg_stderr']:.2g}, "
            f"sum_rate {entry['sum_rate_mean']:.4g} +/- {entry['sum_rate_stderr']:.2g}"
        )


def cmd_validate(args, client: ServiceClient):
    raw = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
    resp = client.call(
        "validate", ValidateRequest(config=raw), ValidateResponse, ops.validate
    )
    print(resp.config.model_dump_json(indent=1))


def cmd_gen_channels(args, client: ServiceClient):
    request = GenChannelsRequest(config=load_config(args.config), seed=args.seed)
    resp = client.call("channels", request, GenChannelsResponse, ops.gen_channels)
    out = Path(args.out)
    _save_channels_npz(out, resp.channels)
    g = resp.channels.g.unwrap()
    print(f"wrote {out}: g {g.shape}, {len(resp.channels.h)} UE channels")


def cmd_estimate(args, client: ServiceClient):
    channels = _load_channels_npz(Path(args.channels)) if args.channels else None
    request = EstimateRequest(
        config=load_config(args.config), seed=args.seed, channels=channels
    )
    resp = client.call("estimate", request, EstimateResponse, ops.estimate)
    _save_estimates_npz(Path(args.out), resp.estimates)
    if args.report:
        Path(args.report).write_text(
            json.dumps(
                {
                    "nmse": resp.nmse.model_dump(),
                    "overhead": resp.overhead,
                    "iterations": resp.iterations,
                    "objective_tail": resp.objective_tail,
                },
                indent=1,
            )
        )
    print(
        f"wrote {args.out}: nmse_fra {resp.nmse.nmse_fra:.4g}, "
        f"nmse_avg {resp.nmse.nmse_avg:.4g}, overhead {resp.overhead} pilots"
    )


def cmd_beamform(args, client: ServiceClient):
    channels = _load_channels_npz(Path(args.channels)) if args.channels else None
    estimates = _load_estimates_npz(Path(args.estimates)) if args.estimates else None
    request = BeamformRequest(
        config=load_config(args.config),
        seed=args.seed,
        channels=channels,
        estimates=estimates,
        mode=args.mode,
        count_overhead=args.count_overhead,
    )
    resp = client.call("beamform", request, BeamformResponse, ops.beamform)
    if args.out:
        Path(args.out).write_text(resp.model_dump_json(indent=1))
    print(
        f"sum rate {resp.rate.sum_rate:.4g} bits (overhead factor "
        f"{resp.rate.overhead_factor:.3g}, {resp.iterations} iterations)"
    )


def _scenario_from_args(args) -> list[Scenario]:
    target = args.target
    if target in PRESET_NAMES:
        from .experiments import build_preset

        seed = args.seed if args.seed is not None else 0
        return build_preset(target, trials=args.trials, seed=seed, full=args.full)
    raw = json.loads(Path(target).read_text())
    scenario = Scenario.model_validate(raw)
    if args.trials is not None:
        scenario = scenario.model_copy(update={"trials": args.trials})
    if args.seed is not None:
        scenario = scenario.model_copy(update={"seed": args.seed})
    return [scenario]


def cmd_sweep(args, client: ServiceClient):
    all_rows: list[dict] = []
    for scenario in _scenario_from_args(args):
        resp = client.call("sweep", SweepRequest(scenario=scenario), RowsResponse, ops.sweep)
        all_rows.extend(resp.rows)
    rows = [ResultRow(**r) for r in all_rows]
    merged = RowsResponse(rows=all_rows, summary=summarize(rows))
    _write_rows(merged, Path(args.out), args.format)


def cmd_reproduce(args, client: ServiceClient):
    request = ReproduceRequest(
        preset=args.preset, trials=args.trials, seed=args.seed, full=args.full
    )
    resp = client.call("reproduce", request, RowsResponse, ops.reproduce)
    out = Path(args.out) if args.out else Path(f"results/{args.preset}.csv")
    _write_rows(resp, out, "csv")


def cmd_serve(args, _client):
    import uvicorn

    uvicorn.run("bios_mimo.service.app:app", host=args.host, port=args.port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bios-mimo",
        description="Bilayer omni-surface MIMO simulator: channel estimation, "
        "beamforming, and Monte Carlo sweeps.",
    )
    parser.add_argument(
        "--server", default=None, help="base URL of a running service; default runs in-process"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a config file (or show defaults)")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen-channels", help="draw a channel realization to .npz")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="channels.npz")
    p.set_defaults(func=cmd_gen_channels)

    p = sub.add_parser("estimate", help="run two-timescale estimation on a realization")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channels", default=None, help="input channels .npz (default: draw)")
    p.add_argument("--out", default="estimates.npz")
    p.add_argument("--report", default=None, help="optional JSON diagnostics path")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("beamform", help="optimize the downlink and report rates")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channels", default=None)
    p.add_argument("--estimates", default=None, help="use estimated CSI from .npz")
    p.add_argument("--mode", choices=["bios", "ios", "irs"], default="bios")
    p.add_argument("--count-overhead", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_beamform)

    p = sub.add_parser("sweep", help="run a preset name or a scenario JSON file")
    p.add_argument("target", help=f"preset ({', '.join(PRESET_NAMES)}) or scenario file")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--full", action="store_true", help="full 200-trial ensembles")
    p.add_argument("--out", default="results/sweep.csv")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce", help="rerun a figure preset end to end")
    p.add_argument("preset", choices=list(PRESET_NAMES))
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    client = ServiceClient(args.server)
    args.func(args, client)
    return 0


if __name__ == "__main__":
    sys.exit(main())
