"""Command-line front end: simulate, reconstruct, and inspect from configs.

Every subcommand reads the same INI configuration (see the README for the
grammar); repeatable --set section.key=value flags override individual keys,
so scripted sweeps never need to rewrite files.  Results are printed to
standard output as JSON; all diagnostics go to standard error.  Exit codes:
0 success, 1 invalid input (config, dataset, or physical validation),
2 runtime/reconstruction failure, 3 filesystem trouble.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DataFormatError,
    ReconstructionError,
    ValidationError,
    WavetomoError,
)
from .io_formats import (
    parse_config,
    read_dataset,
    read_wigner_csv,
    write_dataset,
    write_metrics,
    write_pgm,
    write_wigner_csv,
)
from .phasespace import negativity_volume, purity, state_moments, wigner_of_state
from .pipeline import (
    build_dataset,
    build_schedule,
    build_state,
    output_lattices,
    reconstruct_dataset,
    run_pipeline,
)


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _load_config(args: argparse.Namespace):
    text = Path(args.config).read_text(encoding="utf-8")
    return parse_config(text, overrides=args.set or [])


def _cmd_state(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    rho = build_state(cfg)
    x_lat, p_lat = output_lattices(cfg)
    wigner = wigner_of_state(rho, x_lat, p_lat)
    if cfg.wigner_csv_path:
        write_wigner_csv(wigner, cfg.wigner_csv_path)
    if cfg.image_path:
        write_pgm(wigner, cfg.image_path)
    summary = state_moments(rho)
    summary.update(
        {
            "family": cfg.family,
            "purity": purity(rho),
            "negativity_volume": negativity_volume(wigner),
            "wigner_integral": wigner.integral(),
        }
    )
    _emit(summary)
    return 0


def _cmd_schedule(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    sched = build_schedule(cfg)
    dps = np.array([s.dp for s in sched.settings])
    dxs = np.array([s.dx for s in sched.settings])
    _emit(
        {
            "n_settings": len(sched),
            "n_aux": int(sum(s.aux_phase for s in sched.settings)),
            "p0": sched.p0,
            "aux_shift": sched.aux_shift,
            "dp_range": [float(dps.min()), float(dps.max())],
            "dx_range": [float(dxs.min()), float(dxs.max())],
            "exposure_total": float(sum(s.exposure for s in sched.settings)),
        }
    )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out_path = args.out or cfg.dataset_path
    if not out_path:
        raise ConfigError("simulate needs a dataset path (output.dataset or --out)")
    rho = build_state(cfg)
    sched = build_schedule(cfg)
    data = build_dataset(cfg, rho, sched)
    write_dataset(data, out_path)
    _emit(
        {
            "dataset": str(out_path),
            "n_settings": len(sched),
            "total_counts": float(data.counts.sum()),
            "noiseless": cfg.noiseless,
            "seed": cfg.seed,
        }
    )
    return 0


def _cmd_reconstruct(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    in_path = args.dataset or cfg.dataset_path
    if not in_path:
        raise ConfigError("reconstruct needs a dataset file (--dataset or output.dataset)")
    data = read_dataset(in_path)
    bundle = reconstruct_dataset(cfg, data)
    _emit(bundle.metrics)
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    wigner = read_wigner_csv(args.wigner)
    _emit(
        {
            "wigner_integral": wigner.integral(),
            "wigner_min": float(wigner.values.min()),
            "wigner_max": float(wigner.values.max()),
            "negativity_volume": negativity_volume(wigner),
            "x_count": wigner.x_lattice.count,
            "p_count": wigner.p_lattice.count,
        }
    )
    return 0


def _cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    bundle = run_pipeline(cfg)
    _emit({**bundle.metrics, **bundle.provenance})
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavetomo",
        description="Simulate and reconstruct wave-packet phase-space distributions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="INI run configuration file")
        p.add_argument(
            "--set",
            action="append",
            metavar="SECTION.KEY=VALUE",
            help="override one config key (repeatable)",
        )

    p_state = sub.add_parser("state", help="build the configured state and report its moments")
    add_config_flags(p_state)
    p_state.set_defaults(func=_cmd_state)

    p_sched = sub.add_parser("schedule", help="summarize the measurement schedule")
    add_config_flags(p_sched)
    p_sched.set_defaults(func=_cmd_schedule)

    p_sim = sub.add_parser("simulate", help="generate counts and write the dataset file")
    add_config_flags(p_sim)
    p_sim.add_argument("--out", help="dataset path (overrides output.dataset)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_rec = sub.add_parser("reconstruct", help="invert a dataset file with the configured method")
    add_config_flags(p_rec)
    p_rec.add_argument("--dataset", help="dataset file to read (overrides output.dataset)")
    p_rec.set_defaults(func=_cmd_reconstruct)

    p_met = sub.add_parser("metrics", help="score a saved Wigner CSV")
    p_met.add_argument("--wigner", required=True, help="grid CSV produced by this tool")
    p_met.set_defaults(func=_cmd_metrics)

    p_pipe = sub.add_parser("pipeline", help="simulate, reconstruct, and emit all outputs")
    add_config_flags(p_pipe)
    p_pipe.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataFormatError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (ReconstructionError, WavetomoError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
