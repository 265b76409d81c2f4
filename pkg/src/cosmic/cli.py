"""Command-line front end: ``cosmic <verb> --config <path|preset> [--out DIR] [--seed N]``.

Exit status is 0 on success, 2 when the scenario fails validation (including
an infeasible dimension budget) and 3 on any runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .encoder import feasibility_check
from .io import write_json
from .scenario import (ConfigError, SeedSpec, SWEEP_AXES, load_config, preset_names, run_scenario,
                       run_sweep)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3

_STAGE_FOR_VERB = {"generate": "waveforms", "simulate": "simulate", "image": "image",
                   "decode": "decode", "metrics": "metrics"}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cosmic", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--config", required=True,
                        help=f"scenario JSON, run manifest, or a preset ({', '.join(preset_names())})")
        sp.add_argument("--out", required=out_required, help="artifact directory")
        sp.add_argument("--seed", type=int, help="base seed; derives waveform/data/noise/speckle seeds")

    helps = {"generate": "build the waveform set (CSV + JSON sidecar)",
             "check": "print the feasibility report as JSON",
             "simulate": "synthesize communication and imaging receptions",
             "image": "range-compress and back-project into an image",
             "decode": "decode the communication slot and report SER/BER",
             "metrics": "run the whole pipeline and write metrics plus a manifest"}
    for verb, text in helps.items():
        common(sub.add_parser(verb, help=text))
    sw = sub.add_parser("sweep", help="evaluate metrics along one parameter axis")
    common(sw)
    sw.add_argument("--axis", choices=SWEEP_AXES)
    sw.add_argument("--values", type=float, nargs="+")
    sw.add_argument("--families", nargs="+")
    sw.add_argument("--seeds", type=int, nargs="+", help="base seeds for a Monte-Carlo sweep")
    sw.add_argument("--workers", type=int)
    return p


def _load(args, check_feasibility=True):
    cfg = load_config(args.config, check_feasibility=check_feasibility)
    if args.seed is not None:
        cfg.seeds = SeedSpec.from_base(args.seed)
    return cfg


def _check(args) -> int:
    cfg = _load(args, check_feasibility=False)
    w = cfg.waveform
    report = feasibility_check(w.K, w.N, w.subbasis_size, w.K_z, w.mode)
    if w.family != "cosmic":
        report["note"] = f"{w.family} sets have no null-space budget; report shown for reference"
    print(json.dumps(report, indent=2))
    if args.out:
        write_json(Path(args.out) / "check.json", report)
    return EXIT_OK if report["feasible"] or w.family != "cosmic" else EXIT_INVALID


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "check":
            return _check(args)
        if args.verb == "sweep":
            cfg = _load(args, check_feasibility=False)
            out = args.out or cfg.output or str(Path("runs") / f"{cfg.name}-sweep")
            values = args.values
            if values is not None and args.axis in ("N", "K_z"):
                values = [int(v) for v in values]
            rows = run_sweep(cfg, args.axis, values, args.families, args.seeds, out, args.workers)
            failed = sum(1 for r in rows if r["error"])
            print(f"{len(rows)} sweep points written to {Path(out) / 'sweep.csv'} ({failed} failed)")
            return EXIT_OK
        cfg = _load(args)
        out = run_scenario(cfg, args.out, _STAGE_FOR_VERB[args.verb])
        if args.verb == "metrics":
            print((out / "metrics.json").read_text(), end="")
        elif args.verb == "decode":
            print((out / "decode.json").read_text(), end="")
        else:
            print(f"artifacts written to {out}")
        return EXIT_OK
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
