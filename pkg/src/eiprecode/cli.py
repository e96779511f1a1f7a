"""Command-line front end.

Subcommands map onto the experiment families:

=============  ================
subcommand     experiment
=============  ================
spectra        spectrum_check
estimate-eta   eta_cdf
clean-csi      mse_vs_antennas
ber            ber_vs_snr
sweep          ber_vs_eta
=============  ================

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
Environment: EIPRECODE_SEED and EIPRECODE_THREADS mirror --seed/--threads
at a precedence below explicit flags and --set pairs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np
import yaml

from .config import ConfigError, parse_config
from .eta import RefinementError
from .experiments import ExperimentError, run_experiment
from .linksim import MonteCarloError
from .rie import PairingError
from .rmt import RootSelectionError

__all__ = ["main", "build_parser"]

_KINDS = {
    "spectra": "spectrum_check",
    "estimate-eta": "eta_cdf",
    "clean-csi": "mse_vs_antennas",
    "ber": "ber_vs_snr",
    "sweep": "ber_vs_eta",
}

_NUMERICAL_ERRORS = (
    MonteCarloError,
    RootSelectionError,
    PairingError,
    RefinementError,
    np.linalg.LinAlgError,
    FloatingPointError,
    ZeroDivisionError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eiprecode",
        description="Eigen-inference CSI cleaning and quantized precoding experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "spectra": "empirical vs analytic spectral density of the augmented channel",
        "estimate-eta": "CDF of the blind CSI-noise-level estimation error",
        "clean-csi": "reconstruction MSE of the cleaned channel across antenna counts",
        "ber": "bit error rate versus SNR for one precoder/CSI configuration",
        "sweep": "bit error rate versus CSI noise level at fixed SNR",
    }
    for name in _KINDS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--config", metavar="FILE", help="YAML config file")
        s.add_argument(
            "--set",
            dest="sets",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one config field (repeatable)",
        )
        s.add_argument("--out", default="eiprecode-out", metavar="DIR")
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int)
        s.add_argument("--dry-run", action="store_true")
        s.add_argument("--trials", type=int)
        if name in ("ber", "sweep"):
            s.add_argument("--precoder")
            s.add_argument("--csi")
            s.add_argument("--bits", help="DAC resolution in bits, or 'bypass'")
        if name == "spectra":
            s.add_argument("--bins", type=int)
    return parser


def _flag_overrides(args: argparse.Namespace) -> dict:
    flags = {
        "seed": args.seed,
        "threads": args.threads,
        "trials": args.trials,
    }
    if hasattr(args, "precoder"):
        flags["precoder"] = args.precoder
        flags["csi"] = args.csi
        flags["bits"] = None if args.bits is None else yaml.safe_load(args.bits)
    if hasattr(args, "bins"):
        flags["bins"] = args.bins
    return flags


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kind = _KINDS[args.command]
    try:
        cfg, extras = parse_config(
            path=args.config, overrides=args.sets, flags=_flag_overrides(args)
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.dry_run:
        plan = {
            "experiment": kind,
            "out": str(args.out),
            "config": asdict(cfg),
            **extras,
        }
        print(json.dumps(plan, sort_keys=True, indent=2))
        return 0

    try:
        result = run_experiment(kind, cfg, **extras)
        csv_path, json_path = result.write(args.out)
    except (ConfigError, ExperimentError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    print("headline: " + json.dumps(result.summary["headline"], sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
