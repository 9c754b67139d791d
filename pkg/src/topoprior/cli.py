"""Command-line entry point: flat file-artifact pipeline driven by one config.

Exit codes: 0 ok, 2 config error, 3 contract violation, 4 numeric divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, pipeline
from .ablation import CONTROL_VARIANTS
from .config import load_config
from .errors import TopoPriorError


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", required=True, help="TOML or JSON pipeline config")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topoprior",
        description="Population-topology priors for time-series forecasting",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("fingerprint", "build the correlation manifold, diagram, and 125-dim fingerprint"),
        ("sheaf", "compute per-series spectral coordinates"),
        ("screen", "loop-density screening report (needs fingerprint artifacts)"),
        ("build-cache", "cache base median forecasts for every window"),
        ("eval", "score forecast artifacts into metric reports"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
    p = sub.add_parser("train-backbone", help="train the broadcast-injection transformer")
    _add_common(p)
    p.add_argument("--variant", default="vanilla", choices=("vanilla", "tda", "tda+sheaf"))
    p = sub.add_parser("adapt", help="train the residual topology adapter over the base cache")
    _add_common(p)
    p.add_argument("--variant", default="tda+sheaf", choices=("vanilla", "tda", "tda+sheaf"))
    p = sub.add_parser("ablate", help="matched-config comparison across topology controls")
    _add_common(p)
    p.add_argument(
        "--variants",
        default=",".join(CONTROL_VARIANTS),
        help="comma-separated subset of: " + ",".join(CONTROL_VARIANTS),
    )
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        outdir = Path(cfg["output_dir"])
        outdir.mkdir(parents=True, exist_ok=True)
        if args.command == "fingerprint":
            info = pipeline.run_fingerprint(cfg, seed, outdir)
            print(f"fingerprint: n={info['n']} dims={info['fingerprint_dim']} -> {outdir}")
        elif args.command == "sheaf":
            info = pipeline.run_sheaf(cfg, seed, outdir)
            print(f"sheaf: n={info['n']} effective_rank={info['effective_rank']} -> {outdir}")
        elif args.command == "screen":
            print(pipeline.run_screen(cfg, seed, outdir))
        elif args.command == "build-cache":
            info = pipeline.run_build_cache(cfg, seed, outdir)
            print(f"base cache: provider={info['provider']} entries={info['entries']}")
        elif args.command == "train-backbone":
            info = pipeline.run_train_backbone(cfg, seed, outdir, args.variant)
            print(f"backbone[{info['variant']}]: val_loss={info['final_val_loss']}")
        elif args.command == "adapt":
            info = pipeline.run_adapt(cfg, seed, outdir, args.variant)
            print(f"adapter[{info['variant']}]: val_loss={info['final_val_loss']}")
        elif args.command == "ablate":
            variants = [v.strip() for v in args.variants.split(",") if v.strip()]
            print(pipeline.run_ablate(cfg, seed, outdir, variants))
        elif args.command == "eval":
            for line in pipeline.run_eval(cfg, seed, outdir):
                print(line)
    except TopoPriorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
