"""
Command-line surface: train, oracle-check, report, sweep.

Exit codes: 0 success, 2 config or usage error, 3 training diverged,
4 invariant breach (monitor failure, manifest mismatch, failed oracle suite).
"""

import argparse
import json
import logging
import os
from pathlib import Path
from typing import Optional, Sequence

from src.errors import ConfigError, InvariantBreachError, TrainingDivergedError
from src.evaluation import SUITE_NAMES, run_oracle_check
from src.experiments import RunConfig, run_experiment, run_r0_sweep
from src.experiments.harness import SUMMARY_FILE, SWEEP_FILE
from src.trainer import Mode

from .config import config_values, keys_help, load_config
from .manifest import RunManifest, utc_now, verify_manifest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_INVARIANT = 4


def _r0_list(text: str) -> list[int]:
    try:
        values = [int(part, 10) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of integers, got {text!r}") from None
    if any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"every r0 must be >= 1, got {text!r}")
    return values


def _seed(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"seed must be >= 0, got {value}")
    return value


def _default_out() -> str:
    return os.getenv("RANKSCALE_OUT_DIR", "runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankscale",
        description="Adaptive-rank low-rank adapters on planted-rank tasks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=keys_help(),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="Train adaptive and uniform students on a planted task",
                           formatter_class=argparse.RawDescriptionHelpFormatter, epilog=keys_help())
    train.add_argument("--config", type=str, help="Path to a key = value config (defaults when omitted)")
    train.add_argument("--seed", type=_seed, help="Override the config seed")
    train.add_argument("--out", type=str, default=None, help="Run directory (default $RANKSCALE_OUT_DIR or runs)")
    train.add_argument("--mode", choices=[m.value for m in Mode], help="Run only this mode")

    oracle = sub.add_parser("oracle-check", help="Run numerical oracle suites")
    oracle.add_argument("--suite", choices=SUITE_NAMES, default="all", help="Suite to run")

    report = sub.add_parser("report", help="Verify a run directory and print its summary")
    report.add_argument("--run", type=str, required=True, help="Run directory written by train or sweep")

    sweep = sub.add_parser("sweep", help="Compare adaptive and uniform budgets across base ranks")
    sweep.add_argument("--config", type=str, help="Path to a key = value config")
    sweep.add_argument("--r0", type=_r0_list, required=True, help="Comma list of base ranks, e.g. 2,4,8")
    sweep.add_argument("--seed", type=_seed, help="Override the config seed")
    sweep.add_argument("--out", type=str, default=None, help="Output directory")
    return parser


def _load(path: Optional[str], seed: Optional[int]) -> RunConfig:
    config = load_config(path) if path else RunConfig()
    return config.with_overrides(seed=seed)


def cmd_train(args: argparse.Namespace) -> int:
    config = _load(args.config, args.seed)
    if args.mode:
        modes = [Mode(args.mode)]
    else:
        modes = [Mode.ADAPTIVE, Mode.UNIFORM]
        if config.trainer.mode is Mode.LAYERWISE:
            modes.append(Mode.LAYERWISE)
    out = Path(args.out or _default_out())

    manifest = RunManifest(config=config_values(config), seed=config.seed, started_at=utc_now())
    print(f"\n🚀 Training seed={config.seed} modes={', '.join(m.value for m in modes)} -> {out}")
    result = run_experiment(config, out, modes=modes)
    manifest.finished_at = utc_now()
    manifest.record_files(out, result.files)
    manifest.write(out)

    for mode, summary in result.summary["modes"].items():
        print(f"   ✅ {mode:10s} | loss={summary['final_task_loss']:.4g} | params={summary['final_params']}")
    comparison = result.summary.get("comparison")
    if comparison:
        print(f"   📊 param ratio={comparison['param_ratio']:.3f} | loss ratio={comparison['loss_ratio']}")
    print(f"   Artifacts in: {out}\n")
    return EXIT_OK


def cmd_oracle_check(args: argparse.Namespace) -> int:
    return EXIT_OK if run_oracle_check(args.suite) else EXIT_INVARIANT


def cmd_report(args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    manifest = verify_manifest(run_dir)
    print(f"\n{'='*60}")
    print(f"📊 Run report: {run_dir}")
    print(f"   Seed: {manifest.seed} | {manifest.started_at} -> {manifest.finished_at}")
    print(f"   ✅ {len(manifest.files)} artifacts match the manifest")
    print(f"{'='*60}")
    summary_path = run_dir / SUMMARY_FILE
    if summary_path.is_file():
        summary = json.loads(summary_path.read_text(encoding="utf-8"))
        for mode, s in summary["modes"].items():
            stats = s["rank_statistics"]
            print(
                f"   {mode:10s} | loss={s['final_task_loss']:.4g} | params={s['final_params']}"
                f" | mean rank scale={stats['mean_scaled_rank']:.3f} | recovery={s['recovery_score']}"
            )
        if "comparison" in summary:
            print(f"   param ratio={summary['comparison']['param_ratio']:.3f}"
                  f" | loss ratio={summary['comparison']['loss_ratio']}")
    sweep_path = run_dir / SWEEP_FILE
    if sweep_path.is_file():
        print(sweep_path.read_text(encoding="utf-8"))
    print()
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load(args.config, args.seed)
    out = Path(args.out or _default_out())
    manifest = RunManifest(config=config_values(config), seed=config.seed, started_at=utc_now())
    print(f"\n🚀 r0 sweep over {args.r0} -> {out}")
    rows = run_r0_sweep(config, args.r0, out)
    manifest.finished_at = utc_now()
    manifest.record_files(out, [out / SWEEP_FILE])
    manifest.write(out)
    for row in rows:
        print(f"   ✅ r0={row['r0']:<4d} | relative params={row['relative_params']:.3f}"
              f" | adaptive loss={row['adaptive_loss']:.4g} | uniform loss={row['uniform_loss']:.4g}")
    print()
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "oracle-check": cmd_oracle_check,
    "report": cmd_report,
    "sweep": cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("config error: %s", e)
        print(f"❌ Config error: {e}")
        return EXIT_CONFIG
    except TrainingDivergedError as e:
        logger.error("training diverged: %s", e)
        print(f"❌ Training diverged: {e}")
        return EXIT_DIVERGED
    except InvariantBreachError as e:
        logger.error("invariant breach: %s %s", e, e.details)
        print(f"❌ Invariant breach: {e}")
        return EXIT_INVARIANT
