"""End-to-end experiment runs over a planted-rank task.

A run trains the same student in each requested mode, streams per-step
metrics (JSONL) and rank trajectories (CSV), and writes a deterministic
``summary.json``. Identical configs produce byte-identical files.
"""

import csv
import json
import logging
from contextlib import ExitStack
from dataclasses import replace
from pathlib import Path
from typing import Any, NamedTuple, Optional, Sequence

from opentelemetry import trace

from src.analysis import capacity_term, rank_stabilization_step, rank_statistics
from src.errors import InvariantBreachError
from src.model import ModelState, base_weights_digest, forward, task_loss
from src.trainer import (
    Mode,
    StepRecord,
    TrainingState,
    convergence_monitor,
    finalize,
    stability_monitor,
    train,
)
from src.trainer.loop import AlphaGradHook

from .planted import PlantedTask, generate_task, recovery_score, student_for
from .settings import RunConfig

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)

METRICS_FILE = "metrics.jsonl"
RANKS_FILE = "ranks.csv"
SUMMARY_FILE = "summary.json"
SWEEP_FILE = "sweep.csv"
RANK_CSV_HEADER = ("step", "layer", "head", "alpha", "effective_rank")
SWEEP_CSV_HEADER = (
    "r0", "adaptive_params", "uniform_params", "relative_params",
    "mean_scaled_rank", "adaptive_loss", "uniform_loss",
)


class ModeResult(NamedTuple):
    mode: Mode
    state: TrainingState
    records: list[StepRecord]
    summary: dict[str, Any]


class ExperimentResult(NamedTuple):
    summary: dict[str, Any]
    files: list[Path]


def task_for(config: RunConfig) -> PlantedTask:
    m, t = config.model, config.task
    return generate_task(
        m.layers, m.heads, m.d, m.k, t.planted_ranks, t.n_samples, config.seed, noise=t.noise,
    )


def _check_uniform(records: Sequence[StepRecord], r0: int) -> None:
    for record in records:
        if any(r != r0 for row in record.ranks for r in row):
            raise InvariantBreachError(
                "uniform mode changed an effective rank", {"step": record.step, "ranks": record.ranks}
            )


def _summarize(mode: Mode, config: RunConfig, task: PlantedTask, model: ModelState,
               records: list[StepRecord]) -> dict[str, Any]:
    trainer = config.trainer
    stats = rank_statistics(model.adapters, trainer.r0)
    alphas = [ad.alpha for _, _, ad in model.heads()]
    heads = len(alphas)
    summary = {
        "mode": mode.value,
        "steps": len(records),
        "final_task_loss": task_loss(forward(model, task.x), task.y),
        "final_params": stats.total_params,
        "final_alphas": [[ad.alpha for ad in row] for row in model.adapters],
        "final_ranks": [[ad.r_cur for ad in row] for row in model.adapters],
        "rank_statistics": stats._asdict(),
        "capacity_term": capacity_term(alphas, trainer.r0),
        "convergence": convergence_monitor(records)._asdict(),
        "rank_stabilization_step": rank_stabilization_step([r.ranks for r in records]),
        "recovery_score": recovery_score(model, task) if heads >= 3 else None,
    }
    if records:
        stability = stability_monitor(
            records, trainer.clip_c, trainer.eta_alpha, final_alphas=summary["final_alphas"]
        )
        summary["stability"] = stability._asdict()
    return summary


def run_mode(
    config: RunConfig,
    task: PlantedTask,
    mode: Mode | str,
    out_dir: Optional[Path] = None,
    alpha_grad_hook: Optional[AlphaGradHook] = None,
) -> ModeResult:
    """Train a fresh student on ``task`` in one mode, streaming artifacts to ``out_dir/<mode>``."""
    mode = Mode(mode)
    trainer = replace(config.trainer, mode=mode)
    model = student_for(task, trainer.r0, adapter_seed=trainer.seed, alpha_max=trainer.alpha_max)
    state = TrainingState.start(model)
    frozen_before = base_weights_digest(model)

    with tracer.start_as_current_span("experiment.mode") as span, ExitStack() as stack:
        span.set_attribute("mode", mode.value)
        span.set_attribute("seed", trainer.seed)
        span.set_attribute("steps", trainer.steps)
        on_step = None
        if out_dir is not None:
            mode_dir = Path(out_dir) / mode.value
            mode_dir.mkdir(parents=True, exist_ok=True)
            metrics = stack.enter_context(open(mode_dir / METRICS_FILE, "w", encoding="utf-8", newline="\n"))
            ranks_file = stack.enter_context(open(mode_dir / RANKS_FILE, "w", encoding="utf-8", newline=""))
            rank_writer = csv.writer(ranks_file, lineterminator="\n")
            rank_writer.writerow(RANK_CSV_HEADER)

            def on_step(record: StepRecord) -> None:
                metrics.write(json.dumps(record.metrics_row()) + "\n")
                for l, row in enumerate(record.alphas):
                    for h, alpha in enumerate(row):
                        rank_writer.writerow((record.step, l, h, repr(alpha), record.ranks[l][h]))

        records = train(state, trainer, task.x, task.y, on_step=on_step, alpha_grad_hook=alpha_grad_hook)

    finalize(state, trainer)
    if base_weights_digest(state.model) != frozen_before:
        raise InvariantBreachError("frozen base weights changed during training")
    if mode is Mode.UNIFORM:
        _check_uniform(records, trainer.r0)
    summary = _summarize(mode, replace(config, trainer=trainer), task, state.model, records)
    logger.info(
        "mode=%s final_task_loss=%.6g final_params=%d",
        mode.value, summary["final_task_loss"], summary["final_params"],
    )
    return ModeResult(mode=mode, state=state, records=records, summary=summary)


def _comparison(adaptive: dict[str, Any], uniform: dict[str, Any]) -> dict[str, Any]:
    uniform_loss = uniform["final_task_loss"]
    return {
        "param_ratio": adaptive["final_params"] / uniform["final_params"],
        "loss_ratio": adaptive["final_task_loss"] / uniform_loss if uniform_loss > 0 else None,
    }


def write_json(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_experiment(
    config: RunConfig, out_dir: Path | str, modes: Optional[Sequence[Mode | str]] = None
) -> ExperimentResult:
    """Run every mode in ``modes`` (default adaptive then uniform) and write artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    modes = [Mode(m) for m in (modes or (Mode.ADAPTIVE, Mode.UNIFORM))]

    with tracer.start_as_current_span("experiment.run") as span:
        span.set_attribute("seed", config.seed)
        task = task_for(config)
        results = {mode: run_mode(config, task, mode, out_dir) for mode in modes}

    summary: dict[str, Any] = {
        "seed": config.seed,
        "planted_ranks": task.planted_ranks,
        "modes": {mode.value: result.summary for mode, result in results.items()},
    }
    if Mode.ADAPTIVE in results and Mode.UNIFORM in results:
        summary["comparison"] = _comparison(results[Mode.ADAPTIVE].summary, results[Mode.UNIFORM].summary)
    write_json(out_dir / SUMMARY_FILE, summary)

    files = [out_dir / SUMMARY_FILE]
    for mode in modes:
        files += [out_dir / mode.value / METRICS_FILE, out_dir / mode.value / RANKS_FILE]
    logger.info("wrote %d artifacts to %s", len(files), out_dir)
    return ExperimentResult(summary=summary, files=files)


def run_r0_sweep(config: RunConfig, r0_values: Sequence[int], out_dir: Path | str) -> list[dict[str, Any]]:
    """Adaptive vs. uniform budgets and losses across base ranks, written to ``sweep.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    task = task_for(config)
    rows = []
    for r0 in r0_values:
        swept = replace(config, trainer=replace(config.trainer, r0=r0))
        adaptive = run_mode(swept, task, Mode.ADAPTIVE).summary
        uniform = run_mode(swept, task, Mode.UNIFORM).summary
        rows.append({
            "r0": r0,
            "adaptive_params": adaptive["final_params"],
            "uniform_params": uniform["final_params"],
            "relative_params": adaptive["final_params"] / uniform["final_params"],
            "mean_scaled_rank": adaptive["rank_statistics"]["mean_scaled_rank"],
            "adaptive_loss": adaptive["final_task_loss"],
            "uniform_loss": uniform["final_task_loss"],
        })
    with open(out_dir / SWEEP_FILE, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_CSV_HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    logger.info("r0 sweep over %s written to %s", list(r0_values), out_dir / SWEEP_FILE)
    return rows
