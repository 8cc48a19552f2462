"""Flat ``key = value`` run configuration.

Lines are tokenized with python-dotenv's parser, which reports line numbers
and malformed lines; every key is then converted and range-checked here.
Unknown and duplicate keys are rejected. Missing keys take their defaults.
"""

import logging
import math
from io import StringIO
from pathlib import Path
from typing import Any, Callable, NamedTuple

from dotenv.parser import parse_stream

from src.errors import ConfigError, RejectedInputError
from src.experiments.settings import RunConfig, TaskConfig
from src.model import ModelConfig
from src.trainer import Mode, TrainerConfig

logger = logging.getLogger(__name__)


class _Key(NamedTuple):
    convert: Callable[[str], Any]
    check: Callable[[Any], bool]
    expected: str
    default: Any
    doc: str


def _int(text: str) -> int:
    return int(text, 10)


def _real(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def _ranks(text: str) -> tuple[int, ...]:
    items = [part.strip() for part in text.split(",")]
    if not items or any(not item for item in items):
        raise ValueError(text)
    return tuple(_int(item) for item in items)


KEYS: dict[str, _Key] = {
    "r0": _Key(_int, lambda v: v >= 1, "a positive integer", 16,
               "base rank; a head's rank is max(1, round(r0 * alpha))"),
    "lambda": _Key(_real, lambda v: v >= 0, "a non-negative real", 0.01,
                   "weight of the regularizer in the meta-objective"),
    "beta": _Key(_real, lambda v: v >= 0, "a non-negative real", 0.1,
                 "weight of the temporal-variation term inside the regularizer"),
    "eta_theta": _Key(_real, lambda v: v > 0, "a positive real", 1e-4,
                      "learning rate of the factor pairs (A, B)"),
    "eta_alpha": _Key(_real, lambda v: v >= 0, "a non-negative real", 5e-5,
                      "learning rate of the scale factors; 0 freezes every alpha at 1"),
    "clip_c": _Key(_real, lambda v: v > 0, "a positive real", 10.0,
                   "clip bound on each scale-factor gradient; |d alpha| <= clip_c * eta_alpha"),
    "steps": _Key(_int, lambda v: v >= 1, "a positive integer", 3000, "number of full-batch steps"),
    "layers": _Key(_int, lambda v: v >= 1, "a positive integer", 3, "number of layers L"),
    "heads": _Key(_int, lambda v: v >= 1, "a positive integer", 4, "heads per layer H"),
    "d": _Key(_int, lambda v: v >= 1, "a positive integer", 32, "output dimension of each head weight"),
    "k": _Key(_int, lambda v: v >= 1, "a positive integer", 32, "input dimension of each head weight"),
    "planted_ranks": _Key(_ranks, lambda v: all(r >= 1 for r in v),
                          "a comma list of positive integers", (1, 2, 4, 8),
                          "ranks of the planted updates, cycled over heads layer by layer"),
    "n_samples": _Key(_int, lambda v: v >= 1, "a positive integer", 512, "number of training samples"),
    "noise": _Key(_real, lambda v: v >= 0, "a non-negative real", 0.0,
                  "std of Gaussian noise added to the targets"),
    "seed": _Key(_int, lambda v: v >= 0, "a non-negative integer", 0, "seed for weights, data and adapter draws"),
    "mode": _Key(Mode, lambda v: True, "one of adaptive|uniform|layerwise", Mode.ADAPTIVE,
                 "adaptive: per-head alpha; uniform: alpha frozen at 1; layerwise: one alpha per layer"),
    "resize_every": _Key(_int, lambda v: v >= 1, "a positive integer", 1,
                         "rank synchronization cadence in steps"),
}


def _quoted(line: str) -> bool:
    _, _, rhs = line.partition("=")
    return rhs.lstrip()[:1] in ("'", "\"")


def _build(values: dict[str, Any]) -> RunConfig:
    v = {name: values.get(name, spec.default) for name, spec in KEYS.items()}
    limit = min(v["d"], v["k"])
    for r in v["planted_ranks"]:
        if r > limit:
            raise ConfigError(f"planted rank {r} exceeds min(d, k) = {limit}", key="planted_ranks")
    trainer = TrainerConfig(
        r0=v["r0"], lam=v["lambda"], beta=v["beta"], eta_theta=v["eta_theta"],
        eta_alpha=v["eta_alpha"], clip_c=v["clip_c"], steps=v["steps"], seed=v["seed"],
        mode=v["mode"], resize_every=v["resize_every"],
    )
    model = ModelConfig(layers=v["layers"], heads=v["heads"], d=v["d"], k=v["k"], seed=v["seed"])
    task = TaskConfig(planted_ranks=v["planted_ranks"], n_samples=v["n_samples"], noise=v["noise"])
    return RunConfig(trainer=trainer, model=model, task=task)


def parse_config(text: str) -> RunConfig:
    values: dict[str, Any] = {}
    for binding in parse_stream(StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ConfigError(
                f"cannot parse {binding.original.string.strip()!r}, expected 'key = value'", line=line
            )
        if binding.key is None:
            continue
        key = binding.key
        if binding.original.string.lstrip().startswith("export "):
            raise ConfigError("'export' prefix is not allowed, expected 'key = value'", key=key, line=line)
        spec = KEYS.get(key)
        if spec is None:
            raise ConfigError(f"unknown key; valid keys: {', '.join(KEYS)}", key=key, line=line)
        if key in values:
            raise ConfigError("duplicate key", key=key, line=line)
        raw = (binding.value or "").strip()
        if not raw:
            raise ConfigError(f"missing value, expected {spec.expected}", key=key, line=line)
        if _quoted(binding.original.string):
            raise ConfigError(f"quoted values are not allowed, expected {spec.expected}", key=key, line=line)
        try:
            value = spec.convert(raw)
        except ValueError:
            raise ConfigError(f"{raw!r} is not {spec.expected}", key=key, line=line) from None
        if not spec.check(value):
            raise ConfigError(f"{raw!r} is not {spec.expected}", key=key, line=line)
        values[key] = value
    try:
        return _build(values)
    except RejectedInputError as e:
        raise ConfigError(str(e)) from e


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    config = parse_config(text)
    logger.info("loaded config %s", path)
    return config


def config_values(config: RunConfig) -> dict[str, Any]:
    """Flat key -> value view in canonical key order."""
    t, m, task = config.trainer, config.model, config.task
    return {
        "r0": t.r0,
        "lambda": t.lam,
        "beta": t.beta,
        "eta_theta": t.eta_theta,
        "eta_alpha": t.eta_alpha,
        "clip_c": t.clip_c,
        "steps": t.steps,
        "layers": m.layers,
        "heads": m.heads,
        "d": m.d,
        "k": m.k,
        "planted_ranks": list(task.planted_ranks),
        "n_samples": task.n_samples,
        "noise": task.noise,
        "seed": t.seed,
        "mode": t.mode.value,
        "resize_every": t.resize_every,
    }


def serialize_config(config: RunConfig) -> str:
    lines = []
    for key, value in config_values(config).items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def keys_help() -> str:
    """One line per key for ``--help``."""
    width = max(len(key) for key in KEYS)
    rows = []
    for key, spec in KEYS.items():
        default = spec.default
        if isinstance(default, tuple):
            default = ",".join(str(v) for v in default)
        elif isinstance(default, Mode):
            default = default.value
        rows.append(f"  {key:<{width}}  {spec.doc} (default {default})")
    return "config keys:\n" + "\n".join(rows)
