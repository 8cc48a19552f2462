from .lora import (
    DEFAULT_ALPHA_MAX,
    LoraAdapter,
    check_invariants,
    default_rank_cap,
    effective_rank,
    forward_delta,
    importance_order,
    init_adapter,
    pair_importance,
    param_count,
    resize,
    round_half_away,
    shrink_selection,
    synchronize,
)

__all__ = [
    "DEFAULT_ALPHA_MAX",
    "LoraAdapter",
    "check_invariants",
    "default_rank_cap",
    "effective_rank",
    "forward_delta",
    "importance_order",
    "init_adapter",
    "pair_importance",
    "param_count",
    "resize",
    "round_half_away",
    "shrink_selection",
    "synchronize",
]
