from .engine import SUITES, SUITE_NAMES, run_oracle_check, run_suite
from .metrics import (
    check_convergence,
    check_eckart_young,
    check_gradients,
    check_grow_neutral,
    check_stability,
)

__all__ = [
    "SUITES",
    "SUITE_NAMES",
    "run_oracle_check",
    "run_suite",
    "check_convergence",
    "check_eckart_young",
    "check_gradients",
    "check_grow_neutral",
    "check_stability",
]
