"""
Oracle-check engine: runs named suites of numerical checks and prints a
scored summary.
"""

import logging
import time
from typing import Callable

from opentelemetry import trace

from src.errors import RejectedInputError

from .metrics import (
    CheckResult,
    check_convergence,
    check_eckart_young,
    check_gradients,
    check_grow_neutral,
    check_stability,
)

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)

SUITES: dict[str, list[tuple[str, Callable[[], CheckResult]]]] = {
    "linalg": [("eckart_young", check_eckart_young)],
    "gradient": [("finite_difference", check_gradients)],
    "stability": [("alpha_step_bound", check_stability)],
    "convergence": [("min_grad_decay", check_convergence)],
    "grow": [("grow_neutrality", check_grow_neutral)],
}
SUITE_NAMES = (*SUITES, "all")


def run_suite(name: str) -> list[tuple[str, CheckResult]]:
    if name not in SUITES:
        raise RejectedInputError(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)}")
    results = []
    with tracer.start_as_current_span("oracle.suite") as span:
        span.set_attribute("suite", name)
        for check_name, check in SUITES[name]:
            started = time.perf_counter()
            result = check()
            logger.info("%s/%s -> %s in %.2fs", name, check_name, result[0], time.perf_counter() - started)
            results.append((check_name, result))
        span.set_attribute("passed", all(r[0] == "pass" for _, r in results))
    return results


def run_oracle_check(suite: str = "all") -> bool:
    """Run one suite (or all of them) and print the summary. True when every check passed."""
    names = list(SUITES) if suite == "all" else [suite]

    print(f"\n{'='*60}")
    print(f"🔍 Oracle checks")
    print(f"   Suites: {', '.join(names)}")
    print(f"{'='*60}\n")

    totals = {}
    for name in names:
        print(f"{'─'*50}")
        print(f"🧪 Suite: {name}")
        for check_name, (label, score, reason) in run_suite(name):
            totals[f"{name}/{check_name}"] = (label, score)
            emoji = "✅" if label == "pass" else "⚠️" if score >= 0.9 else "❌"
            print(f"   {emoji} {check_name:25s} | score={score:.2f} | {label}")
            print(f"      {reason}")
        print()

    failed = [key for key, (label, _) in totals.items() if label != "pass"]
    print(f"\n{'='*60}")
    print(f"📊 ORACLE SUMMARY")
    print(f"{'='*60}")
    print(f"   Checks: {len(totals)} | Failed: {len(failed)}\n")
    for key, (label, score) in totals.items():
        emoji = "✅" if label == "pass" else "❌"
        print(f"   {emoji} {key:35s} | score={score:.2f}")
    print(f"{'='*60}\n")
    return not failed
