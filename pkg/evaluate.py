"""
Entry point: Run the numerical oracle suites.

Usage:
    python evaluate.py
    python evaluate.py --suite gradient
"""

import argparse
import sys

from dotenv import load_dotenv

load_dotenv()

from src.observability import setup_observability

setup_observability()

from src.evaluation import SUITE_NAMES, run_oracle_check


def main():
    parser = argparse.ArgumentParser(description="Run oracle checks on the numerical core")
    parser.add_argument("--suite", choices=SUITE_NAMES, default="all", help="Suite to run")
    args = parser.parse_args()

    sys.exit(0 if run_oracle_check(args.suite) else 4)


if __name__ == "__main__":
    main()
