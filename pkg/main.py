"""
Entry point: train, check and report on adaptive-rank adapters.

Usage:
    python main.py train --config configs/planted_default.conf --seed 0 --out runs/seed0
    python main.py oracle-check --suite all
    python main.py report --run runs/seed0
    python main.py sweep --config configs/planted_default.conf --r0 2,4,8 --out runs/sweep
"""

import sys

from dotenv import load_dotenv

load_dotenv()

# Setup logging + tracing BEFORE importing the package
from src.observability import setup_observability

has_observability = setup_observability()

from src.cli import main


if __name__ == "__main__":
    sys.exit(main())
