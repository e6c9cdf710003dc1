#!/usr/bin/env python3
"""Main CLI entry point for the monocluster expansion checks."""

import sys
from pathlib import Path

root_path = Path(__file__).parent
sys.path.insert(0, str(root_path))

from monocluster_core.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
