#!/usr/bin/env python3
"""Regenerate the built-in example configs and their figure CSV bundles.

Usage: python3 scripts/reproduce_figures.py [OUT_DIR]
"""

import sys
from pathlib import Path

from ddequiv.cli import main


def run(out: Path) -> int:
    for argv in (["export", "--out", str(out / "configs")],
                 ["figures", "--out", str(out / "figures")]):
        code = main(argv)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run(Path(sys.argv[1] if len(sys.argv) > 1 else "figure_data")))
