#!/usr/bin/env python3
"""End-to-end demo: run the bundled virtual-time experiment, analyze the
logs, and audit the manifest against the reporting checklist.

Usage: python scripts/run_demo.py [output_dir]
"""

import sys
from pathlib import Path

from timefair.cli import main

REPO_ROOT = Path(__file__).resolve().parent.parent


def run() -> int:
    out = sys.argv[1] if len(sys.argv) > 1 else "timefair-demo-out"
    config = str(REPO_ROOT / "configs" / "demo.json")
    for argv in (
        ["run", "--config", config, "--out", out],
        ["analyze", out],
        ["report", out],
    ):
        code = main(argv)
        if code != 0:
            return code
    print(f"\ndemo artifacts in {out}: manifest.json, ert_table.csv, curves/, runs/")
    return 0


if __name__ == "__main__":
    sys.exit(run())
