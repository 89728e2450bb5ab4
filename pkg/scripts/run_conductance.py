#!/usr/bin/env python3
"""Sweep the stacked commutator-trace conductance over l = 0, 1, 2.

Writes one JSON report per stack height into out/ (created if needed).
"""

import pathlib
import sys

from focklab.cli import main

OUT = pathlib.Path("out")


def run() -> int:
    OUT.mkdir(exist_ok=True)
    worst = 0
    for ell in (0, 1, 2):
        code = main([
            "conductance",
            "--stack", str(ell),
            "--n-schedule", "32,64,96,128",
            "--out-json", str(OUT / f"conductance_l{ell}.json"),
        ])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run())
