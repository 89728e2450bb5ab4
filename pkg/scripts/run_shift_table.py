#!/usr/bin/env python3
"""Weighted-shift weight tables for the lowest level and level 1."""

import pathlib
import sys

from focklab.cli import main

OUT = pathlib.Path("out")


def run() -> int:
    OUT.mkdir(exist_ok=True)
    worst = main([
        "shift", "--kmax", "500",
        "--out-json", str(OUT / "shift_l0.json"),
        "--out-csv", str(OUT / "shift_l0.csv"),
    ])
    worst = max(worst, main([
        "shift", "--kmax", "200", "--level", "1",
        "--out-json", str(OUT / "shift_l1.json"),
        "--out-csv", str(OUT / "shift_l1.csv"),
    ]))
    return worst


if __name__ == "__main__":
    sys.exit(run())
