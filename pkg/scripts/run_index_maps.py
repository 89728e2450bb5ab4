#!/usr/bin/env python3
"""Produce the square and disc index maps with their CSV grids."""

import pathlib
import sys

from focklab.cli import main

OUT = pathlib.Path("out")


def run() -> int:
    OUT.mkdir(exist_ok=True)
    worst = main([
        "index-map", "--pair", "square", "--grid", "9",
        "--out-json", str(OUT / "index_map_square.json"),
        "--out-csv", str(OUT / "index_map_square.csv"),
    ])
    worst = max(worst, main([
        "index-map", "--pair", "disc", "--grid", "9",
        "--out-json", str(OUT / "index_map_disc.json"),
        "--out-csv", str(OUT / "index_map_disc.csv"),
    ]))
    return worst


if __name__ == "__main__":
    sys.exit(run())
