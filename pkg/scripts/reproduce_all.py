#!/usr/bin/env python3
"""Run every bundled figure preset into out/<figure>/ (CSV + manifest).

Usage: python scripts/reproduce_all.py [output_root]

fig4 sweeps a full angle/damping grid and takes a couple of minutes; the
other presets finish in seconds.
"""

import sys
import time

from qbattery.cli import FIGURES, main


def run(output_root: str = "out") -> int:
    for figure in FIGURES:
        start = time.perf_counter()
        code = main(["reproduce", figure, "--out", f"{output_root}/{figure}"])
        if code != 0:
            print(f"{figure}: FAILED with exit code {code}", file=sys.stderr)
            return code
        print(f"{figure}: written to {output_root}/{figure} in {time.perf_counter() - start:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(run(sys.argv[1] if len(sys.argv) > 1 else "out"))
