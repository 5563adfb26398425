#!/usr/bin/env python3
"""Run every benchmark sweep and write the CSVs to bench-plots/."""

import sys

from btcipc.bench import main

if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
