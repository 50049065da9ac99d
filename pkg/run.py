#!/usr/bin/env python3
"""
Run the gridwave command line.

Usage:
    python run.py <subcommand> [options]

Examples:
    python run.py rope-analyze --theta 10000 --d 56 --threshold 5
    python run.py demo-tile --token 0.2,0.8,0.8,0.2 --h 8 --w 8 --f 2 --out tile.png
    python run.py metrics sr.png hr.png --patch 64 --json
"""

import sys

from gridwave.cli import main


if __name__ == "__main__":
    sys.exit(main())
