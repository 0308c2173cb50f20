"""Helpers shared by the experiment scripts."""

import argparse
import csv
import sys
from pathlib import Path

from flexlink.config import default_scenario_path, load_scenario, prepare


def parser(description):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--scenario", type=Path, default=default_scenario_path())
    p.add_argument("--csv", type=Path, default=None, help="also write the table here")
    return p


def load(path):
    return prepare(load_scenario(path))


def emit(rows, columns, csv_path=None):
    """Print ``rows`` (dicts) as an aligned table and optionally save them."""
    widths = [max(len(c), 12) for c in columns]
    print("  ".join(c.rjust(w) for c, w in zip(columns, widths)))
    for r in rows:
        cells = []
        for c, w in zip(columns, widths):
            v = r.get(c, "")
            cells.append((f"{v:.6g}" if isinstance(v, float) else str(v)).rjust(w))
        print("  ".join(cells))
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
            w.writeheader()
            w.writerows(rows)
        print(f"wrote {csv_path}", file=sys.stderr)
