"""Log-log plot of saddle residual against tree traversals.

Accepts telemetry CSVs from `degt run` (columns iter,traversals,eps_sad,...)
or a merged table from `degt compare` (traversals,<label>,<label>,...).

    python3 scripts/plot_convergence.py merged.csv -o leduc3.png
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def series(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        return {}
    if "eps_sad" in rows[0]:
        return {Path(path).stem: [(int(r["traversals"]), float(r["eps_sad"])) for r in rows]}
    out = {}
    for label in rows[0]:
        if label == "traversals":
            continue
        out[label] = [(int(r["traversals"]), float(r[label])) for r in rows if r[label]]
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="+")
    ap.add_argument("-o", "--output", default="convergence.png")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(6, 4))
    for path in args.csv:
        for label, points in series(path).items():
            points = [(t, e) for t, e in points if e > 0]
            ax.loglog([t for t, _ in points], [e for _, e in points], label=label)
    ax.set_xlabel("tree traversals")
    ax.set_ylabel("saddle residual")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
