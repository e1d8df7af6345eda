#!/usr/bin/env python3
"""Regenerate the figure panels for the `u2_blocks` run in this directory.

Requires matplotlib. Each observable column becomes one panel with every
sweep cell overlaid.
"""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

CELLS = [
    ("ideal", "ideal.csv"),
    ("kappa0", "kappa0.csv"),
    ("kappa5", "kappa5.csv"),
    ("kappa10", "kappa10.csv"),
    ("kappa20", "kappa20.csv"),
    ("kappa40", "kappa40.csv"),
    ("kappa80", "kappa80.csv"),
    ("kappa160", "kappa160.csv"),
]

here = os.path.dirname(os.path.abspath(__file__))


def read_csv(path):
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    header, data = rows[0], rows[1:]
    columns = {name: [float(r[i]) for r in data] for i, name in enumerate(header)}
    return header, columns


def main():
    series = {}
    header = None
    for label, file in CELLS:
        header, columns = read_csv(os.path.join(here, file))
        series[label] = columns
    if header is None:
        sys.exit("no cell CSVs found")
    observables = [c for c in header if c != "t"]
    for obs in observables:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for label, columns in series.items():
            ax.plot(columns["t"], columns[obs], label=label, lw=1.2)
        ax.set_xlabel("t J")
        ax.set_ylabel(obs)
        ax.legend(fontsize=7, ncol=2)
        ax.set_title("u2_blocks: " + obs)
        fig.tight_layout()
        out = os.path.join(here, obs + ".png")
        fig.savefig(out, dpi=160)
        plt.close(fig)
        print("wrote", out)


if __name__ == "__main__":
    main()
