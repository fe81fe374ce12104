"""Run the four built-in ring experiments and optionally plot them.

    python3 scripts/reproduce_figures.py --out results/ [--plot]

Plots need matplotlib (``pip install .[plot]``); CSVs and summaries do not.
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from coupled_regulation.cli import reproduce
from coupled_regulation.scenario import FIGURES


def load_csv(path):
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array(list(reader), dtype=float)
    return header, data


def plot(fig, kind, out_dir):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    panels, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for ax, label in zip(axes, ("uncoupled", "coupled")):
        header, data = load_csv(out_dir / f"{fig}_{label}.csv")
        t = data[:, 0]
        if kind == "trajectories":
            ax.plot(t, data[:, 1], "k--", label="leader")
            for i, name in enumerate(header):
                if name.endswith("_1") and not name.startswith("x0"):
                    ax.plot(t, data[:, i], label=name.split("_")[0])
            ax.set_ylabel("first state")
        else:
            ax.plot(t, data[:, -1], label="psi")
            ax.plot(t, data[:, -2], label="phi")
            ax.axhline(0.5, color="grey", lw=0.5)
            ax.set_ylabel("error")
        ax.set_title(label)
        ax.legend(fontsize="small", ncol=3)
    axes[-1].set_xlabel("t")
    panels.tight_layout()
    path = out_dir / f"{fig}.png"
    panels.savefig(path, dpi=120)
    plt.close(panels)
    return path


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--figures", nargs="+", default=sorted(FIGURES), choices=sorted(FIGURES))
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args(argv)
    for fig in args.figures:
        summary = reproduce(fig, args.out)
        cross = summary["psi_crossing"]
        print(f"{fig}: F = {summary['F'][0]}, psi <= {summary['threshold']} at "
              f"{cross['coupled']} (coupled) vs {cross['uncoupled']} (uncoupled), "
              f"ratio {summary['crossing_ratio']}")
        if args.plot:
            print("  wrote", plot(fig, summary["content"], args.out))


if __name__ == "__main__":
    main()
