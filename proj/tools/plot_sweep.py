#!/usr/bin/env python3
"""Plot sweep and bench CSVs written by `stefan sweep` / `stefan bench`.

usage: plot_sweep.py sweep.csv [bench.csv] [-o figure.png]
"""
import argparse

import matplotlib.pyplot as plt
import pandas as pd


def plot_sweep(ax_e, ax_g, df):
    df = df[df.C_eps == df.C_eps.min()]
    for (strategy, level, dt), g in df.groupby(["strategy", "mesh_level", "dt"]):
        label = f"{strategy} M{level} dt={dt:g}"
        ax_e.loglog(g.C_tol, g.E_zeta, marker="o", label=label)
        ax_g.loglog(g.C_tol, g.E_grad_zeta, marker="o", label=label)
    ax_e.set_ylabel("E_zeta")
    ax_g.set_ylabel("E_grad_zeta")
    ax_g.set_xlabel("C_tol")
    ax_e.legend(fontsize="x-small")


def plot_bench(ax, df):
    for strategy, g in df.groupby("strategy"):
        ax.semilogy(g.sn, g.cpu_ns_cumulative * 1e-9, marker="o", label=strategy)
    ax.set_xlabel("Sn")
    ax.set_ylabel("cumulative CPU [s]")
    ax.legend()


def main():
    p = argparse.ArgumentParser()
    p.add_argument("sweep")
    p.add_argument("bench", nargs="?")
    p.add_argument("-o", "--output", default="sweep.png")
    a = p.parse_args()

    rows = 3 if a.bench else 2
    fig, axes = plt.subplots(rows, 1, figsize=(7, 3.2 * rows))
    plot_sweep(axes[0], axes[1], pd.read_csv(a.sweep))
    if a.bench:
        plot_bench(axes[2], pd.read_csv(a.bench))
    fig.tight_layout()
    fig.savefig(a.output, dpi=150)


if __name__ == "__main__":
    main()
