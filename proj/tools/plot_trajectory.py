#!/usr/bin/env python3
"""Plot replicator trajectories written by `macgame simulate`.

For a 2x2 game given with --game, the orbits are drawn in the (p_1_1, p_2_1)
square over the contours of the potential. Otherwise the potential, KL
divergence and KKT residual are plotted against time.
"""

import argparse
import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def load_game(path):
    with open(path) as f:
        doc = json.load(f)
    gains = np.asarray(doc["gains"], dtype=float).reshape(doc["num_users"], doc["num_nodes"])
    return {
        "gains": gains,
        "noise": np.asarray(doc["noise"], dtype=float),
        "bandwidths": np.asarray(doc["bandwidths"], dtype=float),
        "budgets": np.asarray(doc["budgets"], dtype=float),
    }


def potential(game, p):
    load = game["noise"] + (game["gains"] * p).sum(axis=0)
    return -(game["bandwidths"] * np.log(load)).sum()


def level_sets(ax, game, n=200):
    P = game["budgets"]
    x = np.linspace(0, P[0], n)
    y = np.linspace(0, P[1], n)
    Z = np.empty((n, n))
    for i, a in enumerate(y):
        for j, b in enumerate(x):
            Z[i, j] = potential(game, np.array([[b, P[0] - b], [a, P[1] - a]]))
    ax.contour(x, y, Z, levels=25, colors="grey", linestyles="dashed", linewidths=0.6)


def orbit_plot(frames, game, out):
    fig, ax = plt.subplots(figsize=(5, 5))
    level_sets(ax, game)
    for name, df in frames:
        ax.plot(df["p_1_1"], df["p_2_1"], lw=1.2, label=name)
        ax.plot(df["p_1_1"].iloc[0], df["p_2_1"].iloc[0], "o", ms=3, color="black")
        ax.plot(df["p_1_1"].iloc[-1], df["p_2_1"].iloc[-1], "*", ms=8, color="black")
    ax.set_xlim(0, game["budgets"][0])
    ax.set_ylim(0, game["budgets"][1])
    ax.set_xlabel("power of user 1 on node 1")
    ax.set_ylabel("power of user 2 on node 1")
    if len(frames) > 1:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def time_plot(frames, out):
    fig, axes = plt.subplots(3, 1, figsize=(6, 7), sharex=True)
    for name, df in frames:
        axes[0].plot(df["t"], df["potential"], label=name)
        kl = pd.to_numeric(df["kl"], errors="coerce").replace([np.inf, -np.inf], np.nan)
        axes[1].semilogy(df["t"], kl.clip(lower=1e-300))
        axes[2].semilogy(df["t"], df["kkt_residual"].clip(lower=1e-300))
    axes[0].set_ylabel("potential")
    axes[1].set_ylabel("KL to reference")
    axes[2].set_ylabel("KKT residual")
    axes[2].set_xlabel("t")
    if len(frames) > 1:
        axes[0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="+", help="trajectory CSV files")
    ap.add_argument("--game", help="game JSON, enables the orbit plot for 2x2 games")
    ap.add_argument("--out", default="trajectory.png")
    ap.add_argument("--time", action="store_true", help="force the time-series plot")
    args = ap.parse_args()

    frames = [(path, pd.read_csv(path, skipinitialspace=True)) for path in args.csv]
    game = load_game(args.game) if args.game else None
    if game is not None and game["gains"].shape == (2, 2) and not args.time:
        orbit_plot(frames, game, args.out)
    else:
        time_plot(frames, args.out)
    print(args.out)


if __name__ == "__main__":
    main()
