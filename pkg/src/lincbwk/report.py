"""Figure rendering for experiment output directories.

Reads the delimited per-round files and summary JSON written by the harness
and drops PNG figures next to them: cumulative reward against the oracle
line, remaining budget headroom, dual multiplier trajectories, per-seed
regret, and (for sweeps) the regret scaling curve with a square-root guide.
"""

from __future__ import annotations

import csv
import glob
import json
import os
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _read_rounds(path: str) -> dict[str, np.ndarray]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        rows = list(reader)
    if not rows:
        return {}
    cols: dict[str, np.ndarray] = {}
    for name in rows[0]:
        if name in ("phase",):
            cols[name] = np.array([r[name] for r in rows])
        else:
            cols[name] = np.array([float(r[name]) for r in rows])
    return cols


def _run_figures(run_dir: str, out_dir: str) -> list[str]:
    with open(os.path.join(run_dir, "summary.json")) as handle:
        summary = json.load(handle)
    opt = summary["opt"]
    horizon = summary["config"]["T"]
    round_files = sorted(glob.glob(os.path.join(run_dir, "rounds_*.csv")))
    written: list[str] = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path in round_files:
        cols = _read_rounds(path)
        if cols:
            ax.plot(cols["t"], cols["cum_reward"], lw=0.8, alpha=0.7)
    ax.plot([0, horizon], [0, opt], "k--", lw=1.2, label="oracle OPT pace")
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative reward")
    ax.set_title("Cumulative reward per seed")
    ax.legend(loc="upper left")
    fig.tight_layout()
    path = os.path.join(out_dir, "cumulative_reward.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)

    budget_cols = [c for c in (_read_rounds(round_files[0]) if round_files else {}) if c.startswith("budget_left_")]
    if budget_cols:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for path_i in round_files:
            cols = _read_rounds(path_i)
            if cols:
                tightest = np.min(np.stack([cols[c] for c in budget_cols]), axis=0)
                ax.plot(cols["t"], tightest, lw=0.8, alpha=0.7)
        ax.axhline(0.0, color="k", lw=1.0)
        ax.set_xlabel("round")
        ax.set_ylabel("tightest remaining budget")
        ax.set_title("Budget headroom per seed")
        fig.tight_layout()
        path = os.path.join(out_dir, "budget_headroom.png")
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)

    if round_files:
        cols = _read_rounds(round_files[0])
        theta_cols = sorted(c for c in cols if c.startswith("theta_") and c != "theta_dummy")
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for name in theta_cols:
            ax.plot(cols["t"], cols[name], lw=0.9, label=name)
        ax.plot(cols["t"], cols["theta_dummy"], "k--", lw=0.9, label="theta_dummy")
        ax.set_xlabel("round")
        ax.set_ylabel("dual weight")
        ax.set_title("Dual multipliers (first seed)")
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, "dual_multipliers.png")
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)

    regrets = [row["regret"] for row in summary["per_seed"]]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.bar(range(len(regrets)), regrets, color="tab:blue")
    ax.axhline(float(np.median(regrets)), color="k", ls="--", lw=1.0, label="median")
    ax.set_xlabel("seed index")
    ax.set_ylabel("regret (OPT - reward)")
    ax.set_title("Per-seed regret")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(out_dir, "regret_per_seed.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)
    return written


def _sweep_figure(sweep_dir: str, out_dir: str) -> list[str]:
    with open(os.path.join(sweep_dir, "sweep_summary.json")) as handle:
        rows = json.load(handle)
    values = np.array([float(r["value"]) for r in rows])
    med = np.array([float(r["median_regret"]) for r in rows])
    q1 = np.array([float(r["q1_regret"]) for r in rows])
    q3 = np.array([float(r["q3_regret"]) for r in rows])
    axis = rows[0]["axis"] if rows else "T"

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(values, med, yerr=[med - q1, q3 - med], fmt="o-", capsize=4, label="median regret")
    if np.all(med > 0) and np.all(values > 0):
        guide = med[0] * np.sqrt(values / values[0])
        ax.plot(values, guide, "k--", lw=1.0, label="sqrt scaling guide")
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(axis)
    ax.set_ylabel("regret")
    ax.set_title(f"Regret scaling over {axis}")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(out_dir, "regret_scaling.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]


def render(directory: str, out_dir: Optional[str] = None) -> list[str]:
    """Render every figure the directory's contents support; returns the paths."""
    out = out_dir or directory
    os.makedirs(out, exist_ok=True)
    written: list[str] = []
    if os.path.exists(os.path.join(directory, "sweep_summary.json")):
        written += _sweep_figure(directory, out)
        for sub in sorted(glob.glob(os.path.join(directory, "*_*"))):
            if os.path.isdir(sub) and os.path.exists(os.path.join(sub, "summary.json")):
                sub_out = os.path.join(out, os.path.basename(sub)) if out != directory else sub
                os.makedirs(sub_out, exist_ok=True)
                written += _run_figures(sub, sub_out)
    elif os.path.exists(os.path.join(directory, "summary.json")):
        written += _run_figures(directory, out)
    else:
        raise FileNotFoundError(f"no summary.json or sweep_summary.json under {directory}")
    return written
