"""Plot CLI outputs. Needs matplotlib, which the package itself does not depend on.

    python docs/plot_results.py OUT_DIR
"""
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from bectransport.io import read_columns


def plot_designs(out: Path):
    files = sorted(out.glob("design_*.txt"))
    if not files:
        return
    fig, axes = plt.subplots(len(files), 1, figsize=(6, 2.2 * len(files)), squeeze=False)
    for ax, path in zip(axes[:, 0], files):
        cols, _ = read_columns(path)
        ax.plot(cols["t"] * 1e3, cols["q0"] * 1e3, label="trap q0")
        ax.plot(cols["t"] * 1e3, cols["q_c"] * 1e3, label="condensate q_c")
        ax.set_title(path.stem.removeprefix("design_"))
        ax.set_ylabel("mm")
    axes[-1, 0].set_xlabel("t (ms)")
    axes[0, 0].legend()
    fig.tight_layout()
    fig.savefig(out / "designs.png", dpi=120)


def plot_sweep(out: Path):
    path = out / "noise_sweep.txt"
    if not path.exists():
        return
    cols, meta = read_columns(path)
    a0 = meta["oscillator_length"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for gh in np.unique(cols["g1_over_hbar"]):
        for t_f in np.unique(cols["t_f"]):
            sel = (cols["g1_over_hbar"] == gh) & (cols["t_f"] == t_f)
            ax.errorbar(cols["lambda"][sel] / a0, cols["mean_fidelity"][sel],
                        yerr=cols["std_error"][sel], marker="o",
                        label=f"g1/hbar = {gh:g} m/s, t_f = {t_f * 1e3:g} ms")
    ax.set_xlabel("lambda / a0")
    ax.set_ylabel("mean fidelity")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out / "noise_sweep.png", dpi=120)


if __name__ == "__main__":
    target = Path(sys.argv[1] if len(sys.argv) > 1 else "bectransport-out")
    plot_designs(target)
    plot_sweep(target)
