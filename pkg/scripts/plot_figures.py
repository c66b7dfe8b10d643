#!/usr/bin/env python3
"""Render the CSV bundles written by ``ddequiv figures`` (needs matplotlib).

Usage: python3 scripts/plot_figures.py FIGURE_DIR [PNG_DIR]
"""

import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def read(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def plot_bundle(src: Path, name: str, dst: Path) -> Path:
    delay = read(src / f"{name}_delay_slice.csv")
    doppler = read(src / f"{name}_doppler_slice.csv")
    grid = read(src / f"{name}_grid.csv")
    fig, ax = plt.subplots(1, 3, figsize=(13, 3.8))
    floor = 1e-6
    ax[0].semilogy(delay["d"], np.maximum(delay["abs_norm"], floor), ".-")
    ax[0].set(xlabel="delay index d", ylabel="|tap| / peak", xlim=(delay["d"].min(), delay["d"].max()))
    ax[1].semilogy(doppler["kappa"], np.maximum(doppler["abs_norm"], floor), ".-")
    ax[1].set(xlabel="Doppler index kappa")
    ks, ds = np.unique(grid["kappa"]), np.unique(grid["d"])
    img = np.full((ks.size, ds.size), floor)
    img[np.searchsorted(ks, grid["kappa"]), np.searchsorted(ds, grid["d"])] = \
        np.maximum(grid["abs_norm"], floor)
    m = ax[2].pcolormesh(ds, ks, 20 * np.log10(img), shading="nearest", vmin=-60, vmax=0)
    ax[2].set(xlabel="d", ylabel="kappa")
    fig.colorbar(m, ax=ax[2], label="dB")
    fig.suptitle(name)
    fig.tight_layout()
    path = dst / f"{name}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def main(argv) -> int:
    if not argv:
        print(__doc__, file=sys.stderr)
        return 2
    src = Path(argv[0])
    dst = Path(argv[1]) if len(argv) > 1 else src
    dst.mkdir(parents=True, exist_ok=True)
    for summary in sorted(src.glob("*_summary.json")):
        print(plot_bundle(src, summary.name[: -len("_summary.json")], dst))
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
