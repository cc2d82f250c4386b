"""Summarize a convergence.csv: fitted geometric rate of the err column and a coarse text plot."""

import argparse
import csv

import numpy as np


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("--tail", type=int, default=200, help="number of trailing records used for the fit")
    args = ap.parse_args()

    with open(args.csv) as fh:
        rows = list(csv.DictReader(fh))
    it = np.array([int(r["iter"]) for r in rows])
    err = np.array([float(r["err"]) for r in rows])
    tail = slice(-min(args.tail, len(err)), None)
    slope = np.polyfit(it[tail], np.log(err[tail]), 1)[0]
    ratios = err[1:] / err[:-1]
    print(f"{len(err)} records, final err {err[-1]:.3e}")
    print(f"fitted rate per iteration {np.exp(slope):.5f}; ratio mean {ratios[tail].mean():.5f} std {ratios[tail].std():.5f}")

    lo, hi = np.log10(err.min()), np.log10(err.max())
    for k in np.linspace(0, len(err) - 1, min(25, len(err))).astype(int):
        bar = int(60 * (np.log10(err[k]) - lo) / max(hi - lo, 1e-12))
        print(f"{it[k]:7d} {err[k]:.2e} " + "#" * bar)


if __name__ == "__main__":
    main()
