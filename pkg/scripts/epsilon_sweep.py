"""Sweep the ring coupling strength and tabulate certificates and settling.

For each epsilon at fixed rho: stability verdict, smallest margin, lambda_min
of the symmetric part, k, block spectral abscissa under F, and the time at
which the spread psi settles below the threshold.
"""
import argparse

import numpy as np

from coupled_regulation.coupling import (build_coupling, compute_kz, stability_margins,
                                         symmetric_min_eig)
from coupled_regulation.scenario import GAIN_DAMPED, GAIN_FAST, ring_benchmark
from coupled_regulation.sim import block_spectrum, crossing_time, metrics, simulate


def sweep(rho, epsilons, f, horizon, step, threshold):
    rows = []
    for eps in epsilons:
        sf = ring_benchmark(rho, eps, f, horizon=horizon, step=step)
        sc = sf.to_scenario()
        cm = build_coupling(sc.coupling)
        margins = stability_margins(cm)
        abscissa = float(np.max(block_spectrum(sc.plant, cm, sc.gain).real))
        settle = None
        if abscissa < 0:
            rec = simulate(sc)
            settle = crossing_time(rec.times, metrics(rec).psi, threshold)
        rows.append({
            "epsilon": eps,
            "verdict": margins.verdict,
            "min_margin": float(margins.margins.min()),
            "lambda_min": symmetric_min_eig(cm),
            "k": compute_kz(cm).k if margins.verdict else None,
            "abscissa": abscissa,
            "psi_settle": settle,
        })
    return rows


def fmt(value):
    if value is None:
        return "-"
    if isinstance(value, bool):
        return str(value)
    return f"{value:.4g}"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--rho", type=float, default=0.2)
    parser.add_argument("--eps-max", type=float, default=0.5)
    parser.add_argument("--points", type=int, default=11)
    parser.add_argument("--gain", choices=("fast", "damped"), default="fast")
    parser.add_argument("--horizon", type=float, default=40.0)
    parser.add_argument("--step", type=float, default=1e-2)
    parser.add_argument("--threshold", type=float, default=0.5)
    args = parser.parse_args(argv)
    f = GAIN_FAST if args.gain == "fast" else GAIN_DAMPED
    rows = sweep(args.rho, np.linspace(0.0, args.eps_max, args.points), f,
                 args.horizon, args.step, args.threshold)
    cols = list(rows[0])
    print("\t".join(cols))
    for row in rows:
        print("\t".join(fmt(row[c]) for c in cols))


if __name__ == "__main__":
    main()
