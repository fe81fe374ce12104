"""Closed-loop poles of A - d B F against their large-d predictions.

Designs F for the ring plant from a dominant pole and a fast-mode slope, then
prints eig(A - d B F) next to {s_1, -d sigma_1} over a log-spaced range of d.
"""
import argparse

import numpy as np

from coupled_regulation.scenario import RING_A, RING_B
from coupled_regulation.synthesis import GainSpec, Plant, assign_gain, verify_convergence


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--pole", type=float, default=-0.19665)
    parser.add_argument("--sigma", type=float, default=0.9306)
    parser.add_argument("--d-min", type=float, default=0.1)
    parser.add_argument("--d-max", type=float, default=1e4)
    parser.add_argument("--points", type=int, default=11)
    args = parser.parse_args(argv)

    plant = Plant(RING_A, RING_B)
    spec = GainSpec([args.pole], [args.sigma])
    gain = assign_gain(plant, spec)
    ds = np.logspace(np.log10(args.d_min), np.log10(args.d_max), args.points)
    rep = verify_convergence(plant, gain, spec, ds)
    print(f"F = {gain.f.ravel().tolist()}  K = {gain.k_reduced.ravel().tolist()}")
    print("d\teigenvalues\t|lam1 - s1|\t|lam2 + d sigma|/(d sigma)")
    for d, eigs, e1, e2 in zip(ds, rep.eigenvalues, rep.dominant_errors, rep.fast_relative_errors):
        shown = ", ".join(f"{z.real:.5g}{z.imag:+.3g}j" for z in eigs)
        print(f"{d:.4g}\t{shown}\t{e1:.3e}\t{e2:.3e}")
    print("monotone over the upper half of d:", rep.monotone)


if __name__ == "__main__":
    main()
