"""Regenerate the example scenario files under scenarios/."""
import argparse
from dataclasses import replace
from pathlib import Path

from coupled_regulation.scenario import COUPLED, GAIN_DAMPED, UNCOUPLED, ring_benchmark


def scenarios():
    coupled = ring_benchmark(*COUPLED)
    yield "ring_coupled", coupled
    yield "ring_uncoupled", ring_benchmark(*UNCOUPLED)
    yield "ring_damped", ring_benchmark(*COUPLED, f=GAIN_DAMPED)
    yield "ring_eps039", ring_benchmark(COUPLED[0], 0.39)
    yield "zero_coupling", ring_benchmark(1.0, 0.0)
    yield "spec_fast", replace(coupled, gain_kind="spec",
                               gain={"dominant_poles": [-0.19665], "sigmas": [0.9306]})
    yield "spec_damped", replace(coupled, gain_kind="spec",
                                 gain={"dominant_poles": [-0.1], "sigmas": [1.0]})
    yield "positive_real", replace(coupled, gain_kind="positive_real", gain={})


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=Path(__file__).resolve().parent.parent / "scenarios",
                        type=Path)
    args = parser.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    for name, sf in scenarios():
        path = args.out / f"{name}.json"
        sf.save(path)
        print(path)


if __name__ == "__main__":
    main()
