"""Command-line front end.

    coupled-regulation analyze SCENARIO
    coupled-regulation synthesize SCENARIO [--output-dir DIR]
    coupled-regulation run SCENARIO [--output-dir DIR] [--step H] [--t-final T] [--threshold X ...]
    coupled-regulation reproduce {fig4,fig5,fig6,fig7} [--output-dir DIR] ...

Reports go to stdout as JSON.  Exit status: 0 success, 1 negative verdict or
synthesis/simulation failure, 2 invalid input.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import coupling as cp
from .errors import CoupledRegulationError, DivergenceError, ValidationError
from .scenario import COUPLED, FIGURES, UNCOUPLED, load_scenario, poles_to_json, ring_benchmark
from .sim import block_spectrum, crossing_time, metrics, simulate
from .synthesis import check_positive_real, predict_spectrum

EXIT_OK, EXIT_NEGATIVE, EXIT_INVALID = 0, 1, 2
SUMMARY_TIME = 15.0
# long enough for the uncoupled ring to settle below the default threshold
REPRODUCE_HORIZON = 40.0


def _emit(report, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(report, indent=2) + "\n")


def analyze_report(sf):
    cm = cp.build_coupling(sf.network())
    margins = cp.stability_margins(cm)
    diag = cp.diagonalizability_check(cm)
    report = {
        "n_agents": cm.n_agents,
        "stability": {"margins": margins.margins.tolist(), "verdict": margins.verdict},
        "lambda_min_sym": cp.symmetric_min_eig(cm),
        "diagonalizability": {"condition_met": diag.verdict,
                              "order": [i + 1 for i in diag.order]},
        "is_laplacian": cp.is_laplacian(cm),
        "k": None,
    }
    if margins.verdict:
        report["k"] = cp.compute_kz(cm).k
    return report


def cmd_analyze(args):
    report = analyze_report(load_scenario(args.scenario))
    _emit(report)
    return EXIT_OK if report["stability"]["verdict"] else EXIT_NEGATIVE


def synthesize_report(sf):
    if sf.gain_kind == "F":
        raise ValidationError("synthesize needs a 'spec' or 'positive_real' gain source")
    plant = sf.plant()
    gain = sf.resolve_gain()
    d_values = sf.network().self_gains
    report = {"source": sf.gain_kind, "F": gain.f.tolist(),
              "K": None if gain.k_reduced is None else gain.k_reduced.tolist()}
    spec = sf.gain_spec()
    if spec is not None:
        report["predicted_spectrum"] = [
            {"d": float(d), "eigenvalues": poles_to_json(predict_spectrum(plant, spec, d))}
            for d in d_values]
    else:
        sol = gain.metadata["riccati"]
        cert = check_positive_real(plant, gain, sol.k)
        report["k"] = sol.k
        report["care_residual"] = sol.residual
        report["sign_convention"] = gain.metadata["sign_convention"]
        report["positive_real"] = {"passed": cert.passed, "hurwitz": cert.hurwitz,
                                   "min_hermitian_eig": cert.min_hermitian_eig,
                                   "worst_frequency": cert.worst_frequency}
    return gain, report


def cmd_synthesize(args):
    path = Path(args.scenario)
    sf = load_scenario(path)
    gain, report = synthesize_report(sf)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"{path.stem}.synth.json"
    sf.with_explicit_gain(gain.f).save(out)
    report["written"] = str(out)
    _emit(report)
    return EXIT_OK


def csv_header(n, n_agents):
    cols = ["t"] + [f"x0_{k}" for k in range(1, n + 1)]
    for i in range(1, n_agents + 1):
        cols += [f"x{i}_{k}" for k in range(1, n + 1)]
    return cols + ["phi", "psi"]


def write_csv(path, record):
    met = metrics(record)
    T, N, n = record.agents.shape
    data = np.column_stack([record.times, record.leader, record.agents.reshape(T, N * n),
                            met.phi, met.psi])
    np.savetxt(path, data, fmt="%.17g", delimiter=",",
               header=",".join(csv_header(n, N)), comments="")
    return met


def _value_at(times, series, t):
    i = int(np.searchsorted(times, t - 1e-9))
    return None if i >= len(times) else float(series[i])


def trajectory_summary(record, thresholds):
    met = metrics(record)
    phi0 = float(met.phi[0])
    summary = {
        "rows": int(record.times.size),
        "t_final": float(record.times[-1]),
        "crossing_times": {
            name: {repr(float(th)): crossing_time(record.times, series, th) for th in thresholds}
            for name, series in (("psi", met.psi), ("phi", met.phi))},
        "phi_initial": phi0,
        "phi_ratio": float(met.phi[-1]) / phi0 if phi0 > 0 else None,
    }
    p15 = _value_at(record.times, met.phi, SUMMARY_TIME)
    summary[f"phi_ratio_t{SUMMARY_TIME:g}"] = p15 / phi0 if phi0 > 0 and p15 is not None else None
    return summary


def run_to_files(sf, csv_path, report_path, t_final=None, step=None, thresholds=None):
    """Simulate, write CSV and JSON sidecar; returns ``(report, diverged)``."""
    thresholds = thresholds or sf.thresholds
    scenario = sf.to_scenario(t_final=t_final, step=step)
    spectrum = block_spectrum(scenario.plant, scenario.coupling, scenario.gain)
    diverged = None
    try:
        record = simulate(scenario)
    except DivergenceError as exc:
        record, diverged = exc.record, exc.time
    write_csv(csv_path, record)
    report = {"csv": str(csv_path),
              "block_spectrum": poles_to_json(spectrum),
              "hurwitz": bool(np.max(spectrum.real) < 0),
              "diverged_at": diverged}
    report.update(trajectory_summary(record, thresholds))
    Path(report_path).write_text(json.dumps(report, indent=2) + "\n")
    return report, diverged is not None


def cmd_run(args):
    path = Path(args.scenario)
    sf = load_scenario(path)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = Path(args.output) if args.output else out_dir / f"{path.stem}.csv"
    report, diverged = run_to_files(sf, csv_path, csv_path.with_suffix(".report.json"),
                                    args.t_final, args.step, args.threshold)
    _emit(report)
    return EXIT_NEGATIVE if diverged else EXIT_OK


def reproduce(fig, out_dir, t_final=None, step=None, thresholds=None):
    kind, f = FIGURES[fig]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    thresholds = thresholds or [0.5]
    cases = {}
    for label, (rho, eps) in (("uncoupled", UNCOUPLED), ("coupled", COUPLED)):
        sf = ring_benchmark(rho, eps, f, horizon=REPRODUCE_HORIZON)
        stem = out_dir / f"{fig}_{label}"
        report, _ = run_to_files(sf, stem.with_suffix(".csv"), stem.with_suffix(".report.json"),
                                 t_final, step, thresholds)
        report.update(rho=rho, epsilon=eps)
        cases[label] = report
    key = repr(float(thresholds[0]))
    t_unc = cases["uncoupled"]["crossing_times"]["psi"][key]
    t_cpl = cases["coupled"]["crossing_times"]["psi"][key]
    summary = {
        "figure": fig, "content": kind, "F": f, "threshold": thresholds[0],
        "psi_crossing": {"uncoupled": t_unc, "coupled": t_cpl},
        "coupled_first": None if t_unc is None or t_cpl is None else t_cpl < t_unc,
        "crossing_ratio": None if not t_unc or t_cpl is None else t_cpl / t_unc,
        "phi_ratio_t15": {k: v[f"phi_ratio_t{SUMMARY_TIME:g}"] for k, v in cases.items()},
        "cases": cases,
    }
    (out_dir / f"{fig}_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    lines = ["case\trho\tepsilon\tpsi_cross\tphi15/phi0"]
    for label, rep in cases.items():
        lines.append(f"{label}\t{rep['rho']}\t{rep['epsilon']}\t"
                     f"{rep['crossing_times']['psi'][key]}\t{rep['phi_ratio_t15']}")
    (out_dir / f"{fig}_summary.tsv").write_text("\n".join(lines) + "\n")
    return summary


def cmd_reproduce(args):
    summary = reproduce(args.figure, args.output_dir, args.t_final, args.step, args.threshold)
    _emit({k: v for k, v in summary.items() if k != "cases"})
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="coupled-regulation", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sim=False):
        p.add_argument("--output-dir", default=".", help="directory for written files")
        if sim:
            p.add_argument("--step", type=float, help="override integration step")
            p.add_argument("--t-final", type=float, help="override time horizon")
            p.add_argument("--threshold", type=float, action="append",
                           help="crossing-time threshold (repeatable; default from file or 0.5)")

    p = sub.add_parser("analyze", help="coupling-matrix certificates")
    p.add_argument("scenario")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synthesize", help="compute F from the scenario's gain source")
    p.add_argument("scenario")
    common(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("run", help="simulate and write CSV plus report")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", help="CSV path (default OUTPUT_DIR/<stem>.csv)")
    common(p, sim=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="built-in five-agent ring experiments")
    p.add_argument("figure", choices=sorted(FIGURES))
    common(p, sim=True)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CoupledRegulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
