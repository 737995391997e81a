"""Command-line entry point.

Subcommands::

    seqbell svalues --theta-deg 18.4
    seqbell sweep --from-deg 0 --to-deg 45 --step-deg 0.5 --out sweep.csv
    seqbell simulate --config experiment.json --out points.csv [--seed N]
    seqbell verify-circuit --theta-deg 18.4 --phi-deg 0 [--dump-circuit c.json]

Exit codes: 0 success, 1 usage or config error, 2 verification failure.
Angles are degrees here and radians everywhere else; ``_rad`` is the only
conversion point.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from . import bell, montecarlo, optics
from .weakmeas import KrausPair, WeakMeasurement, kraus_pair

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2

VERIFY_TOL = 1e-9

SWEEP_HEADER = ["theta_deg", "F", "G", "S_AB1_analytic", "S_AB2_analytic", "S_AB1_sim", "S_AB2_sim"]
SIMULATE_HEADER = [
    "theta_deg",
    "S_AB1",
    "S_AB1_sigma",
    "S_AB2",
    "S_AB2_sigma",
    "sigmas_above_2_AB1",
    "sigmas_above_2_AB2",
    "seed",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rad(deg: float) -> float:
    return float(np.deg2rad(deg))


def _num(x: float) -> str:
    return f"{x:.10g}"


def _theta_deg(value: float) -> float:
    if not 0.0 <= value <= 90.0:
        raise UsageError(f"theta must lie in [0, 90] degrees, got {value}")
    return value


def cmd_svalues(args) -> int:
    if (args.theta_deg is None) == (args.theta is None):
        raise UsageError("give theta either positionally or with --theta-deg")
    theta_deg = _theta_deg(args.theta_deg if args.theta_deg is not None else args.theta)
    theta = _rad(theta_deg)
    sv = bell.predicted_svalues(theta)
    v1, v2 = sv.violations
    print(f"theta_deg = {theta_deg:.6g}")
    print(f"F         = {np.sin(2 * theta):.6g}")
    print(f"G         = {np.cos(2 * theta):.6g}")
    print(f"S_AB1     = {sv.s_ab1:.6g}  violation={'true' if v1 else 'false'}")
    print(f"S_AB2     = {sv.s_ab2:.6g}  violation={'true' if v2 else 'false'}")
    return EXIT_OK


def sweep_rows(from_deg: float, to_deg: float, step_deg: float) -> list[list[str]]:
    if step_deg <= 0:
        raise UsageError("--step-deg must be positive")
    if from_deg > to_deg:
        raise UsageError("--from-deg must not exceed --to-deg")
    _theta_deg(from_deg)
    _theta_deg(to_deg)
    n = int(np.floor((to_deg - from_deg) / step_deg + 1e-9)) + 1
    degs = [from_deg + i * step_deg for i in range(n)]
    rows = []
    for d, pt in zip(degs, bell.sweep([_rad(d) for d in degs])):
        rows.append(
            [
                _num(d),
                _num(np.sin(2 * pt.theta)),
                _num(np.cos(2 * pt.theta)),
                _num(pt.analytic.s_ab1),
                _num(pt.analytic.s_ab2),
                _num(pt.simulated.s_ab1),
                _num(pt.simulated.s_ab2),
            ]
        )
    return rows


def _write_csv(path: str, header: Sequence[str], rows) -> None:
    try:
        fh = sys.stdout if path == "-" else open(path, "w", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_sweep(args) -> int:
    rows = sweep_rows(args.from_deg, args.to_deg, args.step_deg)
    _write_csv(args.out, SWEEP_HEADER, rows)
    return EXIT_OK


def simulate_rows(cfg: montecarlo.ExperimentConfig, thetas_deg: Sequence[float]) -> list[list[str]]:
    rows = []
    for d, pt in zip(thetas_deg, montecarlo.run_experiment(cfg)):
        rows.append(
            [
                _num(d),
                _num(pt.ab1.s),
                _num(pt.ab1.sigma),
                _num(pt.ab2.s),
                _num(pt.ab2.sigma),
                _num(pt.ab1.sigmas_above_2),
                _num(pt.ab2.sigmas_above_2),
                str(cfg.seed),
            ]
        )
    return rows


def cmd_simulate(args) -> int:
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config field '<root>': must be a JSON object")
    if args.seed is not None:
        doc = {**doc, "seed": args.seed}
    try:
        cfg = montecarlo.config_from_dict(doc)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    thetas_deg = doc.get("thetas_deg", list(montecarlo.REFERENCE_THETAS_DEG))
    try:
        rows = simulate_rows(cfg, thetas_deg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write_csv(args.out, SIMULATE_HEADER, rows)
    return EXIT_OK


def cmd_verify_circuit(args) -> int:
    theta = _rad(_theta_deg(args.theta_deg))
    phi = _rad(args.phi_deg)
    offset = _rad(args.perturb_hwp3_deg)
    if args.circuit:
        return _verify_circuit_file(args.circuit, theta, phi)
    if args.dump_circuit:
        with open(args.dump_circuit, "w") as fh:
            fh.write(optics.build_fig2a_circuit(theta, phi, hwp3_offset=offset).to_json())
    devs = optics.fig2_deviations(theta, phi, hwp3_offset=offset)
    worst = max(devs.values())
    for name, d in devs.items():
        print(f"{name:12s} max_deviation = {d:.6g}")
    ok = worst <= VERIFY_TOL
    print(f"result: {'PASS' if ok else 'FAIL'} (tolerance {VERIFY_TOL:g})")
    return EXIT_OK if ok else EXIT_VERIFY


def _verify_circuit_file(path: str, theta: float, phi: float) -> int:
    try:
        with open(path) as fh:
            circuit = optics.Circuit.from_json(fh.read())
        compiled = optics.compile_to_kraus(circuit)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"bad circuit document {path}: {exc}") from None
    ideal = kraus_pair(WeakMeasurement(theta, optics.measurement_axis(phi)))
    if isinstance(compiled, KrausPair):
        dev = optics.verify_equivalence(compiled, ideal)
    else:
        (outcome,) = circuit.ports
        dev = optics.verify_equivalence(compiled, ideal[outcome])
    print(f"{'circuit':12s} max_deviation = {dev:.6g}")
    ok = dev <= VERIFY_TOL
    print(f"result: {'PASS' if ok else 'FAIL'} (tolerance {VERIFY_TOL:g})")
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqbell", description="Sequential weak-measurement CHSH toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("svalues", help="closed-form F, G and S values at one theta")
    p.add_argument("theta", type=float, nargs="?", help="theta in degrees")
    p.add_argument("--theta-deg", type=float, default=None)
    p.set_defaults(func=cmd_svalues)

    p = sub.add_parser("sweep", help="analytic and exactly simulated S over a theta grid (CSV)")
    p.add_argument("--from-deg", type=float, default=0.0)
    p.add_argument("--to-deg", type=float, default=45.0)
    p.add_argument("--step-deg", type=float, default=0.5)
    p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo coincidence experiment (CSV)")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", default="-")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-circuit", help="compare compiled optical circuits with the ideal Kraus pair")
    p.add_argument("--theta-deg", type=float, required=True)
    p.add_argument("--phi-deg", type=float, default=0.0)
    p.add_argument("--perturb-hwp3-deg", type=float, default=0.0, help="detune HWP3 (negative control)")
    p.add_argument("--dump-circuit", default=None, help="write the two-port circuit as JSON")
    p.add_argument("--circuit", default=None, help="verify this circuit JSON instead of the built-in boxes")
    p.set_defaults(func=cmd_verify_circuit)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"seqbell: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
