"""Command-line front end: run scenarios, analyse run directories, sweep parameter grids."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from helmray import config
from helmray.analysis import (
    divergence_slope,
    fringe_comparison,
    fringe_extrema,
    intensity_profile,
    uncertainty_product,
    waist_comparison,
)
from helmray.core import build_scenario
from helmray.dynamics import TrajectoryRecord, run
from helmray.errors import HelmrayError, SimulationFault
from helmray.oracle import oracle_profile
from helmray.records import load_record, provenance, write_record, write_table
from helmray.schemas import anchor, load_run_config, load_sweep_config
from helmray.sweep import run_sweep

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAULT = 2


def final_station(record: TrajectoryRecord) -> float:
    """Largest z reached by every ray of the last snapshot."""
    return float(np.min(record.final.positions[:, 1]))


def _header(record: TrajectoryRecord, table: str) -> dict:
    return provenance(record.config, record.config_hash, table)


# --- Analyses on a loaded record ---

def compare_waist(record: TrajectoryRecord, out: Path) -> float:
    comparison = waist_comparison(record)
    write_table(
        out / "waist.csv",
        _header(record, "waist"),
        ("z", "x_minus", "x_plus", "analytic_minus", "analytic_plus", "relative_error"),
        zip(
            comparison.z,
            comparison.x_minus,
            comparison.x_plus,
            comparison.analytic_minus,
            comparison.analytic_plus,
            comparison.relative_error,
        ),
    )
    print(f"max relative waist error: {comparison.max_error:.6g}")
    if not record.scenario.wave_potential_enabled:
        print("NOTE: eikonal record; straight rays depart from the waist hyperbola by construction")
    return comparison.max_error


def report_divergence(record: TrajectoryRecord) -> float:
    estimate = divergence_slope(record)
    print(
        f"asymptotic slopes: {estimate.slope_minus:.6g} / {estimate.slope_plus:.6g} "
        f"(paraxial {estimate.analytic:.6g}, relative error {estimate.relative_error:.3g})"
    )
    return estimate.relative_error


def write_profile(record: TrajectoryRecord, z: float, out: Path) -> Path:
    profile = intensity_profile(record, z)
    path = write_table(
        out / "profile.csv",
        {**_header(record, "profile"), "z": z, "provenance": profile.provenance},
        ("x", "intensity", "ray"),
        zip(profile.x, profile.intensity, profile.rays),
    )
    print(f"profile at z={z:g}: {len(profile)} rays")
    return path


def write_uncertainty(record: TrajectoryRecord, stations: list[float], out: Path, method: str = "range") -> Path:
    results = [uncertainty_product(record, z, method) for z in stations]
    path = write_table(
        out / "uncertainty.csv",
        {**_header(record, "uncertainty"), "method": method},
        ("z", "delta_x", "delta_p_x", "product", "product_over_h", "product_over_hbar", "rays", "degenerate"),
        (
            (r.z, r.delta_x, r.delta_p, r.product, r.product_over_h, r.product_over_hbar, r.ray_count, r.degenerate)
            for r in results
        ),
    )
    last = results[-1]
    print(f"uncertainty at z={last.z:g}: product/h = {last.product_over_h:.6g}")
    return path


def write_fringes(record: TrajectoryRecord, z: float, out: Path, count: int = 3) -> float:
    profile = intensity_profile(record, z)
    scenario = record.scenario
    xs = np.linspace(profile.x[0], profile.x[-1], max(4 * len(profile), 801))
    reference = oracle_profile(scenario.beam_profile, scenario.wavelength, z, xs)
    matches = fringe_comparison(fringe_extrema(profile), fringe_extrema(reference), count)
    write_table(
        out / "fringes.csv",
        {**_header(record, "fringes"), "z": z},
        ("kind", "side", "order", "x_run", "x_oracle", "relative_offset"),
        ((m.kind, m.side, m.order, m.x_run, m.x_oracle, m.relative_offset) for m in matches),
    )
    minima = [m for m in matches if m.kind == "min"]
    worst = max((m.relative_offset for m in minima), default=float("nan"))
    print(f"fringes at z={z:g}: {len(minima)} matched minima, max offset {worst:.3g}")
    return worst


def snapshot_stations(record: TrajectoryRecord) -> list[float]:
    return [float(np.min(snapshot.positions[:, 1])) for snapshot in record.snapshots]


def run_analyses(record: TrajectoryRecord, names: list[str], z: float | None, out: Path):
    station = final_station(record) if z is None else z
    for name in names:
        if name == "compare-waist":
            compare_waist(record, out)
        elif name == "divergence":
            report_divergence(record)
        elif name == "profile":
            write_profile(record, station, out)
        elif name == "uncertainty":
            write_uncertainty(record, snapshot_stations(record), out)
        elif name == "fringes":
            write_fringes(record, station, out)


# --- Commands ---

def cmd_run(args) -> int:
    try:
        run_config = load_run_config(args.config)
    except HelmrayError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scenario = build_scenario(run_config)
    except SimulationFault as fault:
        print(f"launch fault: {fault}", file=sys.stderr)
        return EXIT_FAULT
    except HelmrayError as exc:
        if hasattr(exc, "key"):
            anchor(exc, Path(args.config).read_text())
        print(f"configuration error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out or run_config.output.directory or Path(config.OUTPUT_DIR) / run_config.name)
    status = EXIT_OK
    try:
        record = run(scenario, progress=run_config.output.progress and not args.quiet)
    except SimulationFault as fault:
        print(f"physics fault at step {fault.step}: {fault}", file=sys.stderr)
        if fault.record is None:
            return EXIT_FAULT
        record = fault.record
        status = EXIT_FAULT

    record.config = run_config.model_dump(mode="json")
    record.config_hash = run_config.config_hash()
    write_record(record, out)
    if status == EXIT_FAULT:
        print(f"partial outputs written to {out}", file=sys.stderr)
        return status

    print(f"{scenario.name}: {len(record.snapshots)} snapshots written to {out}")
    try:
        run_analyses(record, run_config.analyses, run_config.analysis_z, out)
    except HelmrayError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _analysis_command(action):
    def command(args) -> int:
        try:
            record = load_record(args.record)
            out = Path(args.out) if args.out else Path(args.record)
            action(record, args, out)
        except HelmrayError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK

    return command


def _station(record, args) -> float:
    return final_station(record) if args.z is None else args.z


cmd_compare_waist = _analysis_command(lambda record, args, out: compare_waist(record, out))
cmd_profile = _analysis_command(lambda record, args, out: write_profile(record, _station(record, args), out))
cmd_fringes = _analysis_command(lambda record, args, out: write_fringes(record, _station(record, args), out))
cmd_uncertainty = _analysis_command(
    lambda record, args, out: write_uncertainty(
        record, [args.z] if args.z is not None else snapshot_stations(record), out, args.method
    )
)


def cmd_sweep(args) -> int:
    try:
        sweep = load_sweep_config(args.config)
        out = Path(args.out or Path(config.OUTPUT_DIR) / sweep.name)
        results = run_sweep(sweep, out)
    except HelmrayError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    faults = sum(1 for result in results if result.get("fault") or result.get("status"))
    print(f"{sweep.name}: {len(results)} run(s), {faults} fault(s), index in {out / 'sweep.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    parser = argparse.ArgumentParser(prog="helmray", description="Coupled ray-bundle simulations of Helmholtz waves")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", parents=[common], help="Run a scenario config")
    run_parser.add_argument("--config", required=True, help="Run config (JSON)")
    run_parser.add_argument("--out", help="Output directory")
    run_parser.set_defaults(handler=cmd_run)

    for name, handler, help_text in (
        ("compare-waist", cmd_compare_waist, "Compare the +-w0 rays with the paraxial waist lines"),
        ("profile", cmd_profile, "Intensity profile at a station z"),
        ("uncertainty", cmd_uncertainty, "Uncertainty product at one or all stations"),
        ("fringes", cmd_fringes, "Fringe extrema against the Fresnel oracle"),
    ):
        sub = commands.add_parser(name, parents=[common], help=help_text)
        sub.add_argument("record", help="Run output directory")
        sub.add_argument("--out", help="Directory for the report (default: the run directory)")
        if name != "compare-waist":
            sub.add_argument("--z", type=float, help="Station z (default: the final station)")
        if name == "uncertainty":
            sub.add_argument("--method", choices=("range", "std"), default="range")
        sub.set_defaults(handler=handler)

    sweep_parser = commands.add_parser("sweep", parents=[common], help="Run a Cartesian grid of configs")
    sweep_parser.add_argument("--config", required=True, help="Sweep config (JSON)")
    sweep_parser.add_argument("--out", help="Output directory")
    sweep_parser.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else config.LOG_LEVEL,
        format="[%(module)-12s] %(message)s",
    )
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
