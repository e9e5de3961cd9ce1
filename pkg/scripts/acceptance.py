"""Run the acceptance checks against the bundled scenario configs and print PASS/FAIL per check.

Usage:
    uv run python scripts/acceptance.py [check ...]

Checks: waist, divergence, uncertainty, fringes, eikonal, conservation, relativistic, convergence.
"""

import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

# Add project root to path
ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from helmray.analysis import (
    convergence_ratio,
    divergence_slope,
    fringe_comparison,
    fringe_extrema,
    intensity_profile,
    uncertainty_product,
    waist_error,
)
from helmray.core import build_scenario
from helmray.dynamics import classical_trajectories, run
from helmray.errors import HelmrayError, SimulationFault
from helmray.oracle import oracle_profile
from helmray.schemas import load_run_config

CONFIGS = ROOT / "configs"


def scenario_from(name: str, **overrides):
    run_config = load_run_config(CONFIGS / f"{name}.json")
    if overrides:
        run_config = run_config.model_copy(update=overrides)
    return build_scenario(run_config)


_gaussian_record = None


def gaussian_record():
    global _gaussian_record
    if _gaussian_record is None:
        _gaussian_record = run(scenario_from("gaussian"))
    return _gaussian_record


def check_waist():
    error = waist_error(gaussian_record())
    return error <= 0.02, f"max relative waist error {error:.3g} (limit 0.02)"


def check_divergence():
    estimate = divergence_slope(gaussian_record())
    return estimate.relative_error <= 0.05, (
        f"slopes {estimate.slope_minus:.5g}/{estimate.slope_plus:.5g} vs {estimate.analytic:.5g}, "
        f"relative error {estimate.relative_error:.3g} (limit 0.05)"
    )


def check_uncertainty():
    record = gaussian_record()
    rayleigh = record.scenario.rayleigh_length
    near = uncertainty_product(record, 0.01 * rayleigh).product_over_h
    far = uncertainty_product(record, 3.0 * rayleigh).product_over_h
    stations = [z for z in (np.min(s.positions[:, 1]) for s in record.snapshots) if 0.01 * rayleigh <= z <= 3.0 * rayleigh]
    series = [uncertainty_product(record, z).product_over_h for z in stations]
    monotone = all(b >= a for a, b in zip(series, series[1:]))
    passed = near <= 0.1 and 4.0 <= far <= 16.0 and monotone
    return passed, f"product/h near {near:.3g} (<= 0.1), far {far:.3g} (in [4, 16]), monotone {monotone}"


def check_fringes():
    scenario = scenario_from("slit")
    try:
        record = run(scenario)
    except SimulationFault as fault:
        return False, f"slit run stopped: {type(fault).__name__} at step {fault.step}"
    z = float(np.min(record.final.positions[:, 1]))
    profile = intensity_profile(record, z)
    span = scenario.beam_profile.span
    xs = np.linspace(-span, span, 2201)
    reference = oracle_profile(scenario.beam_profile, scenario.wavelength, z, xs)
    matches = [m for m in fringe_comparison(fringe_extrema(profile), fringe_extrema(reference)) if m.kind == "min"]
    per_side = {side: sum(1 for m in matches if m.side == side) for side in (-1, 1)}
    worst = max((m.relative_offset for m in matches), default=math.inf)
    passed = min(per_side.values()) >= 3 and worst <= 0.05
    return passed, f"matched minima per side {per_side}, max offset {worst:.3g} (limit 0.05)"


def check_eikonal():
    vacuum = run(scenario_from("em_vacuum_eikonal"))
    deviation = float(np.max(np.abs(vacuum.positions()[:, :, 0] - vacuum.launch.positions[:, 0])))

    quantum = scenario_from("gaussian", wave_potential_enabled=False)
    coupled = run(quantum)
    classical = classical_trajectories(quantum)
    identical = np.array_equal(coupled.positions(), classical.positions()) and np.array_equal(
        coupled.momenta(), classical.momenta()
    )
    passed = deviation <= 1e-10 and identical
    return passed, f"EM vacuum transverse deviation {deviation:.3g} (limit 1e-10), quantum == classical {identical}"


def check_conservation():
    summary = gaussian_record().conservation()
    limits = {
        "max_hamiltonian_drift": 1e-6,
        "max_momentum_drift": 1e-6,
        "max_flux_drift": 1e-12,
        "max_perpendicularity": 1e-14,
    }
    failed = [key for key, limit in limits.items() if summary[key] > limit]
    detail = ", ".join(f"{key} {summary[key]:.3g}" for key in limits)
    return not failed, detail


def check_relativistic():
    relativistic = run(scenario_from("relativistic"))
    quantum = gaussian_record()
    a = relativistic.positions()
    b = quantum.positions()
    transverse = float(np.max(np.abs(a[:, :, 0] - b[:, :, 0])) / np.max(np.abs(b[:, :, 0])))
    longitudinal = float(np.max(np.abs(a[:, 1:, 1] - b[:, 1:, 1]) / np.abs(b[:, 1:, 1])))

    massless = run(scenario_from("massless"))
    light = run(scenario_from("em_vacuum_eikonal", wave_potential_enabled=True, name="massless"))
    identical = np.array_equal(massless.positions(), light.positions())
    passed = transverse <= 1e-4 and longitudinal <= 1e-4 and identical
    return passed, (
        f"relativistic vs quantum: x {transverse:.3g}, z {longitudinal:.3g} (limit 1e-4); "
        f"massless == EM vacuum {identical}"
    )


def check_convergence():
    ratios = {}
    oscillator = scenario_from("oscillator")
    ratios["oscillator"] = convergence_ratio(oscillator, 0.02, 100)
    gaussian = scenario_from("gaussian")
    ratios["gaussian"] = convergence_ratio(gaussian, 2.0 * gaussian.integration.dt, 100)
    passed = all(3.5 <= ratio <= 4.5 for ratio in ratios.values())
    return passed, ", ".join(f"{name} {ratio:.3g}" for name, ratio in ratios.items()) + " (in [3.5, 4.5])"


CHECKS = {
    "waist": check_waist,
    "divergence": check_divergence,
    "uncertainty": check_uncertainty,
    "fringes": check_fringes,
    "eikonal": check_eikonal,
    "conservation": check_conservation,
    "relativistic": check_relativistic,
    "convergence": check_convergence,
}


def main():
    logging.basicConfig(level=logging.WARNING, format="[%(module)-12s] %(message)s")
    names = sys.argv[1:] or list(CHECKS)
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        print(f"Unknown check(s): {', '.join(unknown)}. Available: {', '.join(CHECKS)}")
        sys.exit(1)

    failures = 0
    for name in names:
        try:
            passed, detail = CHECKS[name]()
        except HelmrayError as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        failures += not passed
        print(f"{'PASS' if passed else 'FAIL'}  {name:<13} {detail}")
    print(f"{len(names) - failures}/{len(names)} checks passed")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
