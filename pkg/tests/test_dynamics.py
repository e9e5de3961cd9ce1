import math
from dataclasses import replace

import numpy as np
import pytest

from helmray.core import Integration, Regularization, Scenario, build_scenario, make_bundle
from helmray.dynamics import classical_trajectories, prime, run, step, step_with_report
from helmray.errors import OutOfDomainError
from helmray.media import HarmonicField, Medium, UniformField
from helmray.profiles import BeamProfile
from helmray.schemas import load_run_config
from helmray.units import Units

from conftest import ROOT

RELATIVISTIC_C = 31415926.535897932  # p0 / m0 c = 1e-3 at lambda0 = 2e-4


def make_scenario(system="quantum", medium=None, ray_count=41, span=4.0, dt=None, n_steps=20, stride=5, **options):
    units = options.pop("units", None) or Units.for_system(system)
    if medium is None:
        medium = Medium("index", UniformField(1.0)) if system == "em" else Medium("potential", UniformField(0.0))
    scenario = Scenario(
        system=system,
        units=units,
        medium=medium,
        beam_profile=BeamProfile("gaussian", span=span, ray_count=ray_count),
        wavelength=2e-4,
        integration=Integration(dt=1.0, n_steps=n_steps, snapshot_stride=stride),
        **options,
    )
    dt = dt if dt is not None else scenario.rayleigh_time / 400
    return replace(scenario, integration=Integration(dt=dt, n_steps=n_steps, snapshot_stride=stride))


def test_free_light_rays_advance_by_c_dt():
    scenario = make_scenario("em", wave_potential_enabled=False, ray_count=5, span=2.0)
    bundle = make_bundle(scenario.beam_profile, scenario)

    advanced = step(bundle, scenario, 0.3)

    assert np.array_equal(advanced.positions[:, 0], bundle.positions[:, 0])
    assert np.all(advanced.positions[:, 1] == 0.3)
    assert np.array_equal(advanced.momenta, bundle.momenta)
    assert advanced.step_count == 1
    assert advanced.time == 0.3


def test_step_rejects_non_positive_dt():
    scenario = make_scenario()
    with pytest.raises(ValueError):
        step(make_bundle(scenario.beam_profile, scenario), scenario, 0.0)


def test_uncoupled_oscillator_converges_at_second_order():
    medium = Medium("potential", HarmonicField(stiffness=1.0))
    errors = []
    for dt, steps in ((0.05, 20), (0.025, 40)):
        scenario = make_scenario(
            medium=medium, wave_potential_enabled=False, ray_count=5, span=2.0, dt=dt, n_steps=steps, stride=steps
        )
        record = run(scenario)
        x0 = record.launch.positions[4, 0]
        errors.append(abs(record.final.positions[4, 0] - x0 * math.cos(1.0)))

    assert errors[0] / errors[1] == pytest.approx(4.0, abs=0.3)


def test_zero_steps_keep_only_the_launch_snapshot():
    record = run(make_scenario(n_steps=0))

    assert len(record.snapshots) == 1
    assert record.final.step == 0
    assert len(record.reports) == 1


def test_eikonal_vacuum_light_rays_stay_straight():
    record = run(make_scenario("em", wave_potential_enabled=False))

    assert np.array_equal(record.positions()[:, :, 0], np.broadcast_to(record.launch_abscissas, (len(record.snapshots), 41)))


def test_leaving_the_domain_is_a_fault_with_a_partial_record():
    medium = Medium("index", UniformField(1.0), domain=(-10.0, 10.0, -1.0, 1.0))
    scenario = make_scenario("em", medium=medium, ray_count=21, dt=0.3, n_steps=10, stride=10)

    with pytest.raises(OutOfDomainError) as excinfo:
        run(scenario)

    fault = excinfo.value
    assert fault.step == 4
    assert len(fault.rays) == 21
    assert fault.record.fault is fault
    assert [snapshot.step for snapshot in fault.record.snapshots] == [0, 3]
    assert fault.record.reports[-1].step == 3


def test_eikonal_quantum_rays_match_the_classical_integrator_bit_for_bit():
    scenario = make_scenario(
        medium=Medium("potential", HarmonicField(stiffness=2.0)), wave_potential_enabled=False, dt=0.01, n_steps=30
    )

    coupled = run(scenario)
    classical = classical_trajectories(scenario)

    assert np.array_equal(coupled.positions(), classical.positions())
    assert np.array_equal(coupled.momenta(), classical.momenta())


def test_coupled_gaussian_run_conserves_its_monitors():
    record = run(make_scenario(n_steps=40, stride=10))
    summary = record.conservation()

    assert summary["max_perpendicularity"] <= 1e-14
    assert summary["max_flux_drift"] <= 1e-12
    assert summary["max_momentum_drift"] <= 1e-9
    assert summary["max_hamiltonian_drift"] <= 1e-6
    assert summary["crossing_steps"] == 0
    assert [snapshot.step for snapshot in record.snapshots] == [0, 10, 20, 30, 40]
    assert np.all(np.diff(record.times) > 0)


def test_wave_potential_spreads_the_beam():
    record = run(make_scenario(n_steps=40, stride=10))
    launch = record.launch.positions[:, 0]
    final = record.final.positions[:, 0]

    assert np.all(np.abs(final[launch > 0]) > launch[launch > 0])
    assert record.final.momenta[-1, 0] > 0


def test_symmetric_beam_stays_mirror_symmetric():
    final = run(make_scenario(n_steps=40, stride=40)).final.positions[:, 0]

    np.testing.assert_allclose(final, -final[::-1], atol=1e-10)


def test_last_stride_may_be_shorter():
    record = run(make_scenario(n_steps=12, stride=5))

    assert [snapshot.step for snapshot in record.snapshots] == [0, 5, 10, 12]


def test_relativistic_and_quantum_beams_agree_in_the_slow_limit():
    quantum = run(make_scenario(n_steps=40, stride=40))
    relativistic = run(
        make_scenario(
            "relativistic",
            units=Units.for_system("relativistic", mass=1.0, c=RELATIVISTIC_C),
            n_steps=40,
            stride=40,
        )
    )
    a = relativistic.final.positions
    b = quantum.final.positions

    assert np.max(np.abs(a[:, 0] - b[:, 0])) / np.max(np.abs(b[:, 0])) < 1e-4
    assert np.max(np.abs(a[:, 1] - b[:, 1]) / b[:, 1]) < 1e-4


def test_massless_particles_reproduce_vacuum_light_rays():
    light = run(make_scenario("em", n_steps=20))
    massless = run(make_scenario("massless", n_steps=20))

    assert np.array_equal(massless.positions(), light.positions())


def test_step_report_carries_per_ray_hamiltonians():
    scenario = make_scenario()
    bundle = make_bundle(scenario.beam_profile, scenario)

    advanced, report = step_with_report(bundle, scenario, scenario.integration.dt)

    assert report.step == 1
    assert report.hamiltonians.shape == (41,)
    assert report.max_hamiltonian_drift >= 0
    assert advanced.launch_hamiltonians is not None


def test_step_leaves_amplitudes_and_potential_of_the_final_state():
    scenario = make_scenario()
    bundle, _ = prime(make_bundle(scenario.beam_profile, scenario), scenario)

    advanced, _ = step_with_report(bundle, scenario, scenario.integration.dt)
    refreshed, _ = prime(advanced, scenario)

    assert np.array_equal(refreshed.amplitudes, advanced.amplitudes)
    assert np.array_equal(refreshed.wave_potential, advanced.wave_potential)


def test_collocated_closure_still_runs():
    record = run(make_scenario(n_steps=20, regularization=Regularization(closure="collocated")))

    assert record.final.step == 20
    assert record.conservation()["crossing_steps"] == 0


def config_run(name, rayleigh_lengths=None):
    run_config = load_run_config(ROOT / "configs" / f"{name}.json")
    if rayleigh_lengths is not None:
        integration = run_config.integration.model_copy(update={"rayleigh_lengths": rayleigh_lengths})
        run_config = run_config.model_copy(update={"integration": integration})
    return run(build_scenario(run_config))


def test_gaussian_config_spreads_along_the_waist_line_past_half_a_rayleigh_time():
    record = config_run("gaussian", 0.6)
    scenario = record.scenario
    ray = int(np.flatnonzero(np.isclose(record.launch_abscissas, 1.0))[0])
    t = record.times[-1] / scenario.rayleigh_time

    assert record.final.step == scenario.integration.n_steps
    assert t >= 0.6 - 1e-9
    assert record.conservation()["crossing_steps"] == 0
    assert record.final.positions[ray, 0] == pytest.approx(math.sqrt(1.0 + t**2), rel=1e-3)


@pytest.mark.parametrize("name", ["slit", "double_slit"])
def test_slit_configs_run_through_the_near_field(name):
    record = config_run(name)
    final = record.final.positions[:, 0]
    launch = record.launch.positions[:, 0]

    assert record.final.step == record.scenario.integration.n_steps
    assert record.conservation()["crossing_steps"] == 0
    assert final[-1] > launch[-1]
    np.testing.assert_allclose(final, -final[::-1], atol=1e-6)
