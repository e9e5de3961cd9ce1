import json

import pytest

from helmray.cli import EXIT_CONFIG, EXIT_FAULT, EXIT_OK, main
from helmray.records import read_table

from conftest import gaussian_document

ESCAPING_LIGHT = {
    "name": "escape",
    "system": "em",
    "beam": {"kind": "gaussian", "w0": 1.0, "wavelength": 2e-4, "span": 4.0, "ray_count": 21},
    "medium": {"domain": [-10.0, 10.0, -1.0, 1.0]},
    "integration": {"dt": 0.3, "n_steps": 10, "snapshot_stride": 10},
}


@pytest.fixture()
def run_dir(tmp_path, write_config):
    out = tmp_path / "run"
    assert main(["run", "--config", str(write_config(gaussian_document())), "--out", str(out), "--quiet"]) == EXIT_OK
    return out


def test_run_writes_the_record(tmp_path, write_config, capsys):
    out = tmp_path / "run"

    status = main(["run", "--config", str(write_config(gaussian_document())), "--out", str(out), "--quiet"])

    assert status == EXIT_OK
    assert sorted(path.name for path in out.iterdir()) == ["reports.csv", "summary.json", "trajectories.csv"]
    assert "3 snapshots written" in capsys.readouterr().out


def test_run_reports_configuration_errors_with_their_key(tmp_path, write_config, capsys):
    path = write_config(gaussian_document(beam={"w0": -1.0}))

    status = main(["run", "--config", str(path), "--out", str(tmp_path / "out")])

    assert status == EXIT_CONFIG
    assert "beam.w0" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_run_with_a_physics_fault_keeps_partial_outputs(tmp_path, write_config, capsys):
    out = tmp_path / "escape"

    status = main(["run", "--config", str(write_config(ESCAPING_LIGHT)), "--out", str(out), "--quiet"])

    assert status == EXIT_FAULT
    meta = json.loads((out / "summary.json").read_text())
    assert meta["partial"] is True
    assert meta["fault"]["kind"] == "OutOfDomainError"
    assert "physics fault at step 4" in capsys.readouterr().err


def test_run_performs_configured_analyses(tmp_path, write_config):
    out = tmp_path / "run"
    document = gaussian_document(analyses=["compare-waist", "profile"], analysis_z=0.0)

    assert main(["run", "--config", str(write_config(document)), "--out", str(out), "--quiet"]) == EXIT_OK

    assert (out / "waist.csv").exists()
    header, columns, rows = read_table(out / "profile.csv")
    assert header["z"] == 0.0
    assert len(rows) == 41


def test_compare_waist_prints_its_error(run_dir, capsys):
    capsys.readouterr()

    assert main(["compare-waist", str(run_dir)]) == EXIT_OK

    output = capsys.readouterr().out
    assert "max relative waist error:" in output
    assert "NOTE" not in output
    header, columns, rows = read_table(run_dir / "waist.csv")
    assert columns[0] == "z"
    assert len(rows) == 3


def test_compare_waist_flags_eikonal_records(tmp_path, write_config, capsys):
    out = tmp_path / "eikonal"
    document = gaussian_document(wave_potential_enabled=False)
    main(["run", "--config", str(write_config(document)), "--out", str(out), "--quiet"])
    capsys.readouterr()

    assert main(["compare-waist", str(out)]) == EXIT_OK
    assert "NOTE: eikonal record" in capsys.readouterr().out


def test_truncated_record_is_an_error(run_dir, capsys):
    path = run_dir / "trajectories.csv"
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")

    assert main(["profile", str(run_dir)]) == EXIT_CONFIG
    assert "truncated" in capsys.readouterr().err


def test_profile_uncertainty_and_fringes_reports(run_dir, tmp_path):
    reports = tmp_path / "reports"

    assert main(["profile", str(run_dir), "--z", "0", "--out", str(reports)]) == EXIT_OK
    assert main(["uncertainty", str(run_dir), "--out", str(reports), "--method", "std"]) == EXIT_OK
    assert main(["fringes", str(run_dir), "--out", str(reports)]) == EXIT_OK

    _, _, profile_rows = read_table(reports / "profile.csv")
    assert len(profile_rows) == 41
    header, _, uncertainty_rows = read_table(reports / "uncertainty.csv")
    assert header["method"] == "std"
    assert len(uncertainty_rows) == 3
    assert (reports / "fringes.csv").exists()


def test_sweep_command_writes_an_index(tmp_path, write_config, capsys):
    sweep = {"name": "tiny", "base": gaussian_document(), "grid": {"integration.steps_per_rayleigh": [50, 100]}}
    out = tmp_path / "sweep"

    assert main(["sweep", "--config", str(write_config(sweep)), "--out", str(out), "--quiet"]) == EXIT_OK

    assert (out / "tiny-000" / "summary.json").exists()
    assert (out / "tiny-001" / "summary.json").exists()
    assert "2 run(s), 0 fault(s)" in capsys.readouterr().out


def test_sweep_with_a_bad_axis_is_a_configuration_error(tmp_path, write_config):
    sweep = {"name": "bad", "base": gaussian_document(), "grid": {"beam.w0": [-1.0]}}

    assert main(["sweep", "--config", str(write_config(sweep)), "--out", str(tmp_path / "bad")]) == EXIT_CONFIG
