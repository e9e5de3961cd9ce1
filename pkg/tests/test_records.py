import json

import numpy as np
import pytest

from helmray.core import build_scenario
from helmray.dynamics import run
from helmray.errors import OutOfDomainError, RecordError
from helmray.records import load_record, read_table, summary, write_record
from helmray.schemas import RunConfig

from conftest import gaussian_document


def completed_run(document=None):
    run_config = RunConfig.model_validate(document or gaussian_document())
    record = run(build_scenario(run_config))
    record.config = run_config.model_dump(mode="json")
    record.config_hash = run_config.config_hash()
    return record


@pytest.fixture()
def record_dir(tmp_path):
    record = completed_run()
    write_record(record, tmp_path / "run")
    return record, tmp_path / "run"


def test_written_record_loads_back_unchanged(record_dir):
    record, directory = record_dir

    loaded = load_record(directory, expected_hash=record.config_hash)

    assert [s.step for s in loaded.snapshots] == [0, 5, 10]
    assert np.array_equal(loaded.positions(), record.positions())
    assert np.array_equal(loaded.momenta(), record.momenta())
    assert np.array_equal(loaded.final.amplitudes, record.final.amplitudes)
    assert len(loaded.reports) == len(record.reports)
    assert loaded.conservation()["max_hamiltonian_drift"] == record.conservation()["max_hamiltonian_drift"]


def test_every_table_echoes_the_config_hash(record_dir):
    record, directory = record_dir

    for name in ("trajectories.csv", "reports.csv"):
        header, columns, rows = read_table(directory / name)
        assert header["config_hash"] == record.config_hash
        assert header["config"]["name"] == "small-gaussian"
        assert rows
    meta = json.loads((directory / "summary.json").read_text())
    assert meta["config_hash"] == record.config_hash
    assert meta["partial"] is False
    assert meta["steps_completed"] == 10


def test_truncated_last_line_is_rejected(record_dir):
    _, directory = record_dir
    path = directory / "trajectories.csv"
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")

    with pytest.raises(RecordError, match="truncated"):
        load_record(directory)


def test_missing_snapshot_block_is_rejected(record_dir):
    _, directory = record_dir
    path = directory / "trajectories.csv"
    lines = path.read_text().splitlines()
    kept = lines[:2] + [line for line in lines[2:] if not line.startswith("5,")]
    path.write_text("\n".join(kept) + "\n")

    with pytest.raises(RecordError, match="snapshot missing after step 0"):
        load_record(directory)


def test_hash_mismatch_is_rejected(record_dir):
    _, directory = record_dir

    with pytest.raises(RecordError):
        load_record(directory, expected_hash="0" * 64)

    path = directory / "reports.csv"
    text = path.read_text()
    header = json.loads(text.splitlines()[0][2:])
    header["config_hash"] = "f" * 64
    path.write_text("# " + json.dumps(header) + "\n" + text.split("\n", 1)[1])
    with pytest.raises(RecordError, match="reports.csv"):
        load_record(directory)


def test_record_without_config_cannot_be_written(tmp_path):
    record = completed_run()
    record.config = None

    with pytest.raises(RecordError):
        write_record(record, tmp_path / "run")
    with pytest.raises(RecordError):
        summary(record)


def test_partial_fault_record_round_trips(tmp_path):
    document = {
        "name": "escape",
        "system": "em",
        "beam": {"kind": "gaussian", "w0": 1.0, "wavelength": 2e-4, "span": 4.0, "ray_count": 21},
        "medium": {"domain": [-10.0, 10.0, -1.0, 1.0]},
        "integration": {"dt": 0.3, "n_steps": 10, "snapshot_stride": 10},
    }
    run_config = RunConfig.model_validate(document)
    with pytest.raises(OutOfDomainError) as excinfo:
        run(build_scenario(run_config))
    record = excinfo.value.record
    record.config = run_config.model_dump(mode="json")
    record.config_hash = run_config.config_hash()
    write_record(record, tmp_path / "escape")

    loaded = load_record(tmp_path / "escape")

    assert isinstance(loaded.fault, OutOfDomainError)
    assert loaded.fault.step == 4
    assert [s.step for s in loaded.snapshots] == [0, 3]
    meta = json.loads((tmp_path / "escape" / "summary.json").read_text())
    assert meta["partial"] is True
    assert meta["fault"]["kind"] == "OutOfDomainError"
