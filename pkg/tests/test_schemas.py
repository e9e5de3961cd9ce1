import json

import pytest

from helmray.errors import ConfigurationError
from helmray.schemas import (
    HarmonicFieldConfig,
    RunConfig,
    SweepConfig,
    line_of,
    load_run_config,
    load_sweep_config,
    parse_run_config,
)

from conftest import ROOT, gaussian_document

NEGATIVE_W0 = """{
  "name": "bad",
  "system": "quantum",
  "beam": {
    "w0": -1.0,
    "ray_count": 41
  }
}
"""


def test_negative_w0_names_the_key_and_its_line():
    with pytest.raises(ConfigurationError) as excinfo:
        parse_run_config(NEGATIVE_W0, "bad.json")

    error = excinfo.value
    assert error.key == "beam.w0"
    assert error.line == 5
    assert str(error).startswith("line 5: beam.w0: bad.json:")


def test_unknown_keys_are_rejected():
    document = gaussian_document(beam={"w0": 1.0, "colour": "red"})

    with pytest.raises(ConfigurationError) as excinfo:
        parse_run_config(json.dumps(document))
    assert excinfo.value.key == "beam.colour"


def test_invalid_json_reports_its_line():
    with pytest.raises(ConfigurationError) as excinfo:
        parse_run_config('{\n  "system": "quantum",\n  oops\n}')

    assert excinfo.value.line == 3


def test_missing_file_is_a_configuration_error(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_run_config(tmp_path / "missing.json")


def test_defaults_and_medium_union(write_config):
    document = gaussian_document(medium={"kind": "potential", "field": {"shape": "harmonic", "stiffness": 2.0}})
    run_config = load_run_config(write_config(document))

    assert isinstance(run_config.medium.field, HarmonicFieldConfig)
    assert run_config.units.hbar == 1.0
    assert run_config.wave_potential_enabled
    assert run_config.regularization.edge_stencil_policy == "copy"
    assert run_config.analyses == []


def test_config_hash_is_stable_and_sensitive():
    first = RunConfig.model_validate(gaussian_document())
    again = parse_run_config(json.dumps(gaussian_document(), indent=4))
    changed = RunConfig.model_validate(gaussian_document(wave_potential_enabled=False))

    assert first.config_hash() == again.config_hash()
    assert first.config_hash() != changed.config_hash()
    assert len(first.config_hash()) == 64


def test_sweep_axes_must_not_be_empty(write_config):
    with pytest.raises(ConfigurationError):
        load_sweep_config(write_config({"base": gaussian_document(), "grid": {"beam.w0": []}}))

    sweep = load_sweep_config(write_config({"base": gaussian_document(), "grid": {"beam.w0": [1.0, 2.0]}}))
    assert isinstance(sweep, SweepConfig)


def test_line_of_follows_nested_keys():
    assert line_of(NEGATIVE_W0, ("beam", "w0")) == 5
    assert line_of(NEGATIVE_W0, "beam.ray_count") == 6
    assert line_of(NEGATIVE_W0, ("nowhere",)) is None


def test_closure_defaults_to_pressure_and_rejects_unknown_names():
    assert parse_run_config(json.dumps(gaussian_document())).regularization.closure == "pressure"

    document = gaussian_document(regularization={"closure": "lumped"})
    with pytest.raises(ConfigurationError) as excinfo:
        parse_run_config(json.dumps(document))
    assert excinfo.value.key == "regularization.closure"


def test_bundled_oscillator_config_runs_without_the_wave_potential():
    assert load_run_config(ROOT / "configs" / "oscillator.json").wave_potential_enabled is False
