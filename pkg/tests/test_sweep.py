import pytest

from helmray import config
from helmray.errors import ConfigurationError
from helmray.records import load_record, read_table
from helmray.schemas import RunConfig, SweepConfig
from helmray.sweep import expand_grid, run_sweep

from conftest import gaussian_document


def make_sweep(grid, name="grid"):
    return SweepConfig(name=name, base=RunConfig.model_validate(gaussian_document()), grid=grid)


def test_grid_expands_to_the_cartesian_product():
    sweep = make_sweep(
        {
            "regularization.edge_stencil_policy": ["copy", "one_sided"],
            "integration.steps_per_rayleigh": [50, 100, 200],
        }
    )

    points = expand_grid(sweep)

    assert [label for label, _, _ in points] == [f"grid-{i:03d}" for i in range(6)]
    label, assignment, run_config = points[1]
    assert assignment == {"integration.steps_per_rayleigh": 50, "regularization.edge_stencil_policy": "one_sided"}
    assert run_config.integration.steps_per_rayleigh == 50
    assert run_config.regularization.edge_stencil_policy == "one_sided"
    assert run_config.name == "grid-001"
    assert len({run_config.config_hash() for _, _, run_config in points}) == 6


def test_grid_values_may_be_whole_sections():
    sweep = make_sweep({"medium.field": [{"shape": "harmonic", "stiffness": 1e-8}]})

    (_, _, run_config), = expand_grid(sweep)

    assert run_config.medium.field.stiffness == 1e-8


def test_invalid_grid_value_is_a_configuration_error():
    with pytest.raises(ConfigurationError) as excinfo:
        expand_grid(make_sweep({"beam.ray_count": [41, 2]}))

    assert excinfo.value.key == "beam.ray_count"


def test_run_sweep_writes_each_point_and_an_index(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "MAX_THREADS", 2)
    sweep = make_sweep({"integration.steps_per_rayleigh": [50, 100]}, name="tiny")

    results = run_sweep(sweep, tmp_path)

    assert [result["fault"] for result in results] == [None, None]
    header, columns, rows = read_table(tmp_path / "sweep.csv")
    assert header["name"] == "tiny"
    assert columns[:3] == ["label", "config_hash", "integration.steps_per_rayleigh"]
    assert [row[0] for row in rows] == ["tiny-000", "tiny-001"]
    assert [row[2] for row in rows] == ["50", "100"]
    assert all(row[3] == "ok" for row in rows)

    loaded = load_record(tmp_path / "tiny-001", expected_hash=rows[1][1])
    assert loaded.scenario.integration.n_steps == 10


def test_failing_grid_point_marks_its_row_and_the_sweep_goes_on(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "MAX_THREADS", 1)
    base = gaussian_document(medium={"kind": "potential", "field": {"shape": "uniform", "value": 0.0}})
    sweep = SweepConfig(name="barrier", base=RunConfig.model_validate(base), grid={"medium.field.value": [0.0, 1e9]})

    results = run_sweep(sweep, tmp_path)

    assert results[1] == {"label": "barrier-001", "status": "EvanescentRegionError"}
    header, columns, rows = read_table(tmp_path / "sweep.csv")
    assert [row[3] for row in rows] == ["ok", "EvanescentRegionError"]
    assert (tmp_path / "barrier-000" / "summary.json").exists()
    assert not (tmp_path / "barrier-001").exists()
