"""Cartesian parameter grids over a base run config."""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from helmray import config
from helmray.core import build_scenario
from helmray.dynamics import run
from helmray.errors import ConfigurationError, HelmrayError, SimulationFault
from helmray.records import fmt, summary, write_record, write_table
from helmray.schemas import RunConfig, SweepConfig

logger = logging.getLogger(__name__)


def _assign(document: dict, dotted: str, value: Any):
    *parents, leaf = dotted.split(".")
    node = document
    for part in parents:
        child = node.get(part)
        if child is None:
            child = node[part] = {}
        if not isinstance(child, dict):
            raise ConfigurationError(f"{part!r} is not a section", key=dotted)
        node = child
    node[leaf] = value


def expand_grid(sweep: SweepConfig) -> list[tuple[str, dict[str, Any], RunConfig]]:
    """One validated RunConfig per grid point, axes iterated in sorted key order."""
    keys = sorted(sweep.grid)
    points = []
    for index, values in enumerate(itertools.product(*(sweep.grid[key] for key in keys))):
        assignment = dict(zip(keys, values))
        document = sweep.base.model_dump(mode="json")
        for key, value in assignment.items():
            _assign(document, key, value)
        label = f"{sweep.name}-{index:03d}"
        document["name"] = label
        try:
            points.append((label, assignment, RunConfig.model_validate(document)))
        except ValidationError as exc:
            first = exc.errors()[0]
            key = ".".join(str(part) for part in first["loc"])
            raise ConfigurationError(f"grid point {label} {assignment}: {first['msg']}", key=key) from exc
    return points


def _run_point(label: str, run_config: RunConfig, directory: Path) -> dict:
    """Run one grid point; a point that cannot be built or run only marks its own row."""
    try:
        record = run(build_scenario(run_config))
    except HelmrayError as error:
        if not isinstance(error, SimulationFault) or error.record is None:
            logger.warning("%s failed: %s", label, error)
            return {"label": label, "status": type(error).__name__}
        record = error.record
    record.config = run_config.model_dump(mode="json")
    record.config_hash = run_config.config_hash()
    write_record(record, directory / label)
    return summary(record)


def run_sweep(sweep: SweepConfig, directory: str | Path) -> list[dict]:
    """Run every grid point into ``directory/<label>`` and write an index in sweep.csv."""
    directory = Path(directory)
    points = expand_grid(sweep)
    logger.info("%s: %d grid point(s) on up to %d thread(s)", sweep.name, len(points), config.MAX_THREADS)
    with ThreadPoolExecutor(max_workers=min(config.MAX_THREADS, len(points))) as pool:
        results = list(pool.map(lambda point: _run_point(point[0], point[2], directory), points))

    keys = sorted(sweep.grid)
    rows = []
    for (label, assignment, run_config), result in zip(points, results):
        conservation = result.get("conservation") or {}
        fault = result.get("fault")
        rows.append(
            [label, run_config.config_hash()]
            + [fmt(assignment[key]) for key in keys]
            + [
                fault["kind"] if fault else result.get("status", "ok"),
                conservation.get("max_hamiltonian_drift", ""),
                conservation.get("max_momentum_drift", ""),
            ]
        )
    header = {"table": "sweep", "name": sweep.name, "config": sweep.model_dump(mode="json")}
    write_table(
        directory / "sweep.csv",
        header,
        ["label", "config_hash", *keys, "status", "max_hamiltonian_drift", "max_momentum_drift"],
        rows,
    )
    return results
