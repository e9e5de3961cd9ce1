"""On-disk form of a run: CSV tables with a one-line JSON provenance header, plus summary.json."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from helmray import errors
from helmray.core import build_scenario
from helmray.dynamics import Snapshot, StepReport, TrajectoryRecord
from helmray.errors import RecordError, SimulationFault
from helmray.schemas import RunConfig
from helmray.stencils import segment_lengths, voronoi_widths

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("step", "time", "ray", "x", "z", "p_x", "p_z", "R", "Q")
REPORT_COLUMNS = (
    "step",
    "time",
    "max_hamiltonian_drift",
    "max_perpendicularity",
    "clamp_count",
    "crossing",
    "max_flux_drift",
    "max_momentum_drift",
    "hamiltonians",
)


def fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def provenance(config: dict, config_hash: str, table: str) -> dict:
    return {"table": table, "config_hash": config_hash, "config": config}


def write_table(path: Path, header: dict, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        handle.write("# " + json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(value) for value in row])
    return path


def read_table(path: Path) -> tuple[dict, list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise RecordError(f"missing record file {path}")
    with open(path, newline="") as handle:
        first = handle.readline()
        if not first.startswith("# "):
            raise RecordError(f"{path.name} has no provenance header")
        try:
            header = json.loads(first[2:])
        except json.JSONDecodeError as exc:
            raise RecordError(f"{path.name} has a corrupt provenance header") from exc
        reader = csv.reader(handle)
        columns = next(reader, None)
        if columns is None:
            raise RecordError(f"{path.name} has no column row")
        return header, columns, list(reader)


def _require_provenance(record: TrajectoryRecord) -> tuple[dict, str]:
    if record.config is None or record.config_hash is None:
        raise RecordError("the record carries no config; run it from a RunConfig to persist it")
    return record.config, record.config_hash


def _trajectory_rows(record: TrajectoryRecord):
    for snapshot in record.snapshots:
        for ray in range(snapshot.ray_count):
            yield (
                snapshot.step,
                snapshot.time,
                ray,
                snapshot.positions[ray, 0],
                snapshot.positions[ray, 1],
                snapshot.momenta[ray, 0],
                snapshot.momenta[ray, 1],
                snapshot.amplitudes[ray],
                snapshot.wave_potential[ray],
            )


def _report_rows(record: TrajectoryRecord):
    for report in record.reports:
        yield (
            report.step,
            report.time,
            report.max_hamiltonian_drift,
            report.max_perpendicularity,
            report.clamp_count,
            report.crossing,
            report.max_flux_drift,
            report.max_momentum_drift,
            " ".join(fmt(value) for value in report.hamiltonians),
        )


def summary(record: TrajectoryRecord) -> dict:
    config, config_hash = _require_provenance(record)
    steps_completed = record.reports[-1].step if record.reports else 0
    return {
        "name": record.scenario.name,
        "system": record.scenario.system.value,
        "config_hash": config_hash,
        "config": config,
        "n_steps": record.scenario.integration.n_steps,
        "steps_completed": steps_completed,
        "snapshot_count": len(record.snapshots),
        "ray_count": record.ray_count if record.snapshots else 0,
        "conservation": record.conservation(),
        "partial": record.fault is not None,
        "fault": record.fault.to_dict() if record.fault is not None else None,
        "runtime_seconds": record.runtime_seconds,
    }


def write_record(record: TrajectoryRecord, directory: str | Path) -> list[Path]:
    """trajectories.csv, reports.csv and summary.json under ``directory``."""
    config, config_hash = _require_provenance(record)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = [
        write_table(
            directory / "trajectories.csv",
            provenance(config, config_hash, "trajectories"),
            TRAJECTORY_COLUMNS,
            _trajectory_rows(record),
        ),
        write_table(
            directory / "reports.csv",
            provenance(config, config_hash, "reports"),
            REPORT_COLUMNS,
            _report_rows(record),
        ),
    ]
    summary_path = directory / "summary.json"
    summary_path.write_text(json.dumps(summary(record), indent=2, sort_keys=True) + "\n")
    paths.append(summary_path)
    logger.info("wrote %s", ", ".join(path.name for path in paths))
    return paths


def _check_hash(header: dict, expected: str, name: str):
    if header.get("config_hash") != expected:
        raise RecordError(
            f"{name} was written for config {header.get('config_hash')!r}, expected {expected!r}"
        )


def _snapshots(rows: list[list[str]], ray_count: int, stride: int, steps_completed: int) -> list[Snapshot]:
    snapshots = []
    grouped: dict[int, list[list[str]]] = {}
    order: list[int] = []
    for row in rows:
        step = int(row[0])
        if step not in grouped:
            grouped[step] = []
            order.append(step)
        grouped[step].append(row)

    for index, step in enumerate(order):
        block = grouped[step]
        if len(block) != ray_count:
            raise RecordError(f"truncated record: snapshot at step {step} holds {len(block)} of {ray_count} rays")
        expected = index * stride
        is_last = index == len(order) - 1
        if step != expected and not (is_last and expected - stride < step < expected):
            boundary = order[index - 1] if index else 0
            raise RecordError(f"truncated record: snapshot missing after step {boundary}")
        values = np.array([[float(cell) for cell in row[3:]] for row in block])
        snapshots.append(
            Snapshot(
                step=step,
                time=float(block[0][1]),
                positions=values[:, 0:2].copy(),
                momenta=values[:, 2:4].copy(),
                amplitudes=values[:, 4].copy(),
                wave_potential=values[:, 5].copy(),
            )
        )
    if not snapshots:
        raise RecordError("the record holds no snapshots")
    if snapshots[-1].step != steps_completed:
        raise RecordError(
            f"truncated record: snapshots end at step {snapshots[-1].step}, "
            f"the run completed step {steps_completed}"
        )
    return snapshots


def _reports(rows: list[list[str]]) -> list[StepReport]:
    return [
        StepReport(
            step=int(row[0]),
            time=float(row[1]),
            max_hamiltonian_drift=float(row[2]),
            max_perpendicularity=float(row[3]),
            clamp_count=int(row[4]),
            crossing=row[5] == "1",
            max_flux_drift=float(row[6]),
            max_momentum_drift=float(row[7]),
            hamiltonians=np.array([float(value) for value in row[8].split()]),
        )
        for row in rows
    ]


def _fault(data: dict | None) -> SimulationFault | None:
    if not data:
        return None
    kind = getattr(errors, data.get("kind", ""), SimulationFault)
    if not (isinstance(kind, type) and issubclass(kind, SimulationFault)):
        kind = SimulationFault
    return kind(data.get("message", ""), step=data.get("step"), rays=data.get("rays", ()))


def load_record(directory: str | Path, expected_hash: str | None = None) -> TrajectoryRecord:
    """Read a run directory back, rejecting truncated files and mismatched config hashes."""
    directory = Path(directory)
    summary_path = directory / "summary.json"
    if not summary_path.exists():
        raise RecordError(f"{directory} is not a run directory (no summary.json)")
    try:
        meta = json.loads(summary_path.read_text())
    except json.JSONDecodeError as exc:
        raise RecordError(f"corrupt summary.json in {directory}") from exc
    config_hash = meta.get("config_hash")
    if expected_hash is not None and config_hash != expected_hash:
        raise RecordError(f"record config {config_hash!r} does not match {expected_hash!r}")

    run_config = RunConfig.model_validate(meta["config"])
    if run_config.config_hash() != config_hash:
        raise RecordError("summary.json config does not match its own hash")

    header, _, trajectory_rows = read_table(directory / "trajectories.csv")
    _check_hash(header, config_hash, "trajectories.csv")
    header, _, report_rows = read_table(directory / "reports.csv")
    _check_hash(header, config_hash, "reports.csv")

    scenario = build_scenario(run_config)
    snapshots = _snapshots(
        trajectory_rows,
        meta.get("ray_count") or scenario.beam_profile.ray_count,
        scenario.integration.snapshot_stride,
        meta.get("steps_completed", 0),
    )
    launch = snapshots[0]
    if launch.ray_count > 1:
        launch_spacings = voronoi_widths(segment_lengths(launch.positions))
    else:
        launch_spacings = np.ones(1)
    record = TrajectoryRecord(
        scenario=scenario,
        launch_spacings=launch_spacings,
        launch_momentum_norms=np.hypot(launch.momenta[:, 0], launch.momenta[:, 1]),
        snapshots=snapshots,
        reports=_reports(report_rows),
        config_hash=config_hash,
        config=meta["config"],
        fault=_fault(meta.get("fault")),
        runtime_seconds=float(meta.get("runtime_seconds", 0.0)),
    )
    return record
