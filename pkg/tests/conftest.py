import json
import sys
from pathlib import Path

import pytest


ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


def gaussian_document(**overrides) -> dict:
    """A small, fast QUANTUM Gaussian run: 41 rays with launch rays exactly at +-w0."""
    document = {
        "name": "small-gaussian",
        "system": "quantum",
        "beam": {"kind": "gaussian", "w0": 1.0, "wavelength": 2e-4, "span": 4.0, "ray_count": 41},
        "integration": {"steps_per_rayleigh": 100, "rayleigh_lengths": 0.1, "snapshot_stride": 5},
    }
    document.update(overrides)
    return document


@pytest.fixture()
def write_config(tmp_path):
    def write(document: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document, indent=2))
        return path

    return write
