# tests/conftest.py
import os
import tempfile
from pathlib import Path

# must be set before src.logger / src.config are imported
ROOT = Path(__file__).resolve().parents[1]
os.environ.setdefault("SUPERRES_LOG_DIR", tempfile.mkdtemp(prefix="superres-logs-"))
os.environ.setdefault("SUPERRES_CONFIG", str(ROOT / "config.yaml"))
os.environ["CI"] = "true"

import pytest  # noqa: E402

from src.optics.psf import PsfKind, Scenario  # noqa: E402


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "results"
    path.mkdir()
    return path


@pytest.fixture
def gaussian_aligned():
    """θ0 = θc = 0.2, ε = 0.25."""
    return Scenario.from_dimensionless(0.2, 0.2, 0.25, PsfKind.GAUSSIAN)


