import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def write_lines(tmp_path):
    """Write values one per line and return the path."""

    def _write(name, lines):
        path = tmp_path / name
        path.write_text("\n".join(str(line) for line in lines) + "\n")
        return path

    return _write
