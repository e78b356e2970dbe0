import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    derandomize=True,
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def matrix_file(tmp_path):
    """Write a matrix in the text format and return its path."""

    def write(A, name="m.txt"):
        from matsqrt import io

        path = tmp_path / name
        io.write_matrix(path, np.asarray(A, dtype=float))
        return str(path)

    return write
