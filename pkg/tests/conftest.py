import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from lib.quantum import QuantumState, from_amplitudes  # noqa: E402

DATA_DIR = os.path.join(ROOT, "data", "input")


def random_state(rng: np.random.Generator, n_wires: int) -> QuantumState:
    """Haar-ish random pure state from complex Gaussian amplitudes."""
    dim = 1 << n_wires
    return from_amplitudes(rng.normal(size=dim) + 1j * rng.normal(size=dim), normalize=True)


def data_path(*parts: str) -> str:
    return os.path.join(DATA_DIR, *parts)


@pytest.fixture
def fx_rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
