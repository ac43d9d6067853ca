import numpy as np
import pytest

from ttedge import EventTrace, GemmExecutor, Matrix


@pytest.fixture
def ref_gemm():
    return GemmExecutor.reference()


@pytest.fixture
def trace():
    return EventTrace()


def rand_matrix(rng, m, n, scale=1.0) -> Matrix:
    return Matrix(scale * rng.standard_normal((m, n)))


def rel_fro(got: np.ndarray, want: np.ndarray) -> float:
    denom = np.linalg.norm(want)
    if denom == 0:
        return float(np.linalg.norm(got - want))
    return float(np.linalg.norm(got - want) / denom)


def orth_defect(q: np.ndarray) -> float:
    k = min(q.shape)
    if q.shape[0] >= q.shape[1]:
        return float(np.abs(q.T @ q - np.eye(k)).max())
    return float(np.abs(q @ q.T - np.eye(k)).max())
