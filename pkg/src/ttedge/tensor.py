"""Dense tensors, matrices, and the reference products used as oracles.

Everything is stored row-major (C order, last index fastest). 64-bit floats
are the default element type; 32-bit mode rides on the array dtype and is
preserved by every operation. The reference product accumulates strictly in
increasing inner-index order so that blockwise execution elsewhere can be
checked for bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import (
    ContractDimMismatch,
    DimMismatch,
    ElementCountMismatch,
    ShapeError,
)

_F64 = np.dtype(np.float64)
_F32 = np.dtype(np.float32)

# dtype byte in the binary formats: 0 = f64, 1 = f32
DTYPE_CODES = {0: _F64, 1: _F32}


def _frozen_array(values, ndim_min: int = 1) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype not in (_F64, _F32):
        arr = arr.astype(np.float64)
    arr = np.ascontiguousarray(arr)
    if arr.ndim < ndim_min:
        arr = arr.reshape((1,) * (ndim_min - arr.ndim) + arr.shape)
    if arr.flags.writeable:
        arr = arr.copy()
        arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Tensor:
    """N-dimensional dense array, immutable after construction."""

    data: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.data)
        if any(n < 1 for n in arr.shape):
            raise ShapeError(f"all extents must be >= 1, got {arr.shape}")
        object.__setattr__(self, "data", arr)

    @classmethod
    def of(cls, values, dtype=np.float64) -> "Tensor":
        return cls(np.asarray(values, dtype=dtype))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def numel(self) -> int:
        return int(self.data.size)

    @property
    def dtype_code(self) -> int:
        """0 for 64-bit elements, 1 for 32-bit."""
        return 0 if self.data.dtype == _F64 else 1

    def ravel(self) -> np.ndarray:
        return self.data.reshape(-1)


@dataclass(frozen=True)
class Matrix:
    """2-D row-major matrix, the view role taken by factorization kernels."""

    data: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.data)
        if arr.ndim != 2:
            raise ShapeError(f"matrix needs exactly 2 dims, got {arr.ndim}")
        if any(n < 1 for n in arr.shape):
            raise ShapeError(f"all extents must be >= 1, got {arr.shape}")
        object.__setattr__(self, "data", arr)

    @classmethod
    def of(cls, values, dtype=np.float64) -> "Matrix":
        return cls(np.asarray(values, dtype=dtype))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def a(self) -> np.ndarray:
        return self.data

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self.data.astype(dtype)
        return self.data


def reshape(t: Tensor, new_dims) -> Tensor:
    """Reinterpret dims without touching element order."""
    dims = tuple(int(n) for n in new_dims)
    if any(n < 1 for n in dims):
        raise ShapeError(f"all extents must be >= 1, got {dims}")
    if prod(dims) != t.numel:
        raise ElementCountMismatch(
            f"cannot reshape {t.numel} elements into {dims}"
        )
    return Tensor(t.data.reshape(dims))


def frobenius_norm(t: Tensor) -> float:
    flat = t.ravel()
    return float(np.sqrt(np.dot(flat, flat)))


def accumulate_product(out: np.ndarray, a: np.ndarray, b: np.ndarray) -> None:
    """In-place out += a @ b, accumulating each element in increasing k.

    This fixes the rounding of every output element to the plain
    triple-loop order, which makes the blockwise executor bit-comparable.
    """
    for k in range(a.shape[1]):
        out += np.multiply.outer(a[:, k], b[k, :])


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Reference product on raw arrays; see accumulate_product."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimMismatch(f"cannot multiply {a.shape} by {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.result_type(a, b))
    accumulate_product(out, a, b)
    return out


def matmul_ref(a: Matrix, b: Matrix) -> Matrix:
    """Deterministic reference matrix product, the oracle for every GEMM."""
    if a.cols != b.rows:
        raise DimMismatch(f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    return Matrix(matmul(a.a, b.a))


def tensor_contract(x: Tensor, y: Tensor) -> Tensor:
    """Contract the last extent of x against the first extent of y.

    Both operands collapse to matrices, multiply via the reference product,
    and the result folds back out to [x dims minus last, y dims minus first].
    """
    if x.dims[-1] != y.dims[0]:
        raise ContractDimMismatch(
            f"inner extents differ: {x.dims[-1]} vs {y.dims[0]}"
        )
    left = x.data.reshape(-1, x.dims[-1])
    right = y.data.reshape(y.dims[0], -1)
    flat = matmul(left, right)
    out_dims = x.dims[:-1] + y.dims[1:]
    if not out_dims:
        out_dims = (1,)
    return Tensor(flat.reshape(out_dims))
