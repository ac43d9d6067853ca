"""Reproducible synthetic inputs for tests, demos, and the CLI.

Two generators: plain i.i.d. uniform tensors, and tensors decoded from
random-normal cores with a prescribed rank chain (the construction used by
rank-recovery checks). Both are driven by an explicit 64-bit seed.
"""

from __future__ import annotations

import numpy as np

from .decomp import TTCores, tt_decode
from .errors import RankChainBroken
from .tensor import Tensor


def uniform_tensor(dims, seed: int = 0, dtype=np.float64) -> Tensor:
    """i.i.d. uniform on (-1, 1)."""
    rng = np.random.default_rng(seed)
    return Tensor(rng.uniform(-1.0, 1.0, size=tuple(dims)).astype(dtype))


def random_cores(dims, ranks, seed: int = 0, dtype=np.float64) -> TTCores:
    dims = tuple(int(n) for n in dims)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(dims) + 1:
        raise RankChainBroken(f"need {len(dims) + 1} ranks for {len(dims)} dims")
    rng = np.random.default_rng(seed)
    cores = [
        Tensor(rng.standard_normal((ranks[k], dims[k], ranks[k + 1])).astype(dtype))
        for k in range(len(dims))
    ]
    tt = TTCores.from_cores(cores)
    tt.validate()
    return tt


def tensor_from_random_cores(dims, ranks, seed: int = 0, dtype=np.float64) -> tuple[Tensor, TTCores]:
    cores = random_cores(dims, ranks, seed, dtype)
    return tt_decode(cores), cores


def parse_synthetic_spec(spec: str) -> tuple[tuple[int, ...], tuple[int, ...] | None]:
    """Parse "3x4x5" or "3x4x5,1x2x2x1" into (dims, ranks or None)."""
    parts = spec.split(",")
    if len(parts) > 2 or not parts[0]:
        raise ValueError(f"bad synthetic spec {spec!r}")
    dims = tuple(int(n) for n in parts[0].split("x"))
    ranks = None
    if len(parts) == 2:
        ranks = tuple(int(r) for r in parts[1].split("x"))
    if any(n < 1 for n in dims) or (ranks is not None and any(r < 1 for r in ranks)):
        raise ValueError(f"bad synthetic spec {spec!r}")
    return dims, ranks


def synthetic_tensor(spec: str, seed: int = 0, dtype=np.float64) -> Tensor:
    dims, ranks = parse_synthetic_spec(spec)
    if ranks is None:
        return uniform_tensor(dims, seed, dtype)
    return tensor_from_random_cores(dims, ranks, seed, dtype)[0]
