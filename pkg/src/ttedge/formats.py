"""Binary file formats for tensors (TTED-T) and core archives (TTED-A).

TTED-T: magic b"TTED", version u32 LE (1), dtype u8 (0 = f64, 1 = f32),
ndim u32 LE, dims as u64 LE array, raw row-major element data LE. No
padding anywhere.

TTED-A: magic b"TTEA", version u32 LE (1), dtype u8, N u32 LE, ranks as
u64 LE array of length N+1, mode dims as u64 LE array of length N, then N
concatenated raw core payloads, each row-major [r_{k-1}, n_k, r_k], LE.

Compression runs also drop a JSON sidecar next to the archive (suffix
".meta.json") recording the epsilon and the measured figures, since the
archive itself carries no metadata; verification reads it back.

All writes go through a temp file and an atomic rename.
"""

from __future__ import annotations

import json
import os
import struct
from math import prod
from pathlib import Path

import numpy as np

from .decomp import TTCores
from .errors import FormatError
from .tensor import DTYPE_CODES, Tensor

TENSOR_MAGIC = b"TTED"
ARCHIVE_MAGIC = b"TTEA"
FORMAT_VERSION = 1

_WIRE_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}


def atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def _dtype_code(dtype) -> int:
    for code, dt in DTYPE_CODES.items():
        if dt == dtype:
            return code
    raise FormatError(f"unsupported element dtype {dtype}")


class _Reader:
    def __init__(self, payload: bytes, label: str):
        self.buf = payload
        self.pos = 0
        self.label = label

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"{self.label}: truncated file")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64_array(self, count: int) -> list[int]:
        raw = self.take(8 * count)
        return list(struct.unpack(f"<{count}Q", raw))

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise FormatError(f"{self.label}: {len(self.buf) - self.pos} trailing bytes")


def _read_header(r: _Reader, magic: bytes) -> int:
    if r.take(4) != magic:
        raise FormatError(f"{r.label}: bad magic bytes")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise FormatError(f"{r.label}: unsupported version {version}")
    code = r.u8()
    if code not in _WIRE_DTYPES:
        raise FormatError(f"{r.label}: unknown dtype code {code}")
    return code


def write_tensor(path, t: Tensor) -> None:
    code = _dtype_code(t.data.dtype)
    parts = [
        TENSOR_MAGIC,
        struct.pack("<I", FORMAT_VERSION),
        struct.pack("B", code),
        struct.pack("<I", len(t.dims)),
        struct.pack(f"<{len(t.dims)}Q", *t.dims),
        np.ascontiguousarray(t.data, dtype=_WIRE_DTYPES[code]).tobytes(),
    ]
    atomic_write_bytes(path, b"".join(parts))


def read_tensor(path) -> Tensor:
    r = _Reader(Path(path).read_bytes(), str(path))
    code = _read_header(r, TENSOR_MAGIC)
    ndim = r.u32()
    if ndim < 1:
        raise FormatError(f"{r.label}: ndim must be >= 1")
    dims = r.u64_array(ndim)
    if any(d < 1 for d in dims):
        raise FormatError(f"{r.label}: zero extent in dims {dims}")
    wire = _WIRE_DTYPES[code]
    count = prod(dims)
    raw = r.take(count * wire.itemsize)
    r.done()
    data = np.frombuffer(raw, dtype=wire).reshape(dims)
    return Tensor(data)


def write_cores(path, cores: TTCores) -> None:
    dtypes = {c.data.dtype for c in cores.cores}
    if len(dtypes) != 1:
        raise FormatError(f"cores carry mixed dtypes {dtypes}")
    code = _dtype_code(dtypes.pop())
    wire = _WIRE_DTYPES[code]
    n = len(cores.cores)
    parts = [
        ARCHIVE_MAGIC,
        struct.pack("<I", FORMAT_VERSION),
        struct.pack("B", code),
        struct.pack("<I", n),
        struct.pack(f"<{n + 1}Q", *cores.ranks),
        struct.pack(f"<{n}Q", *cores.mode_dims),
    ]
    for c in cores.cores:
        parts.append(np.ascontiguousarray(c.data, dtype=wire).tobytes())
    atomic_write_bytes(path, b"".join(parts))


def read_cores(path) -> TTCores:
    r = _Reader(Path(path).read_bytes(), str(path))
    code = _read_header(r, ARCHIVE_MAGIC)
    n = r.u32()
    if n < 1:
        raise FormatError(f"{r.label}: archive must hold at least one core")
    ranks = r.u64_array(n + 1)
    dims = r.u64_array(n)
    if any(d < 1 for d in dims) or any(rk < 1 for rk in ranks):
        raise FormatError(f"{r.label}: zero extent in ranks or dims")
    wire = _WIRE_DTYPES[code]
    cores = []
    for k in range(n):
        shape = (ranks[k], dims[k], ranks[k + 1])
        count = prod(shape)
        raw = r.take(count * wire.itemsize)
        cores.append(Tensor(np.frombuffer(raw, dtype=wire).reshape(shape)))
    r.done()
    # chain validity (boundary ranks in particular) is checked at decode time
    return TTCores(cores=tuple(cores), ranks=tuple(ranks))


def metadata_path(archive_path) -> Path:
    p = Path(archive_path)
    return p.with_name(p.name + ".meta.json")


def write_run_metadata(archive_path, metadata: dict) -> None:
    atomic_write_bytes(
        metadata_path(archive_path),
        (json.dumps(metadata, indent=2, sort_keys=True) + "\n").encode(),
    )


def read_run_metadata(archive_path) -> dict:
    p = metadata_path(archive_path)
    try:
        return json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read run metadata {p}: {exc}") from exc
