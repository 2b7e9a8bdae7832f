"""SQCK checkpoint codec.

Layout (all integers little-endian)::

    "SQCK" | u32 version | u32 manifest length | manifest (UTF-8) | payloads

The manifest has one ``name shape dtype offset`` line per tensor. ``shape`` is
a comma-separated extent list (``-`` for a 0-d tensor), ``dtype`` is one of
``f32``, ``f64`` or ``i64`` and ``offset`` is the byte position of the raw
row-major payload relative to the end of the manifest. Tensors are stored in
name order so equal contents always produce equal bytes.
"""

from __future__ import annotations

import logging
import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from .constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from .exceptions import SplurgeSqcpcDataError, SplurgeSqcpcTypeError
from .fileio import read_bytes, write_bytes

logger = logging.getLogger(__name__)

_DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8"), "i64": np.dtype("<i8")}
_HEADER = struct.Struct("<4sII")


def _dtype_tag(array: np.ndarray, name: str) -> str:
    for tag, dtype in _DTYPES.items():
        if (array.dtype.kind, array.dtype.itemsize) == (dtype.kind, dtype.itemsize):
            return tag
    raise SplurgeSqcpcTypeError(
        message=f"tensor {name} has unsupported dtype {array.dtype}",
        error_code="unsupported-dtype",
        details={"tensor": name},
    )


def encode_checkpoint(tensors: Mapping[str, np.ndarray]) -> bytes:
    lines: list[str] = []
    payloads: list[bytes] = []
    offset = 0
    for name in sorted(tensors):
        if not name or any(ch.isspace() for ch in name):
            raise SplurgeSqcpcTypeError(message=f"invalid tensor name {name!r}", error_code="invalid-name")
        array = np.asarray(tensors[name])
        tag = _dtype_tag(array, name)
        raw = np.ascontiguousarray(array, dtype=_DTYPES[tag]).tobytes()
        shape = ",".join(str(extent) for extent in array.shape) or "-"
        lines.append(f"{name} {shape} {tag} {offset}")
        payloads.append(raw)
        offset += len(raw)
    manifest = "\n".join(lines).encode("utf-8")
    return _HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(manifest)) + manifest + b"".join(payloads)


def _corrupt(source: str, detail: str) -> SplurgeSqcpcDataError:
    return SplurgeSqcpcDataError(
        message=f"corrupt checkpoint {source}: {detail}",
        error_code="corrupt-checkpoint",
        details={"path": source},
    )


def decode_checkpoint(blob: bytes, source: str = "<memory>") -> dict[str, np.ndarray]:
    """Parse SQCK bytes into a name -> array mapping.

    Raises:
        SplurgeSqcpcDataError: On bad magic, unknown version or any truncation.
    """
    if len(blob) < _HEADER.size:
        raise _corrupt(source, f"expected at least {_HEADER.size} header bytes, got {len(blob)}")
    magic, version, manifest_len = _HEADER.unpack_from(blob)
    if magic != CHECKPOINT_MAGIC:
        raise _corrupt(source, f"bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise _corrupt(source, f"unsupported format version {version}")
    payload_start = _HEADER.size + manifest_len
    if len(blob) < payload_start:
        raise _corrupt(source, f"manifest needs {manifest_len} bytes, only {len(blob) - _HEADER.size} present")
    try:
        manifest = blob[_HEADER.size : payload_start].decode("utf-8")
    except UnicodeDecodeError as e:
        raise _corrupt(source, "manifest is not UTF-8") from e

    tensors: dict[str, np.ndarray] = {}
    for line in manifest.splitlines():
        fields = line.split()
        if len(fields) != 4 or fields[2] not in _DTYPES:
            raise _corrupt(source, f"bad manifest line {line!r}")
        name, shape_text, tag, offset_text = fields
        try:
            shape = () if shape_text == "-" else tuple(int(extent) for extent in shape_text.split(","))
            offset = int(offset_text)
        except ValueError as e:
            raise _corrupt(source, f"bad manifest line {line!r}") from e
        dtype = _DTYPES[tag]
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        start = payload_start + offset
        if start + nbytes > len(blob):
            raise _corrupt(source, f"tensor {name} needs {nbytes} bytes at offset {offset}, file ends early")
        array = np.frombuffer(blob, dtype=dtype, count=nbytes // dtype.itemsize, offset=start).reshape(shape)
        tensors[name] = array.astype(dtype.newbyteorder("="))
    return tensors


def write_checkpoint(path: str | Path, tensors: Mapping[str, np.ndarray]) -> Path:
    target = write_bytes(path, encode_checkpoint(tensors))
    logger.info(f"Wrote checkpoint {target} ({len(tensors)} tensors)")
    return target


def read_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    tensors = decode_checkpoint(read_bytes(path), str(path))
    logger.debug(f"Read checkpoint {path} ({len(tensors)} tensors)")
    return tensors
