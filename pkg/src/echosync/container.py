"""Versioned binary container for named tensors.

Layout: 8-byte magic, uint32 format version, uint32 header length, a
canonical JSON header (sorted keys, no whitespace), then the raw
little-endian tensor payloads in header order. Serialisation is
canonical so that load followed by save reproduces the file byte for
byte; model checkpoints and sample sets both use this container.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import FormatError

MAGIC = b"ECHOSYNC"
VERSION = 1

_DTYPES = {"float32": "<f4", "float64": "<f8", "uint8": "|u1", "int64": "<i8"}


def save_container(path, meta: dict, tensors: list[tuple[str, np.ndarray]]) -> None:
    """Write `tensors` (ordered name/array pairs) plus a JSON-safe `meta` dict."""
    specs = []
    for name, arr in tensors:
        dtype = str(arr.dtype)
        if dtype not in _DTYPES:
            raise FormatError(f"unsupported tensor dtype {dtype!r} for {name!r}")
        specs.append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
    header = {"meta": meta, "tensors": specs}
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(blob)))
        f.write(blob)
        for (_, arr), spec in zip(tensors, specs):
            f.write(np.ascontiguousarray(arr, dtype=_DTYPES[spec["dtype"]]).tobytes())


def load_container(path) -> tuple[dict, list[tuple[str, np.ndarray]]]:
    """Read back (meta, ordered name/array pairs). Raises FormatError on damage."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < len(MAGIC) + 8 or data[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: not a container file")
    version, hlen = struct.unpack_from("<II", data, len(MAGIC))
    if version != VERSION:
        raise FormatError(f"{path}: container version {version}, expected {VERSION}")
    start = len(MAGIC) + 8
    if len(data) < start + hlen:
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(data[start : start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: corrupt header: {e}") from e
    offset = start + hlen
    tensors = []
    for spec in header["tensors"]:
        dt = np.dtype(_DTYPES[spec["dtype"]])
        count = int(np.prod(spec["shape"], dtype=np.int64)) if spec["shape"] else 1
        nbytes = count * dt.itemsize
        if len(data) < offset + nbytes:
            raise FormatError(f"{path}: truncated tensor {spec['name']!r}")
        arr = np.frombuffer(data, dtype=dt, count=count, offset=offset)
        tensors.append((spec["name"], arr.reshape(spec["shape"]).copy()))
        offset += nbytes
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes")
    return header["meta"], tensors
