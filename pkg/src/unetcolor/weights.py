"""Weight serialization and pretrained-encoder import.

File format (all integers little-endian, tensors row-major float32):

    magic   4 bytes  b"UNFW"
    version u32      currently 1
    count   u32      number of tensors
    entry*  u32 name length, UTF-8 name, u32 dtype code (0 = float32),
            u32 rank, u32 dims...
    payload concatenated tensor data in entry order

Encoder import expects torchvision ResNet34 tensor names (``conv1.weight``,
``bn1.*``, ``layer1.0.conv1.weight``, ..., ``layer4.2.bn2.running_var``,
``downsample.0/1`` for the projection shortcuts); they map onto this model's
``encoder.``-prefixed tensors one-to-one.
"""

from __future__ import annotations

import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"UNFW"
VERSION = 1
_DTYPE_F32 = 0


class WeightFormatError(ValueError):
    """Malformed weight file: bad magic, truncation, or manifest mismatch."""


def save_store(tensors: "OrderedDict[str, np.ndarray]", dest) -> None:
    """Write tensors (cast to float32) in manifest order."""
    dest = Path(dest)
    with open(dest, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(tensors)))
        payload = []
        for name, arr in tensors.items():
            raw = name.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<II", _DTYPE_F32, arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            payload.append(np.ascontiguousarray(arr, dtype="<f4"))
        for arr in payload:
            f.write(arr.tobytes())


def load_store(src) -> "OrderedDict[str, np.ndarray]":
    """Read a weight file back into name -> float32 array."""
    src = Path(src)
    data = src.read_bytes()
    if data[:4] != MAGIC:
        raise WeightFormatError(f"{src}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    off = 4
    version, count = struct.unpack_from("<II", data, off)
    off += 8
    if version != VERSION:
        raise WeightFormatError(f"{src}: unsupported format version {version}")
    manifest = []
    for _ in range(count):
        (nlen,) = struct.unpack_from("<I", data, off)
        off += 4
        name = data[off : off + nlen].decode("utf-8")
        off += nlen
        dtype_code, rank = struct.unpack_from("<II", data, off)
        off += 8
        if dtype_code != _DTYPE_F32:
            raise WeightFormatError(f"{src}: tensor {name}: unknown dtype code {dtype_code}")
        shape = struct.unpack_from(f"<{rank}I", data, off)
        off += 4 * rank
        manifest.append((name, shape))
    tensors = OrderedDict()
    for name, shape in manifest:
        n = int(np.prod(shape)) if shape else 1
        end = off + 4 * n
        if end > len(data):
            raise WeightFormatError(f"{src}: truncated payload at tensor {name}")
        tensors[name] = np.frombuffer(data[off:end], dtype="<f4").reshape(shape).copy()
        off = end
    if off != len(data):
        raise WeightFormatError(f"{src}: {len(data) - off} trailing bytes after payload")
    return tensors


def save_weights(graph, dest) -> None:
    """Serialize all parameters and batch-norm running statistics."""
    save_store(graph.state_dict(), dest)


def load_weights(graph, src) -> None:
    """Load a saved state into a built graph; shapes must match exactly."""
    tensors = load_store(src)
    own = graph.state_dict()
    for name, arr in own.items():
        if name not in tensors:
            raise WeightFormatError(f"{src}: missing tensor {name}")
        if tuple(tensors[name].shape) != tuple(arr.shape):
            raise WeightFormatError(
                f"{src}: tensor {name}: shape {tensors[name].shape} does not match {tuple(arr.shape)}"
            )
    graph.load_state_dict(tensors)


@dataclass
class EncoderImportReport:
    imported: list = field(default_factory=list)
    skipped: list = field(default_factory=list)   # expected but absent from the source
    ignored: list = field(default_factory=list)   # present in source, not encoder tensors

    def __str__(self) -> str:
        return (f"imported {len(self.imported)} tensors, "
                f"skipped {len(self.skipped)}, ignored {len(self.ignored)}")


def encoder_tensor_names(graph) -> list:
    """ResNet34-style names (without the ``encoder.`` prefix) this graph can import."""
    prefix = "encoder."
    return [k[len(prefix):] for k in graph.state_dict() if k.startswith(prefix)]


def import_encoder_weights(graph, src_tensors: dict) -> EncoderImportReport:
    """Copy matching encoder tensors from a ResNet34-named store into the graph.

    Absent tensors are skipped (partial import is fine); a present tensor with
    a conflicting shape is an error naming it.
    """
    report = EncoderImportReport()
    own = graph.state_dict()
    expected = encoder_tensor_names(graph)
    expected_set = set(expected)
    for name in expected:
        if name not in src_tensors:
            report.skipped.append(name)
            continue
        src = src_tensors[name]
        target = own["encoder." + name]
        if tuple(src.shape) != tuple(target.shape):
            raise WeightFormatError(
                f"encoder import: tensor {name}: shape {tuple(src.shape)} "
                f"conflicts with {tuple(target.shape)}"
            )
        target[...] = src.astype(target.dtype, copy=False)
        report.imported.append(name)
    report.ignored = [n for n in src_tensors if n not in expected_set]
    return report
