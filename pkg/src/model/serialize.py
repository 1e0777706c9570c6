"""Model files.

Layout, all integers little-endian:

    magic     4 bytes   b"DGNM"
    version   uint32
    hlen      uint32    length of the header in bytes
    header    hlen      UTF-8 JSON, sorted keys: {"config": ..., "tensors": [[name, shape], ...], "version": ...}
    data                float64 '<f8' tensors, row-major, in header order

The config inside the header carries the revealed-axiom table, so a loaded
model maps axiom names to init rows without any side file.
"""
import json
import struct
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from src.errors import ModelFormatError
from .network import Model, ModelConfig, ModelParams, tensor_layout

MAGIC = b"DGNM"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sII")


def dumps_model(model: Model) -> bytes:
    header = {
        "version": FORMAT_VERSION,
        "config": model.config.model_dump(mode="json"),
        "tensors": [[name, list(t.shape)] for name, t in model.params.items()],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    chunks = [_PREFIX.pack(MAGIC, FORMAT_VERSION, len(head)), head]
    chunks += [np.ascontiguousarray(t, dtype="<f8").tobytes() for _, t in model.params.items()]
    return b"".join(chunks)


def loads_model(data: bytes) -> Model:
    """Parse a model file image.

    Raises:
        ModelFormatError: bad magic, unsupported version, truncated or malformed content
    """
    if len(data) < _PREFIX.size:
        raise ModelFormatError("model file truncated before the header")
    magic, version, hlen = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError(f"not a model file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"model format version {version} is not supported (expected {FORMAT_VERSION})")
    offset = _PREFIX.size
    if len(data) < offset + hlen:
        raise ModelFormatError("model file truncated inside the header")
    try:
        header = json.loads(data[offset:offset + hlen].decode("utf-8"))
        config = ModelConfig.model_validate(header["config"])
        layout = [(name, tuple(shape)) for name, shape in header["tensors"]]
    except (ValueError, KeyError, TypeError, ValidationError) as e:
        raise ModelFormatError(f"malformed model header: {e}")
    if layout != list(tensor_layout(config)):
        raise ModelFormatError("tensor layout does not match the model configuration")
    offset += hlen

    tensors: dict[str, np.ndarray] = {}
    for name, shape in layout:
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(data):
            raise ModelFormatError(f"model file truncated in tensor {name!r}")
        tensors[name] = np.frombuffer(data[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
        offset = end
    if offset != len(data):
        raise ModelFormatError(f"{len(data) - offset} trailing bytes after the last tensor")
    return Model(config, ModelParams(tensors))


def save_model(model: Model, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_model(model))
    return path


def load_model(path: str | Path) -> Model:
    return loads_model(Path(path).read_bytes())
