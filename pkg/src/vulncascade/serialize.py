"""Model container file: a JSON header followed by raw float64 tensors.

Layout, all integers little-endian:

    magic "VCMD" | u32 header length | header JSON (utf-8)
    u64 payload length | payload | sha256(payload), 32 bytes

The header carries format_version, stage, the full architecture spec, the
vocabulary content hash and the label map, so a loaded model can refuse
mismatched inputs.  The payload is every persistent tensor in declared layer
order, each as u8 ndim, u32 extents, then float64 values.  Deserializing and
re-serializing is byte-exact, and a loaded model reproduces the saved
model's predictions exactly.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from .dataset import LabelMap
from .errors import ChecksumMismatchError, SpecCorruptError, VersionMismatchError
from .models import Model, ModelSpec, build_model

MODEL_MAGIC = b"VCMD"
FORMAT_VERSION = 1


@dataclass
class ModelHeader:
    format_version: int
    stage: int
    spec: ModelSpec
    vocab_hash: str
    label_classes: list[str] | None

    def label_map(self) -> LabelMap | None:
        return LabelMap(tuple(self.label_classes)) if self.label_classes else None


def _pack_tensors(model: Model) -> bytes:
    payload = bytearray()
    for _, arr in model.named_tensors():
        payload += struct.pack("<B", arr.ndim)
        payload += struct.pack(f"<{arr.ndim}I", *arr.shape)
        payload += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    return bytes(payload)


def save_model(
    model: Model,
    path: str,
    vocab_hash: str,
    label_map: LabelMap | None = None,
) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "stage": model.spec.stage,
        "spec": model.spec.to_dict(),
        "vocab_hash": vocab_hash,
        "label_classes": list(label_map.classes) if label_map is not None else None,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = _pack_tensors(model)
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(payload)
        fh.write(hashlib.sha256(payload).digest())


def _read_exact(blob: bytes, offset: int, count: int, what: str) -> tuple[bytes, int]:
    if offset + count > len(blob):
        raise ChecksumMismatchError(f"file truncated while reading {what}")
    return blob[offset:offset + count], offset + count


def load_model(path: str) -> tuple[Model, ModelHeader]:
    with open(path, "rb") as fh:
        blob = fh.read()

    chunk, off = _read_exact(blob, 0, 4, "magic")
    if chunk != MODEL_MAGIC:
        raise SpecCorruptError(f"not a model file: bad magic {chunk!r}")
    chunk, off = _read_exact(blob, off, 4, "header length")
    (header_len,) = struct.unpack("<I", chunk)
    chunk, off = _read_exact(blob, off, header_len, "header")
    try:
        header_raw = json.loads(chunk.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SpecCorruptError(f"unreadable model header: {exc}") from exc

    version = header_raw.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(version, FORMAT_VERSION)

    try:
        spec = ModelSpec.from_dict(header_raw["spec"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecCorruptError(f"model header spec is malformed: {exc}") from exc

    chunk, off = _read_exact(blob, off, 8, "payload length")
    (payload_len,) = struct.unpack("<Q", chunk)
    payload, off = _read_exact(blob, off, payload_len, "payload")
    digest, off = _read_exact(blob, off, 32, "checksum")
    if hashlib.sha256(payload).digest() != digest:
        raise ChecksumMismatchError("model payload does not match its checksum")

    model = build_model(spec, seed=0)
    pos = 0
    for name, arr in model.named_tensors():
        chunk, pos = _read_exact(payload, pos, 1, f"{name} rank")
        (ndim,) = struct.unpack("<B", chunk)
        chunk, pos = _read_exact(payload, pos, 4 * ndim, f"{name} extents")
        shape = struct.unpack(f"<{ndim}I", chunk)
        if shape != arr.shape:
            raise SpecCorruptError(
                f"tensor {name} has shape {shape}, spec implies {arr.shape}"
            )
        count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        chunk, pos = _read_exact(payload, pos, 8 * count, f"{name} values")
        arr[...] = np.frombuffer(chunk, dtype="<f8").reshape(shape)
    if pos != len(payload):
        raise SpecCorruptError(f"{len(payload) - pos} trailing payload bytes")

    header = ModelHeader(
        format_version=version,
        stage=header_raw.get("stage", spec.stage),
        spec=spec,
        vocab_hash=header_raw.get("vocab_hash", ""),
        label_classes=header_raw.get("label_classes"),
    )
    return model, header
