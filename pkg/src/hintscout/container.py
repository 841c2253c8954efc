"""Binary activation-dump container and its JSON manifest.

A dump is one manifest plus one blob file per candidate layer. The blob
format is deliberately minimal so any framework can produce it:

    magic   4 bytes, ASCII "HNT1"
    rank    u32 little-endian, must be 2 or 4
    dims    rank x u64 little-endian
    payload f32 little-endian, row-major, prod(dims) values

The manifest is a JSON document::

    {
      "model_name": "...",
      "dataset_name": "...",
      "sample_count": N,
      "layers": [{"index": 1, "name": "...", "file": "...", "channels": C}, ...],
      "metadata": {...}            # optional, free-form, preserved verbatim
    }

Layer indices are 1-based, strictly increasing, and contiguous. Every blob's
leading dimension must equal ``sample_count`` and its second dimension must
equal the declared channel count.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .errors import FormatError, LengthError, ValidationError

MAGIC = b"HNT1"
_ALLOWED_RANKS = (2, 4)


@dataclass
class TensorBlob:
    """Dense float32 tensor with explicit shape, rank 2 (N, C) or rank 4 (N, C, H, W)."""

    shape: tuple[int, ...]
    data: np.ndarray  # flat float32, row-major

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "TensorBlob":
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        return cls(tuple(int(d) for d in arr.shape), arr.reshape(-1))

    @property
    def array(self) -> np.ndarray:
        """The payload viewed at its declared shape."""
        return self.data.reshape(self.shape)

    def validate(self) -> None:
        if len(self.shape) not in _ALLOWED_RANKS:
            raise ValidationError(f"tensor rank must be 2 or 4, got {len(self.shape)}")
        if any(d <= 0 for d in self.shape):
            raise ValidationError(f"tensor dimensions must be positive, got {self.shape}")
        expected = int(np.prod(self.shape))
        if self.data.ndim != 1 or self.data.size != expected:
            raise ValidationError(
                f"payload holds {self.data.size} values, shape {self.shape} needs {expected}"
            )
        finite = np.isfinite(self.data)
        if not finite.all():
            idx = int(np.argmin(finite))
            raise ValidationError(f"non-finite value at flat index {idx}")


def write_blob(blob: TensorBlob, dest: BinaryIO) -> None:
    """Serialize a validated blob to a byte sink."""
    blob.validate()
    rank = len(blob.shape)
    dest.write(MAGIC)
    dest.write(struct.pack("<I", rank))
    dest.write(struct.pack(f"<{rank}Q", *blob.shape))
    dest.write(np.ascontiguousarray(blob.data, dtype="<f4").tobytes())


def _read_exact(src: BinaryIO, n: int, what: str) -> bytes:
    buf = src.read(n)
    if len(buf) != n:
        raise LengthError(f"truncated stream: needs {n} bytes for {what}, has {len(buf)}")
    return buf


def read_blob(src: BinaryIO) -> TensorBlob:
    """Parse one blob from a byte stream; exact inverse of :func:`write_blob`."""
    magic = src.read(len(MAGIC))
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    (rank,) = struct.unpack("<I", _read_exact(src, 4, "rank"))
    if rank not in _ALLOWED_RANKS:
        raise FormatError(f"tensor rank must be 2 or 4, got {rank}")
    dims = struct.unpack(f"<{rank}Q", _read_exact(src, 8 * rank, "dimensions"))
    if any(d == 0 for d in dims):
        raise FormatError(f"tensor dimensions must be positive, got {dims}")
    count = 1
    for d in dims:
        count *= d
    payload = src.read(4 * count)
    if len(payload) != 4 * count:
        raise LengthError(f"truncated payload: needs {4 * count} payload bytes, has {len(payload)}")
    data = np.frombuffer(payload, dtype="<f4").astype(np.float32)
    blob = TensorBlob(tuple(int(d) for d in dims), data)
    blob.validate()
    return blob


@dataclass(frozen=True)
class LayerEntry:
    """One candidate layer as listed in the manifest."""

    index: int  # 1-based position in forward order
    name: str
    file: str
    channels: int


@dataclass
class DumpManifest:
    model_name: str
    dataset_name: str
    sample_count: int
    layers: list[LayerEntry]
    metadata: dict = field(default_factory=dict)


def read_manifest(path: str | Path) -> DumpManifest:
    """Parse and structurally validate a dump manifest."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse manifest {path}: {exc}") from exc
    for key in ("model_name", "dataset_name", "sample_count", "layers"):
        if key not in doc:
            raise FormatError(f"manifest missing key '{key}'")
    if not isinstance(doc["sample_count"], int) or doc["sample_count"] <= 0:
        raise FormatError(f"sample_count must be a positive integer, got {doc['sample_count']!r}")
    layers = []
    for entry in doc["layers"]:
        for key in ("index", "name", "file", "channels"):
            if key not in entry:
                raise FormatError(f"manifest layer entry missing key '{key}': {entry!r}")
        if not isinstance(entry["channels"], int) or entry["channels"] <= 0:
            raise FormatError(f"layer '{entry['name']}': channels must be a positive integer")
        layers.append(
            LayerEntry(int(entry["index"]), str(entry["name"]), str(entry["file"]), entry["channels"])
        )
    indices = [e.index for e in layers]
    if indices != list(range(1, len(layers) + 1)):
        raise FormatError(f"layer indices must be contiguous from 1, got {indices}")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise FormatError("manifest metadata must be an object")
    return DumpManifest(
        model_name=str(doc["model_name"]),
        dataset_name=str(doc["dataset_name"]),
        sample_count=doc["sample_count"],
        layers=layers,
        metadata=metadata,
    )


def write_manifest(manifest: DumpManifest, path: str | Path) -> None:
    """Write a manifest as deterministic JSON (sorted keys, two-space indent)."""
    doc = {
        "model_name": manifest.model_name,
        "dataset_name": manifest.dataset_name,
        "sample_count": manifest.sample_count,
        "layers": [
            {"index": e.index, "name": e.name, "file": e.file, "channels": e.channels}
            for e in manifest.layers
        ],
    }
    if manifest.metadata:
        doc["metadata"] = manifest.metadata
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_dump(manifest_path: str | Path) -> list[tuple[LayerEntry, TensorBlob]]:
    """Load every layer blob referenced by a manifest, in layer-index order.

    Each blob is checked against the manifest: leading dimension equals
    ``sample_count``, channel dimension equals the declared channel count.
    Errors name the offending layer.
    """
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent
    out: list[tuple[LayerEntry, TensorBlob]] = []
    for entry in manifest.layers:
        blob_path = base / entry.file
        if not blob_path.is_file():
            raise FormatError(f"layer '{entry.name}': file '{entry.file}' not found")
        with open(blob_path, "rb") as fh:
            try:
                blob = read_blob(fh)
            except (FormatError, ValidationError) as exc:
                raise type(exc)(f"layer '{entry.name}': {exc}") from exc
        if blob.shape[0] != manifest.sample_count:
            raise ValidationError(
                f"layer '{entry.name}': sample-count mismatch, blob has N={blob.shape[0]} "
                f"but manifest says N={manifest.sample_count}"
            )
        if blob.shape[1] != entry.channels:
            raise ValidationError(
                f"layer '{entry.name}': channel mismatch, blob has C={blob.shape[1]} "
                f"but manifest says C={entry.channels}"
            )
        out.append((entry, blob))
    return out
