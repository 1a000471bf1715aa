"""Model checkpoint file.

Layout (little-endian): magic b"PPGM", u32 version=1, u32 tag length, tag
utf-8, u32 latent_dim (0 when not applicable), u64 tensor count, then per
tensor: u32 name length, name utf-8, u32 ndim, u32 dims..., f32 payload.
Tensors are written in layer order, trainable parameters first, then buffers,
so identical models serialize to identical bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ppgssl.errors import InterchangeFormatError, UnsupportedVersionError
from ppgssl.nn.model import Model

MAGIC = b"PPGM"
VERSION = 1


def _entries(model: Model):
    for name, layer, pname in model.named_params():
        yield name, layer.params[pname]
    for name, layer, bname in model.named_buffers():
        yield name, layer.buffers[bname]


def save_model(model: Model, path) -> None:
    parts = [MAGIC, struct.pack("<I", VERSION)]
    tag = model.tag.encode()
    parts.append(struct.pack("<I", len(tag)))
    parts.append(tag)
    parts.append(struct.pack("<I", model.latent_dim or 0))
    entries = list(_entries(model))
    parts.append(struct.pack("<Q", len(entries)))
    for name, arr in entries:
        nb = name.encode()
        parts.append(struct.pack("<I", len(nb)))
        parts.append(nb)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_model(path) -> Model:
    """Rebuild the architecture from its tag and restore every tensor."""
    from ppgssl.nn.builders import build_from_tag

    raw = Path(path).read_bytes()
    off = 0

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(raw):
            raise InterchangeFormatError(f"{path}: truncated checkpoint")
        vals = struct.unpack_from(fmt, raw, off)
        off += size
        return vals

    (magic,) = take("<4s")
    if magic != MAGIC:
        raise InterchangeFormatError(f"{path}: bad magic {magic!r}")
    (version,) = take("<I")
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported checkpoint version {version}")
    (tag_len,) = take("<I")
    tag = raw[off : off + tag_len].decode()
    off += tag_len
    (latent_dim,) = take("<I")
    (n_entries,) = take("<Q")

    model = build_from_tag(tag, latent_dim or None)
    expected = dict(_entries(model))
    if len(expected) != n_entries:
        raise InterchangeFormatError(
            f"{path}: {n_entries} tensors stored, architecture has {len(expected)}"
        )
    for _ in range(n_entries):
        (name_len,) = take("<I")
        name = raw[off : off + name_len].decode()
        off += name_len
        (ndim,) = take("<I")
        shape = take(f"<{ndim}I")
        count = int(np.prod(shape)) if ndim else 1
        size = 4 * count
        if off + size > len(raw):
            raise InterchangeFormatError(f"{path}: truncated tensor payload for {name}")
        data = np.frombuffer(raw, dtype="<f4", count=count, offset=off).reshape(shape)
        off += size
        if name not in expected:
            raise InterchangeFormatError(f"{path}: unexpected tensor {name}")
        target = expected[name]
        if target.shape != data.shape:
            raise InterchangeFormatError(
                f"{path}: tensor {name} has shape {data.shape}, expected {target.shape}"
            )
        target[...] = data
    if off != len(raw):
        raise InterchangeFormatError(f"{path}: {len(raw) - off} trailing bytes")
    return model.infer_mode()
