"""Binary checkpoint container.

Layout (all little-endian)::

    b"LVSA" | u32 version | u32 x 9 header | u32 crc32 of the bytes so far
    | entities.re | entities.im | relations.re | relations.im
    | for each of mlp_i, mlp_d, mlp_n: u32 n_layers, u32 widths..., then W0 b0 W1 b1 ...
    | optional Adam moments (m then v) for every named parameter, same order
    | u32 json length | json metadata | u32 crc32 of everything before it

Header fields: d, |V|, 2R, float width, layers_i, layers_d, layers_n,
has_adam, Adam step.  A damaged header is a format error; damage
anywhere after it is an integrity error.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from . import nn
from .encoder import MLP_NAMES, ModelParams
from .errors import FormatError, IntegrityError

MAGIC = b"LVSA"
VERSION = 1
_HEADER = struct.Struct("<9I")


def _real_dtype(width: int):
    return np.dtype("<f8") if width == 64 else np.dtype("<f4")


def _param_order(p: ModelParams) -> list[str]:
    return list(p.named_params().keys())


def encode_checkpoint(p: ModelParams, adam: nn.AdamState | None = None) -> bytes:
    width = 64 if p.entities.real.dtype == np.float64 else 32
    rd = _real_dtype(width)
    layers = [getattr(p, n).num_layers for n in MLP_NAMES]
    out = bytearray(MAGIC)
    out += struct.pack("<I", VERSION)
    out += _HEADER.pack(
        p.d, p.num_entities, p.num_relation_ids, width, *layers, int(adam is not None), adam.step if adam else 0
    )
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    for table in (p.entities, p.relations):
        out += np.ascontiguousarray(table.real, dtype=rd).tobytes()
        out += np.ascontiguousarray(table.imag, dtype=rd).tobytes()
    for name in MLP_NAMES:
        m = getattr(p, name)
        out += struct.pack(f"<{len(m.dims) + 1}I", m.num_layers, *m.dims)
        for w, b in zip(m.weights, m.biases):
            out += np.ascontiguousarray(w, dtype=rd).tobytes()
            out += np.ascontiguousarray(b, dtype=rd).tobytes()
    if adam is not None:
        named = p.named_params()
        for moments in (adam.m, adam.v):
            for key in _param_order(p):
                real_shape = nn._real_view(named[key]).shape
                arr = moments.get(key, np.zeros(real_shape))
                out += np.ascontiguousarray(arr, dtype=rd).tobytes()
    meta = dict(p.meta)
    meta.setdefault("slope", p.mlp_i.slope)
    if adam is not None:
        meta["adam"] = {"lr": adam.lr, "beta1": adam.beta1, "beta2": adam.beta2, "eps": adam.eps}
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    out += struct.pack("<I", len(blob)) + blob
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes, end: int):
        self.data, self.pos, self.end = data, 0, end

    def take(self, n: int) -> bytes:
        if self.pos + n > self.end:
            raise IntegrityError("checkpoint is truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self, count: int = 1):
        vals = struct.unpack(f"<{count}I", self.take(4 * count))
        return vals[0] if count == 1 else vals

    def array(self, shape, dtype) -> np.ndarray:
        n = int(np.prod(shape)) * dtype.itemsize
        return np.frombuffer(self.take(n), dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))


def decode_checkpoint(data: bytes) -> tuple[ModelParams, nn.AdamState | None]:
    if len(data) < 8 or data[:4] != MAGIC:
        raise FormatError("not an LVSA checkpoint (bad magic)")
    (version,) = struct.unpack("<I", data[4:8])
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version} (expected {VERSION})")
    head_end = 8 + _HEADER.size
    if len(data) < head_end + 4:
        raise IntegrityError("checkpoint is truncated")
    (head_crc,) = struct.unpack("<I", data[head_end : head_end + 4])
    if zlib.crc32(data[:head_end]) != head_crc:
        raise FormatError("checkpoint header is corrupt")
    d, n_ent, n_rel, width, li, ld, ln, has_adam, step = _HEADER.unpack(data[8:head_end])
    if width not in (32, 64):
        raise FormatError(f"bad float width {width}")
    if len(data) < head_end + 8:
        raise IntegrityError("checkpoint is truncated")
    (crc,) = struct.unpack("<I", data[-4:])
    r = _Reader(data, len(data) - 4)
    r.pos = head_end + 4
    if zlib.crc32(data[:-4]) != crc:
        raise IntegrityError("checkpoint checksum mismatch")
    rd = _real_dtype(width)
    cd = np.complex128 if width == 64 else np.complex64

    def table(n):
        re = r.array((n, d), rd)
        im = r.array((n, d), rd)
        return (re + 1j * im).astype(cd)

    entities, relations = table(n_ent), table(n_rel)
    mlps = []
    for name, expected in zip(MLP_NAMES, (li, ld, ln)):
        n_layers = r.u32()
        if n_layers != expected:
            raise FormatError(f"{name}: header says {expected} layers, block says {n_layers}")
        dims = list(r.u32(n_layers + 1)) if n_layers else []
        ws, bs = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            ws.append(r.array((fan_out, fan_in), rd))
            bs.append(r.array((fan_out,), rd))
        mlps.append(nn.Mlp(ws, bs))
    p = ModelParams(entities, relations, *mlps)
    adam = None
    if has_adam:
        adam = nn.AdamState(step=step)
        named = p.named_params()
        for moments in (adam.m, adam.v):
            for key in _param_order(p):
                moments[key] = r.array(nn._real_view(named[key]).shape, rd)
    (n_meta,) = struct.unpack("<I", r.take(4))
    try:
        meta = json.loads(r.take(n_meta).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IntegrityError(f"bad metadata blob: {exc}") from None
    if r.pos != r.end:
        raise IntegrityError("trailing bytes after metadata")
    slope = float(meta.get("slope", nn.DEFAULT_SLOPE))
    for m in mlps:
        m.slope = slope
    if adam is not None and "adam" in meta:
        for k, v in meta.pop("adam").items():
            setattr(adam, k, v)
    p.meta = meta
    return p, adam


def save_checkpoint(p: ModelParams, path, adam: nn.AdamState | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_checkpoint(p, adam))


def load_checkpoint(path) -> tuple[ModelParams, nn.AdamState | None]:
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read())
