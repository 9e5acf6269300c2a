"""Byte-exact wire encoding of client payloads.

The protocol is simulated, but every payload has a concrete little-endian
serialization so that transmitted-bit accounting is exact:

* header: client id (u32), round (u32), codec tag (u8)
* identity (tag 0): q float64 values
* quantization (tag 1): per block, maxabs float64 followed by count b-bit
  codes packed LSB-first and padded to a byte boundary
* rand-k (tag 2): k (u32), then k pairs of (index u32, value float64);
  values are stored post-scaling, i.e. exactly the entries the server adds.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

HEADER_BITS = 72  # u32 + u32 + u8

_TAGS = {"identity": 0, "quantization": 1, "rand-k": 2}


@dataclass
class IdentityPayload:
    values: np.ndarray

    @property
    def bits(self) -> int:
        return 64 * self.values.size


@dataclass
class QuantBlock:
    maxabs: float
    codes: np.ndarray  # uint32 codes, one per block entry
    code_bits: int

    @property
    def bits(self) -> int:
        return 64 + 8 * _padded_code_bytes(self.codes.size, self.code_bits)


@dataclass
class QuantPayload:
    blocks: list

    @property
    def bits(self) -> int:
        return sum(b.bits for b in self.blocks)


@dataclass
class RandKPayload:
    indices: np.ndarray  # uint32, ascending
    values: np.ndarray   # float64, post-scaling

    @property
    def bits(self) -> int:
        return 32 + 96 * self.indices.size


def _padded_code_bytes(count: int, code_bits: int) -> int:
    return (count * code_bits + 7) // 8


def _pack_codes(codes: np.ndarray, code_bits: int) -> bytes:
    bits = ((codes[:, None].astype(np.uint32) >> np.arange(code_bits, dtype=np.uint32)) & 1)
    return np.packbits(bits.astype(np.uint8).ravel(), bitorder="little").tobytes()

def _unpack_codes(raw: bytes, count: int, code_bits: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    bits = bits[: count * code_bits].reshape(count, code_bits).astype(np.uint32)
    return (bits << np.arange(code_bits, dtype=np.uint32)).sum(axis=1)


def payload_kind(payload) -> str:
    if isinstance(payload, IdentityPayload):
        return "identity"
    if isinstance(payload, QuantPayload):
        return "quantization"
    if isinstance(payload, RandKPayload):
        return "rand-k"
    raise DomainError(f"unknown payload type {type(payload).__name__}")


def encode(client_id: int, round_index: int, payload) -> bytes:
    out = bytearray(struct.pack("<IIB", client_id, round_index, _TAGS[payload_kind(payload)]))
    if isinstance(payload, IdentityPayload):
        out += np.asarray(payload.values, dtype="<f8").tobytes()
    elif isinstance(payload, QuantPayload):
        for blk in payload.blocks:
            out += struct.pack("<d", blk.maxabs)
            out += _pack_codes(blk.codes, blk.code_bits)
    else:
        out += struct.pack("<I", payload.indices.size)
        for idx, val in zip(payload.indices, payload.values):
            out += struct.pack("<Id", int(idx), float(val))
    return bytes(out)


def decode(raw: bytes, layout, code_bits: int = 8):
    """Inverse of encode; returns (client_id, round, flat vector of length layout.size)."""
    client_id, round_index, tag = struct.unpack_from("<IIB", raw, 0)
    off = 9
    vec = np.zeros(layout.size)
    if tag == _TAGS["identity"]:
        vec[:] = np.frombuffer(raw, dtype="<f8", count=layout.size, offset=off)
    elif tag == _TAGS["quantization"]:
        pos = 0
        for block in layout.blocks:
            (maxabs,) = struct.unpack_from("<d", raw, off)
            off += 8
            nbytes = _padded_code_bytes(block.size, code_bits)
            codes = _unpack_codes(raw[off:off + nbytes], block.size, code_bits)
            off += nbytes
            if maxabs == 0.0:
                vals = np.zeros(block.size)
            else:
                delta = 2.0 * maxabs / (2**code_bits - 1)
                vals = -maxabs + codes * delta
            vec[pos:pos + block.size] = vals
            pos += block.size
    elif tag == _TAGS["rand-k"]:
        (k,) = struct.unpack_from("<I", raw, off)
        off += 4
        for _ in range(k):
            idx, val = struct.unpack_from("<Id", raw, off)
            off += 12
            vec[idx] = val
    else:
        raise DomainError(f"unknown codec tag {tag}")
    return client_id, round_index, vec
