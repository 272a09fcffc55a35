"""Binary checkpoint container.

Layout (all integers little-endian)::

    b"LRNZ1"                  magic
    32 bytes                  sha256 of the run configuration
    u64 + bytes               JSON header (utf-8)
    u64 + bytes               payload: float64 little-endian arrays, back to back
    u32                       crc32 of everything above

The header describes an arbitrary tree of dataclasses, dicts, lists, scalars,
:class:`ParamSet` and :class:`RngStream` values; arrays live in the payload
and are referenced by index.
"""
from __future__ import annotations

import dataclasses
import json
import struct
import zlib
from pathlib import Path
from typing import Any

import numpy as np

from .core import RngStream

MAGIC = b"LRNZ1"


class CheckpointError(ValueError):
    pass


def _registry() -> dict[str, type]:
    from .adazo import AdazoState
    from .baselines import AdamState, SamState
    from .lowrank import LorenzaLayerState, LorenzaState
    from .ssrf import Subspace

    return {cls.__name__: cls for cls in (AdazoState, AdamState, SamState, LorenzaState,
                                          LorenzaLayerState, Subspace)}


def _encode(obj: Any, arrays: list[np.ndarray]) -> Any:
    from .objectives import ParamSet

    if isinstance(obj, np.ndarray):
        arrays.append(np.ascontiguousarray(obj, dtype="<f8"))
        return {"__array__": len(arrays) - 1, "shape": list(obj.shape)}
    if isinstance(obj, ParamSet):
        return {"__paramset__": {k: _encode(w, arrays) for k, w in obj.layers.items()},
                "transposed": dict(obj.transposed)}
    if isinstance(obj, RngStream):
        return {"__rng__": obj.get_state()}
    if dataclasses.is_dataclass(obj):
        return {"__type__": type(obj).__name__,
                "fields": {f.name: _encode(getattr(obj, f.name), arrays) for f in dataclasses.fields(obj)}}
    if isinstance(obj, dict):
        return {"__dict__": [[k, _encode(v, arrays)] for k, v in obj.items()]}
    if isinstance(obj, (list, tuple)):
        return {"__list__": [_encode(v, arrays) for v in obj]}
    if isinstance(obj, float):
        # floats go through the payload so non-finite values and bits survive
        arrays.append(np.array([obj], dtype="<f8"))
        return {"__float__": len(arrays) - 1}
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    raise TypeError(f"cannot checkpoint object of type {type(obj).__name__}")


def _decode(node: Any, arrays: list[np.ndarray], registry: dict[str, type]) -> Any:
    from .objectives import ParamSet

    if not isinstance(node, dict):
        return node
    if "__array__" in node:
        return arrays[node["__array__"]].reshape(node["shape"]).copy()
    if "__float__" in node:
        return float(arrays[node["__float__"]][0])
    if "__paramset__" in node:
        layers = {k: _decode(v, arrays, registry) for k, v in node["__paramset__"].items()}
        return ParamSet(layers, dict(node["transposed"]))
    if "__rng__" in node:
        return RngStream.from_state(node["__rng__"])
    if "__type__" in node:
        cls = registry.get(node["__type__"])
        if cls is None:
            raise CheckpointError(f"unknown state type {node['__type__']!r}")
        return cls(**{k: _decode(v, arrays, registry) for k, v in node["fields"].items()})
    if "__dict__" in node:
        return {k: _decode(v, arrays, registry) for k, v in node["__dict__"]}
    if "__list__" in node:
        return [_decode(v, arrays, registry) for v in node["__list__"]]
    raise CheckpointError(f"malformed header node with keys {sorted(node)}")


def dumps(payload: dict[str, Any], config_hash: str) -> bytes:
    arrays: list[np.ndarray] = []
    header = {"version": 1, "tree": _encode(payload, arrays),
              "arrays": [a.size for a in arrays]}
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    body = b"".join(a.tobytes() for a in arrays)
    blob = (MAGIC + bytes.fromhex(config_hash) + struct.pack("<Q", len(hbytes)) + hbytes
            + struct.pack("<Q", len(body)) + body)
    return blob + struct.pack("<I", zlib.crc32(blob))


def loads(blob: bytes, expected_hash: str | None = None) -> dict[str, Any]:
    if len(blob) < len(MAGIC) + 32 + 8 + 8 + 4 or blob[:5] != MAGIC:
        raise CheckpointError("not an LRNZ1 checkpoint (bad magic or truncated)")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise CheckpointError("checksum mismatch; file is corrupt")
    config_hash = blob[5:37].hex()
    if expected_hash is not None and config_hash != expected_hash:
        raise CheckpointError(f"config hash mismatch: checkpoint {config_hash[:12]}, run {expected_hash[:12]}")
    pos = 37
    try:
        (hlen,) = struct.unpack_from("<Q", body, pos)
        header = json.loads(body[pos + 8:pos + 8 + hlen].decode())
        pos += 8 + hlen
        (plen,) = struct.unpack_from("<Q", body, pos)
        payload = body[pos + 8:pos + 8 + plen]
        if len(payload) != plen or pos + 8 + plen != len(body):
            raise CheckpointError("payload length does not match header")
        sizes = header["arrays"]
        if 8 * sum(sizes) != plen:
            raise CheckpointError("array sizes do not match payload length")
        arrays, off = [], 0
        for n in sizes:
            arrays.append(np.frombuffer(payload, dtype="<f8", count=n, offset=off).astype(np.float64))
            off += 8 * n
        out = _decode(header["tree"], arrays, _registry())
    except CheckpointError:
        raise
    except (ValueError, KeyError, TypeError, struct.error, IndexError) as err:
        raise CheckpointError(f"unreadable checkpoint: {err}") from err
    out["config_hash"] = config_hash
    return out


def checkpoint_save(path, payload: dict[str, Any], config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(dumps(payload, config_hash))
    tmp.replace(path)
    return path


def checkpoint_load(path, expected_hash: str | None = None) -> dict[str, Any]:
    return loads(Path(path).read_bytes(), expected_hash)
