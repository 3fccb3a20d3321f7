"""Binary checkpoint container.

Layout: an 8-byte magic string, a uint32 format version, then one record
per named array: uint32 name length, the UTF-8 name, a uint8 dtype code,
a uint8 rank, uint32 dims, and the raw little-endian values.  Everything
round-trips bit-exactly.  Model parameters, batch-norm running stats,
optimizer momentum buffers, the epoch, and the best accuracy are all
stored as named arrays.
"""

from __future__ import annotations

import pathlib
import struct

import numpy as np
import torch

MAGIC = b"TPNETCK1"
VERSION = 1

_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<i8"), 4: np.dtype("<u1")}
_CODES = {v: k for k, v in _DTYPES.items()}


def save_arrays(path, arrays: dict[str, np.ndarray]) -> None:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        for name in sorted(arrays):
            arr = np.asarray(arrays[name])
            dt = arr.dtype.newbyteorder("<")
            if dt not in _CODES:
                raise ValueError(f"unsupported dtype {arr.dtype} for {name!r}")
            data = np.ascontiguousarray(arr.astype(dt, copy=False))
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<BB", _CODES[dt], arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(data.tobytes())


def load_arrays(path) -> dict[str, np.ndarray]:
    path = pathlib.Path(path)
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path} is not a checkpoint file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        while True:
            head = fh.read(4)
            if not head:
                break
            (name_len,) = struct.unpack("<I", head)
            name = fh.read(name_len).decode("utf-8")
            code, ndim = struct.unpack("<BB", fh.read(2))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            dt = _DTYPES[code]
            count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
            arr = np.frombuffer(fh.read(count * dt.itemsize), dtype=dt).reshape(shape)
            out[name] = arr.copy()
    return out


def gather_state(model: torch.nn.Module, optimizer=None, epoch: int = 0,
                 best_accuracy: float = 0.0) -> dict[str, np.ndarray]:
    arrays = {f"model/{k}": v.detach().cpu().numpy()
              for k, v in model.state_dict().items()}
    if optimizer is not None:
        names = {id(p): n for n, p in model.named_parameters()}
        for group in optimizer.param_groups:
            for p in group["params"]:
                buf = optimizer.state.get(p, {}).get("momentum_buffer")
                if buf is not None:
                    arrays[f"optim/momentum/{names[id(p)]}"] = buf.detach().cpu().numpy()
    arrays["meta/epoch"] = np.array(epoch, dtype=np.int64)
    arrays["meta/best_test_accuracy"] = np.array(best_accuracy, dtype=np.float64)
    return arrays


def save_checkpoint(path, model, optimizer=None, epoch: int = 0,
                    best_accuracy: float = 0.0) -> None:
    save_arrays(path, gather_state(model, optimizer, epoch, best_accuracy))


def load_checkpoint(path, model, optimizer=None) -> dict:
    """Restore model (and optimizer momentum) state; returns the metadata."""
    arrays = load_arrays(path)
    state = {}
    for key, arr in arrays.items():
        if key.startswith("model/"):
            state[key[len("model/"):]] = torch.from_numpy(arr.copy())
    model.load_state_dict(state, strict=True)
    if optimizer is not None:
        names = {n: p for n, p in model.named_parameters()}
        for key, arr in arrays.items():
            if key.startswith("optim/momentum/"):
                p = names[key[len("optim/momentum/"):]]
                optimizer.state[p]["momentum_buffer"] = torch.from_numpy(arr.copy())
    return {
        "epoch": int(arrays["meta/epoch"]),
        "best_test_accuracy": float(arrays["meta/best_test_accuracy"]),
    }
