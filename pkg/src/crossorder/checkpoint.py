"""Versioned binary checkpoint container.

Layout (all integers little-endian)::

    magic        8 bytes   b"XORDCKPT"
    version      uint32    FORMAT_VERSION
    header_len   uint64    length of the JSON header in bytes
    header       UTF-8 JSON (sorted keys, no whitespace)
    payload      raw tensor bytes, concatenated in header order

The header holds ``config`` (flat training config echo), ``models`` (width,
heads, blocks, ff width per modality), ``optimizers`` (step / skipped counters
and Adam constants per modality) and ``tensors``: a list of
``{name, dtype, shape, offset, nbytes}`` with offsets relative to the payload
start. Tensors are float64 ``<f8`` in C order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .classifier import PairClassifierParams
from .encoder import BLOCK_KEYS, EncoderParams
from .model import OrderModel
from .trainer import AdamState, EpochStats, TrainState

MAGIC = b"XORDCKPT"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    state: TrainState
    config: dict = field(default_factory=dict)

    @property
    def text_model(self) -> OrderModel:
        return self.state.text_model

    @property
    def image_model(self) -> OrderModel:
        return self.state.image_model


def _model_meta(model: OrderModel) -> dict:
    return {"width": model.width, "heads": model.encoder.heads,
            "blocks": len(model.encoder.blocks), "ff_width": model.encoder.ff_width}


def _opt_meta(opt: AdamState) -> dict:
    return {"step": opt.step, "skipped": opt.skipped, "beta1": opt.beta1, "beta2": opt.beta2, "eps": opt.eps}


def save_checkpoint(state: TrainState, config: dict, path) -> None:
    tensors = []
    for side, model, opt in (("text", state.text_model, state.text_opt), ("image", state.image_model, state.image_opt)):
        for name, arr in model.named_arrays().items():
            tensors.append((f"{side}.{name}", arr))
        for name in sorted(opt.m):
            tensors.append((f"{side}.adam_m.{name}", opt.m[name]))
            tensors.append((f"{side}.adam_v.{name}", opt.v[name]))
    entries, chunks, offset = [], [], 0
    for name, arr in tensors:
        raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append({"name": name, "dtype": "<f8", "shape": list(np.shape(arr)), "offset": offset,
                        "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    header = {
        "config": config,
        "models": {"text": _model_meta(state.text_model), "image": _model_meta(state.image_model)},
        "optimizers": {"text": _opt_meta(state.text_opt), "image": _opt_meta(state.image_opt)},
        "history": [[h.epoch, h.text_loss, h.image_loss] for h in state.history],
        "tensors": entries,
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(hbytes)))
        fh.write(hbytes)
        for c in chunks:
            fh.write(c)


def _rebuild_model(meta: dict, arrays: dict[str, np.ndarray], side: str) -> OrderModel:
    d, f = meta["width"], meta["ff_width"]
    blocks = []
    for i in range(meta["blocks"]):
        blocks.append({k: arrays[f"{side}.encoder.{i}.{k}"] for k in BLOCK_KEYS})
    enc = EncoderParams(d, meta["heads"], blocks)
    if blocks and blocks[0]["w1"].shape != (d, f):
        raise CheckpointError(f"{side}: inconsistent feed-forward shape {blocks[0]['w1'].shape}")
    cls = PairClassifierParams(arrays[f"{side}.classifier.weight"], arrays[f"{side}.classifier.bias"])
    return OrderModel(enc, cls)


def load_checkpoint(path, expected_width: Optional[int] = None) -> Checkpoint:
    data = Path(path).read_bytes()
    if len(data) < _PREFIX.size:
        raise CheckpointError(f"{path}: truncated checkpoint")
    magic, version, hlen = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic header {magic!r}); version error")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version} (expected {FORMAT_VERSION})")
    start = _PREFIX.size
    try:
        header = json.loads(data[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc
    payload = memoryview(data)[start + hlen:]
    arrays = {}
    for t in header["tensors"]:
        if t["offset"] + t["nbytes"] > len(payload):
            raise CheckpointError(f"{path}: truncated payload at tensor {t['name']}")
        buf = payload[t["offset"]:t["offset"] + t["nbytes"]]
        arrays[t["name"]] = np.frombuffer(buf, dtype=t["dtype"]).reshape(t["shape"]).astype(np.float64)

    models = header["models"]
    if expected_width is not None:
        for side in ("text", "image"):
            if models[side]["width"] != expected_width:
                raise CheckpointError(
                    f"dimension error: {side} model has d={models[side]['width']}, expected d={expected_width}")
    state = TrainState(_rebuild_model(models["text"], arrays, "text"), _rebuild_model(models["image"], arrays, "image"))
    for side, opt in (("text", state.text_opt), ("image", state.image_opt)):
        meta = header["optimizers"][side]
        opt.step, opt.skipped = meta["step"], meta["skipped"]
        opt.beta1, opt.beta2, opt.eps = meta["beta1"], meta["beta2"], meta["eps"]
        for name in arrays:
            prefix = f"{side}.adam_m."
            if name.startswith(prefix):
                key = name[len(prefix):]
                opt.m[key] = arrays[name]
                opt.v[key] = arrays[f"{side}.adam_v.{key}"]
    state.history = [EpochStats(int(e), float(t), float(i)) for e, t, i in header.get("history", [])]
    return Checkpoint(state, header.get("config", {}))
