"""LSTM checkpoint files: config block, float32 tensors, optional Adam state, CRC32."""
import struct
import zlib
from pathlib import Path
from typing import Union

import numpy as np

from ..core.binary import BinaryReader, BinaryWriter, atomic_write_bytes
from ..core.errors import CorruptCheckpoint
from ..core.models import ModelConfig
from .lstm import LstmModel
from .optim import AdamState

CKPT_MAGIC = b"LSTM"
CKPT_VERSION = 1


def _write_tensors(w: BinaryWriter, tensors: dict[str, np.ndarray]) -> None:
    w.u32(len(tensors))
    for name, tensor in tensors.items():
        w.text(name)
        w.array(tensor, "f4")


def _read_tensors(r: BinaryReader) -> dict[str, np.ndarray]:
    tensors = {}
    for _ in range(r.u32()):
        name = r.text()
        tensors[name] = r.array("f4").astype(np.float64)
    return tensors


def encode_checkpoint(model: LstmModel) -> bytes:
    cfg = model.config
    w = BinaryWriter(CKPT_MAGIC, CKPT_VERSION)
    for value in (cfg.seq_len, cfg.input_dim, cfg.hidden_dim, cfg.num_layers, cfg.output_dim, cfg.batch_size):
        w.u32(value)
    w.f64(cfg.dropout_rate)
    w.f64(cfg.learning_rate)
    w.i64(cfg.seed)
    w.u32(model.trained_epochs)
    _write_tensors(w, model.params)

    state = model.optimizer
    w.u8(1 if state is not None else 0)
    if state is not None:
        w.u32(state.step)
        w.f64(state.beta1)
        w.f64(state.beta2)
        w.f64(state.eps)
        _write_tensors(w, state.m)
        _write_tensors(w, state.v)

    body = w.getvalue()
    return body + struct.pack("<I", zlib.crc32(body))


def decode_checkpoint(data: bytes) -> LstmModel:
    """Parse checkpoint bytes; a bad checksum or truncation raises CorruptCheckpoint."""
    if len(data) < len(CKPT_MAGIC) + 6:
        raise CorruptCheckpoint("checkpoint too short")
    # header and version first, then the checksum
    r = BinaryReader(data[:-4], CKPT_MAGIC, (CKPT_VERSION,))
    (crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) != crc:
        raise CorruptCheckpoint("checkpoint checksum mismatch")

    seq_len, input_dim, hidden_dim, num_layers, output_dim, batch_size = (r.u32() for _ in range(6))
    config = ModelConfig(
        seq_len=seq_len,
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        num_layers=num_layers,
        output_dim=output_dim,
        batch_size=batch_size,
        dropout_rate=r.f64(),
        learning_rate=r.f64(),
        seed=r.i64(),
    )
    trained_epochs = r.u32()
    params = _read_tensors(r)

    optimizer = None
    if r.u8():
        step = r.u32()
        beta1, beta2, eps = r.f64(), r.f64(), r.f64()
        optimizer = AdamState(m=_read_tensors(r), v=_read_tensors(r), step=step, beta1=beta1, beta2=beta2, eps=eps)
    if not r.at_end:
        raise CorruptCheckpoint("trailing bytes after checkpoint body")
    return LstmModel(config=config, params=params, trained_epochs=trained_epochs, optimizer=optimizer)


def save_checkpoint(model: LstmModel, path: Union[str, Path]) -> Path:
    return atomic_write_bytes(path, encode_checkpoint(model))


def load_checkpoint(path: Union[str, Path]) -> LstmModel:
    return decode_checkpoint(Path(path).read_bytes())
