"""Binary container helpers and atomic file output."""
import os
import struct
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from .errors import CorruptCheckpoint, VersionMismatch

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, data: bytes) -> Path:
    """Write bytes to a temp file next to `path`, then rename over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


class BinaryWriter:
    """Little-endian writer for the versioned model containers."""

    def __init__(self, magic: bytes, version: int):
        self._parts: list[bytes] = [magic, struct.pack("<H", version)]

    def u8(self, value: int) -> None:
        self._parts.append(struct.pack("<B", value))

    def u32(self, value: int) -> None:
        self._parts.append(struct.pack("<I", value))

    def i64(self, value: int) -> None:
        self._parts.append(struct.pack("<q", value))

    def f64(self, value: float) -> None:
        self._parts.append(struct.pack("<d", value))

    def text(self, value: str) -> None:
        raw = value.encode("utf-8")
        self.u32(len(raw))
        self._parts.append(raw)

    def array(self, arr: np.ndarray, dtype: str) -> None:
        """Write ndim, each dimension, then the raw little-endian data."""
        arr = np.asarray(arr)
        self.u8(arr.ndim)
        for dim in arr.shape:
            self.u32(dim)
        self._parts.append(np.ascontiguousarray(arr, dtype=np.dtype(dtype).newbyteorder("<")).tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class BinaryReader:
    """Counterpart of BinaryWriter; truncation raises CorruptCheckpoint."""

    def __init__(self, data: bytes, magic: bytes, supported_versions: tuple[int, ...]):
        self._data = data
        self._pos = 0
        if self._take(len(magic)) != magic:
            raise CorruptCheckpoint(f"bad magic, expected {magic!r}")
        (self.version,) = struct.unpack("<H", self._take(2))
        if self.version not in supported_versions:
            raise VersionMismatch(
                f"unsupported {magic.decode()} version {self.version}, "
                f"expected one of {supported_versions}"
            )

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise CorruptCheckpoint("unexpected end of data")
        chunk = self._data[self._pos:self._pos + n]
        self._pos += n
        return chunk

    @property
    def at_end(self) -> bool:
        return self._pos >= len(self._data)

    def u8(self) -> int:
        return struct.unpack("<B", self._take(1))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def i64(self) -> int:
        return struct.unpack("<q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def text(self) -> str:
        return self._take(self.u32()).decode("utf-8")

    def array(self, dtype: str) -> np.ndarray:
        ndim = self.u8()
        shape = tuple(self.u32() for _ in range(ndim))
        dt = np.dtype(dtype).newbyteorder("<")
        count = int(np.prod(shape)) if shape else 1
        raw = self._take(count * dt.itemsize)
        return np.frombuffer(raw, dtype=dt).reshape(shape).astype(dtype)
