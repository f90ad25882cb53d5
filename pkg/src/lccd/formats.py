"""Little-endian binary formats for descriptors, models and encodings.

=========  ================================================================
magic      layout after the 8-byte magic
=========  ================================================================
LCCDDSC1   u8 stream, u32 dim, u32 patch_rows, u32 patch_cols, u32 count;
           per image: u16 id length, UTF-8 id, rows*cols*dim f32 values
           (patches row-major, each patch's dim values contiguous)
LCCDPCA1   u32 D, u32 K, D f64 mean, K*D f64 components (row-major)
LCCDGMM1   u32 K, u32 dim, K f64 weights, K*dim f64 means, K*dim f64 variances
LCCDENC1   u32 dim, u32 count; per image: u16 id length, UTF-8 id, dim f32
=========  ================================================================
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from lccd.descriptor import DescriptorSet, Stream
from lccd.encoding import EncodedImage, GmmModel
from lccd.errors import DataError
from lccd.reduction import PcaModel

DESCRIPTOR_MAGIC = b"LCCDDSC1"
PCA_MAGIC = b"LCCDPCA1"
GMM_MAGIC = b"LCCDGMM1"
ENCODED_MAGIC = b"LCCDENC1"

_F32 = np.dtype("<f4")
_F64 = np.dtype("<f8")


class _Reader:
    def __init__(self, path, magic: bytes):
        self.path = Path(path)
        try:
            self.buf = self.path.read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc}") from exc
        if self.buf[:8] != magic:
            raise DataError(f"{path}: missing {magic.decode()} header")
        self.pos = 8

    def unpack(self, fmt: str):
        s = struct.Struct("<" + fmt)
        if self.pos + s.size > len(self.buf):
            raise DataError(f"{self.path}: truncated")
        vals = s.unpack_from(self.buf, self.pos)
        self.pos += s.size
        return vals

    def array(self, dtype, count: int) -> np.ndarray:
        nbytes = dtype.itemsize * count
        if self.pos + nbytes > len(self.buf):
            raise DataError(f"{self.path}: truncated")
        arr = np.frombuffer(self.buf, dtype=dtype, count=count, offset=self.pos)
        self.pos += nbytes
        return arr.copy()

    def text(self) -> str:
        (n,) = self.unpack("H")
        if self.pos + n > len(self.buf):
            raise DataError(f"{self.path}: truncated")
        raw = self.buf[self.pos:self.pos + n]
        self.pos += n
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"{self.path}: bad UTF-8 id") from exc

    def done(self):
        if self.pos != len(self.buf):
            raise DataError(f"{self.path}: {len(self.buf) - self.pos} trailing bytes")


def _id_bytes(image_id: str) -> bytes:
    raw = image_id.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise DataError(f"image id too long: {image_id[:40]}...")
    return struct.pack("<H", len(raw)) + raw


def write_descriptors(path, sets, stream: Stream, dim: int, patch_rows: int,
                      patch_cols: int) -> None:
    sets = list(sets)
    chunks = [DESCRIPTOR_MAGIC,
              struct.pack("<BIIII", int(stream), dim, patch_rows, patch_cols, len(sets))]
    for s in sets:
        if s.values.shape != (patch_rows * patch_cols, dim):
            raise DataError(f"{s.image_id}: descriptor block has shape {s.values.shape}")
        chunks.append(_id_bytes(s.image_id))
        chunks.append(np.ascontiguousarray(s.values, dtype=_F32).tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_descriptors(path) -> tuple[Stream | int, list[DescriptorSet]]:
    r = _Reader(path, DESCRIPTOR_MAGIC)
    stream_id, dim, rows, cols, count = r.unpack("BIIII")
    try:
        stream = Stream(stream_id)
    except ValueError:
        stream = stream_id
    sets = []
    for _ in range(count):
        image_id = r.text()
        values = r.array(_F32, rows * cols * dim).reshape(rows * cols, dim)
        sets.append(DescriptorSet(image_id, stream, values, rows, cols))
    r.done()
    return stream, sets


def write_pca(path, model: PcaModel) -> None:
    Path(path).write_bytes(
        PCA_MAGIC
        + struct.pack("<II", model.input_dim, model.output_dim)
        + np.asarray(model.mean, dtype=_F64).tobytes()
        + np.ascontiguousarray(model.components, dtype=_F64).tobytes()
    )


def read_pca(path) -> PcaModel:
    r = _Reader(path, PCA_MAGIC)
    d, k = r.unpack("II")
    mean = r.array(_F64, d)
    comps = r.array(_F64, k * d).reshape(k, d)
    r.done()
    return PcaModel(mean.astype(np.float64), comps.astype(np.float64))


def write_gmm(path, model: GmmModel) -> None:
    Path(path).write_bytes(
        GMM_MAGIC
        + struct.pack("<II", model.n_components, model.dim)
        + np.asarray(model.weights, dtype=_F64).tobytes()
        + np.ascontiguousarray(model.means, dtype=_F64).tobytes()
        + np.ascontiguousarray(model.variances, dtype=_F64).tobytes()
    )


def read_gmm(path) -> GmmModel:
    r = _Reader(path, GMM_MAGIC)
    k, dim = r.unpack("II")
    weights = r.array(_F64, k)
    means = r.array(_F64, k * dim).reshape(k, dim)
    variances = r.array(_F64, k * dim).reshape(k, dim)
    r.done()
    if np.any(variances <= 0) or np.any(weights <= 0):
        raise DataError(f"{path}: nonpositive weights or variances")
    return GmmModel(weights.astype(np.float64), means.astype(np.float64),
                    variances.astype(np.float64))


def write_encoded(path, encoded) -> None:
    encoded = list(encoded)
    dim = encoded[0].vector.size if encoded else 0
    chunks = [ENCODED_MAGIC, struct.pack("<II", dim, len(encoded))]
    for e in encoded:
        if e.vector.size != dim:
            raise DataError(f"{e.image_id}: encoding length {e.vector.size} != {dim}")
        chunks.append(_id_bytes(e.image_id))
        chunks.append(np.asarray(e.vector, dtype=_F32).tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_encoded(path) -> list[EncodedImage]:
    r = _Reader(path, ENCODED_MAGIC)
    dim, count = r.unpack("II")
    out = []
    for _ in range(count):
        image_id = r.text()
        out.append(EncodedImage(image_id, r.array(_F32, dim).astype(np.float64)))
    r.done()
    return out
