"""Self-describing binary tensor files and 16-bit PGM preview export.

File layout (little-endian, documented in docs/tensor_format.md):
magic "QKT1" | version u8 | dtype u8 | ndim u8 | ndim x u64 dims | payload.
Default payloads are float32 (dtype 0 complex interleaved, 1 real); dtypes
2/3 are float64 variants used where bit-exact round trips are required
(network checkpoints). All in-memory arrays are float64/complex128.
"""

import struct

import numpy as np

MAGIC = b"QKT1"
VERSION = 1

DTYPE_COMPLEX64 = 0
DTYPE_FLOAT32 = 1
DTYPE_FLOAT64 = 2
DTYPE_COMPLEX128 = 3

_NUMPY_CODES = {
    DTYPE_COMPLEX64: np.dtype("<c8"),
    DTYPE_FLOAT32: np.dtype("<f4"),
    DTYPE_FLOAT64: np.dtype("<f8"),
    DTYPE_COMPLEX128: np.dtype("<c16"),
}

MAX_NDIM = 4


class TensorFormatError(ValueError):
    """Malformed tensor file or unsupported tensor."""


def write_tensor(path, t, float64=False):
    """Write a dense real or complex tensor. Round-trips through read_tensor.

    Payload is float32 unless float64=True (checkpoint precision).
    """
    t = np.asarray(t)
    if t.size == 0:
        raise TensorFormatError("empty tensor")
    if t.ndim < 1 or t.ndim > MAX_NDIM:
        raise TensorFormatError(f"unsupported ndim {t.ndim} (must be 1..{MAX_NDIM})")
    if np.iscomplexobj(t):
        code = DTYPE_COMPLEX128 if float64 else DTYPE_COMPLEX64
    else:
        code = DTYPE_FLOAT64 if float64 else DTYPE_FLOAT32
    header = MAGIC + struct.pack("<BBB", VERSION, code, t.ndim)
    header += struct.pack(f"<{t.ndim}Q", *t.shape)
    payload = np.ascontiguousarray(t, dtype=_NUMPY_CODES[code]).tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def read_tensor(path):
    """Read a tensor file; returns complex128 or float64 ndarray."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 7:
        raise TensorFormatError("truncated header")
    if raw[:4] != MAGIC:
        raise TensorFormatError(f"bad magic {raw[:4]!r}")
    version, code, ndim = struct.unpack("<BBB", raw[4:7])
    if version != VERSION:
        raise TensorFormatError(f"version mismatch: file has {version}, expected {VERSION}")
    if code not in _NUMPY_CODES:
        raise TensorFormatError(f"unknown dtype code {code}")
    if ndim < 1 or ndim > MAX_NDIM:
        raise TensorFormatError(f"unsupported ndim {ndim}")
    offset = 7 + 8 * ndim
    if len(raw) < offset:
        raise TensorFormatError("truncated dims")
    dims = struct.unpack(f"<{ndim}Q", raw[7:offset])
    dtype = _NUMPY_CODES[code]
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(raw) - offset < expected:
        raise TensorFormatError(
            f"truncated payload: need {expected} bytes, have {len(raw) - offset}"
        )
    if len(raw) - offset > expected:
        raise TensorFormatError(
            f"payload size mismatch: need {expected} bytes, have {len(raw) - offset}"
        )
    t = np.frombuffer(raw, dtype=dtype, count=int(np.prod(dims)), offset=offset)
    t = t.reshape(dims)
    if dtype.kind == "c":
        return t.astype(np.complex128)
    return t.astype(np.float64)


def export_preview(image, path):
    """Write a real 2-D array as 16-bit binary PGM (P5, big-endian samples).

    Values are mapped linearly from [0, max] to [0, 65535]; an all-zero
    image maps to all-zero pixels.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise TensorFormatError(f"preview needs a 2-D array, got ndim {img.ndim}")
    if not np.all(np.isfinite(img)):
        raise TensorFormatError("preview image has non-finite values")
    peak = img.max()
    if peak > 0:
        scaled = np.clip(img / peak, 0.0, 1.0) * 65535.0
    else:
        scaled = np.zeros_like(img)
    samples = np.round(scaled).astype(">u2")
    rows, cols = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        f.write(samples.tobytes())


def read_preview(path):
    """Read back a 16-bit P5 PGM written by export_preview (tests/tools)."""
    with open(path, "rb") as f:
        raw = f.read()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise TensorFormatError("not a P5 PGM")
    cols, rows = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    if maxval != 65535:
        raise TensorFormatError(f"expected 16-bit PGM, maxval {maxval}")
    data = np.frombuffer(parts[3], dtype=">u2", count=rows * cols)
    return data.reshape(rows, cols).astype(np.int64)
