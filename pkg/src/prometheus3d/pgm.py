"""Binary PGM (P5) and PBM (P4) reading and writing.

P5 files hold 8-bit grayscale frames; P4 files hold foreground masks
(bit set = foreground). Both use the netpbm layouts, rows padded to whole
bytes in P4.
"""

import numpy as np

from .errors import ParameterValidationError


def write_pgm(path, image: np.ndarray) -> None:
    img = np.asarray(image)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ParameterValidationError("P5 writer expects a 2-D uint8 image")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def write_pbm(path, mask: np.ndarray) -> None:
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ParameterValidationError("P4 writer expects a 2-D mask")
    m = m.astype(bool)
    h, w = m.shape
    packed = np.packbits(m, axis=1)
    with open(path, "wb") as fh:
        fh.write(f"P4\n{w} {h}\n".encode("ascii"))
        fh.write(packed.tobytes())


def _read_header(fh, magic: bytes, n_fields: int):
    if fh.read(2) != magic:
        raise ParameterValidationError(f"not a {magic.decode()} file")
    fields = []
    while len(fields) < n_fields:
        ch = fh.read(1)
        if not ch:
            raise ParameterValidationError("truncated netpbm header")
        if ch.isspace():
            continue
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        token = ch
        ch = fh.read(1)
        while ch and not ch.isspace():
            token += ch
            ch = fh.read(1)
        fields.append(int(token))
    return fields


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        w, h, maxval = _read_header(fh, b"P5", 3)
        if maxval != 255:
            raise ParameterValidationError("only 8-bit PGM is supported")
        data = fh.read(w * h)
    if len(data) != w * h:
        raise ParameterValidationError(f"truncated PGM payload in {path}")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w)


def read_pbm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        w, h = _read_header(fh, b"P4", 2)
        row_bytes = (w + 7) // 8
        data = fh.read(row_bytes * h)
    if len(data) != row_bytes * h:
        raise ParameterValidationError(f"truncated PBM payload in {path}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8).reshape(h, row_bytes), axis=1)
    return bits[:, :w].astype(bool)
