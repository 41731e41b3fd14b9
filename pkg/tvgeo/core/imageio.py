"""
GridImage file I/O: 16-bit PGM with an affine scaling sidecar.

Pixel layout: PGM row r holds grid row i = r, column c holds grid column j = c.

PGM (Netpbm):
  - P5 (binary, default): header 'P5\\n<width> <height>\\n<maxval>\\n' followed by
    big-endian uint16 samples (maxval 65535).
  - P2 (plain): same header with 'P2', then decimal samples, 16 per line.
  Header comments ('#' to end of line) are skipped on read.

Scaling sidecar '<file>.txt' (written next to every PGM):

    # tvgeo-scale v1
    offset <float>
    scale <float>

with value = offset + scale * pixel. Without a sidecar a PGM reads as
pixel / maxval, i.e. into [0, 1].
"""

import sys
from pathlib import Path

import numpy as np

from tvgeo.core.errors import FormatError
from tvgeo.core.grid import GridImage

MAXVAL = 65535
SIDECAR_MAGIC = '# tvgeo-scale v1'


def is_pipe(stream) -> bool:
    """True when stream is not a terminal (i.e. data is being piped)."""
    try:
        return not stream.isatty()
    except AttributeError:
        return False


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + '.txt')


def _quantize(image: GridImage, unit: bool = False) -> tuple[np.ndarray, float, float]:
    v = image.values
    if unit:
        lo, scale = 0.0, 1.0 / MAXVAL
    else:
        lo, hi = float(v.min()), float(v.max())
        scale = (hi - lo) / MAXVAL if hi > lo else 1.0
    pixels = np.rint((v - lo) / scale).clip(0, MAXVAL).astype(np.uint16)
    return pixels, lo, scale


def encode_pgm(image: GridImage, plain: bool = False,
               unit: bool = False) -> tuple[bytes, float, float]:
    """PGM bytes plus the (offset, scale) that maps pixels back to values.

    unit=True maps [0, 1] onto the full pixel range (values outside are clipped)
    instead of stretching min..max.
    """
    pixels, offset, scale = _quantize(image, unit)
    h, w = pixels.shape
    header = f"{'P2' if plain else 'P5'}\n{w} {h}\n{MAXVAL}\n".encode('ascii')
    if plain:
        flat = pixels.ravel()
        lines = [' '.join(str(int(p)) for p in flat[k:k + 16]) for k in range(0, flat.size, 16)]
        body = ('\n'.join(lines) + '\n').encode('ascii')
    else:
        body = pixels.astype('>u2').tobytes()
    return header + body, offset, scale


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read `count` whitespace-separated header tokens, skipping comments."""
    out, pos = [], 0
    while len(out) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise FormatError("truncated PGM header")
        if data[pos:pos + 1] == b'#':
            while pos < len(data) and data[pos:pos + 1] not in (b'\n', b'\r'):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        out.append(data[start:pos])
    return out, pos


def decode_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Raw pixel array and maxval from PGM bytes."""
    (magic, w, h, maxval), pos = _tokens(data, 4)
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise FormatError("non-numeric PGM header field") from None
    if not 0 < maxval <= MAXVAL:
        raise FormatError(f"PGM maxval {maxval} out of range")
    if magic == b'P5':
        pos += 1  # single whitespace after maxval
        dtype = '>u2' if maxval > 255 else 'u1'
        size = w * h * np.dtype(dtype).itemsize
        raw = data[pos:pos + size]
        if len(raw) < size:
            raise FormatError("truncated PGM body")
        pixels = np.frombuffer(raw, dtype=dtype).reshape(h, w)
    elif magic == b'P2':
        try:
            values = [int(t) for t in data[pos:].split()]
        except ValueError:
            raise FormatError("non-numeric sample in plain PGM") from None
        if len(values) < w * h:
            raise FormatError("truncated PGM body")
        pixels = np.array(values[:w * h], dtype=np.int64).reshape(h, w)
    else:
        raise FormatError(f"not a PGM file (magic {magic!r})")
    return pixels.astype(np.float64), maxval


def _read_sidecar(path: Path) -> tuple[float, float] | None:
    side = sidecar_path(path)
    if not side.exists():
        return None
    fields = {}
    for line in side.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        key, _, value = line.partition(' ')
        fields[key] = value.strip()
    try:
        return float(fields['offset']), float(fields['scale'])
    except (KeyError, ValueError):
        raise FormatError(f"malformed scaling sidecar {side}") from None


def _to_image(pixels: np.ndarray, maxval: int, scaling: tuple[float, float] | None) -> GridImage:
    if pixels.shape[0] != pixels.shape[1]:
        raise FormatError(f"image must be square, got {pixels.shape[1]}x{pixels.shape[0]}")
    if scaling is None:
        return GridImage(pixels / maxval)
    offset, scale = scaling
    return GridImage(offset + scale * pixels)


def load(path: str | Path) -> GridImage:
    """Read a PGM (applying its sidecar scaling when present)."""
    path = Path(path)
    pixels, maxval = decode_pgm(path.read_bytes())
    return _to_image(pixels, maxval, _read_sidecar(path))


def save(image: GridImage, path: str | Path, plain: bool = False) -> None:
    """Write a PGM and its scaling sidecar."""
    path = Path(path)
    data, offset, scale = encode_pgm(image, plain=plain)
    path.write_bytes(data)
    sidecar_path(path).write_text(f"{SIDECAR_MAGIC}\noffset {offset!r}\nscale {scale!r}\n")


def read_pipe(stream=None) -> GridImage:
    """Read a PGM from a binary stream (default: stdin). No sidecar: values land in [0, 1]."""
    if stream is None:
        stream = sys.stdin.buffer
    pixels, maxval = decode_pgm(stream.read())
    return _to_image(pixels, maxval, None)


def write_pipe(image: GridImage, stream=None, plain: bool = False) -> None:
    """Write a PGM to a binary stream (default: stdout) with [0, 1] mapped to 0..maxval."""
    if stream is None:
        stream = sys.stdout.buffer
    data, _, _ = encode_pgm(image, plain=plain, unit=True)
    stream.write(data)
    stream.flush()


def load_input(path: str | None) -> tuple[GridImage, str]:
    """Image from a file, '-' or a stdin pipe, with a stem for naming outputs.

    Returns (image, stem); raises FileNotFoundError when no input is available.
    """
    if path == '-' or (path is None and is_pipe(sys.stdin)):
        return read_pipe(), 'stdin'
    if path is None:
        raise FileNotFoundError("no input image")
    return load(path), Path(path).stem
