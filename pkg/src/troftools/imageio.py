"""Grayscale image files: binary PGM (P5) and PNG."""

import os

import numpy as np
from PIL import Image

from troftools.core import GrayImage, PhasePartition


class ImageFormatError(ValueError):
    pass


def _format(path):
    ext = os.path.splitext(str(path))[1].lower()
    if ext in ('.pgm', '.pnm'):
        return 'pgm'
    if ext == '.png':
        return 'png'
    raise ImageFormatError(f'Unsupported image extension: {ext or path}.')


def _header_tokens(data, count):
    """Read count whitespace separated header tokens, skipping comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ImageFormatError('Truncated PGM header.')
        if data[pos:pos + 1] == b'#':
            end = data.find(b'\n', pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    # Exactly one whitespace byte separates the header from the raster.
    return tokens, pos + 1


def read_pgm(path):
    """Return the raw raster and its maximum value."""
    with open(path, 'rb') as f:
        data = f.read()
    tokens, offset = _header_tokens(data, 4)
    if tokens[0] != b'P5':
        raise ImageFormatError(f'{path} is not a binary PGM (P5) file.')
    try:
        width, height, max_value = (int(token) for token in tokens[1:])
    except ValueError:
        raise ImageFormatError(f'Malformed PGM header in {path}.') from None
    if not 0 < max_value < 65536:
        raise ImageFormatError(f'Invalid PGM maximum value {max_value}.')
    dtype = np.dtype(np.uint8) if max_value < 256 else np.dtype('>u2')
    expected = width * height * dtype.itemsize
    if len(data) - offset < expected:
        raise ImageFormatError(f'PGM raster in {path} is truncated.')
    raster = np.frombuffer(data, dtype=dtype, count=width * height, offset=offset)
    return raster.reshape(height, width), max_value


def write_pgm(path, raster, max_value):
    raster = np.asarray(raster)
    height, width = raster.shape
    dtype = np.dtype(np.uint8) if max_value < 256 else np.dtype('>u2')
    with open(path, 'wb') as f:
        f.write(f'P5\n{width} {height}\n{max_value}\n'.encode('ascii'))
        f.write(raster.astype(dtype).tobytes())


def read_png(path):
    with Image.open(path) as img:
        if img.mode in ('I;16', 'I;16B', 'I;16L', 'I'):
            raster = np.asarray(img, dtype=np.int64)
            return raster, 65535
        if img.mode != 'L':
            img = img.convert('L')
        return np.asarray(img, dtype=np.int64), 255


def write_png(path, raster, max_value):
    raster = np.asarray(raster)
    if max_value < 256:
        Image.fromarray(raster.astype(np.uint8)).save(path)
    else:
        Image.fromarray(raster.astype(np.uint16)).save(path)


def read_raster(path):
    if _format(path) == 'pgm':
        return read_pgm(path)
    return read_png(path)


def write_raster(path, raster, max_value=255):
    if _format(path) == 'pgm':
        write_pgm(path, raster, max_value)
    else:
        write_png(path, raster, max_value)


def read_image(path):
    """Read a grayscale file linearly mapped onto [0, 1]."""
    raster, max_value = read_raster(path)
    return GrayImage(np.asarray(raster, dtype=np.float64) / max_value)


def write_image(path, image, bits=8):
    max_value = 255 if bits == 8 else 65535
    data = image.data if isinstance(image, GrayImage) else np.asarray(image)
    write_raster(path, np.rint(np.clip(data, 0, 1) * max_value), max_value)


def label_levels(K):
    """Gray level of each phase in an 8-bit label image."""
    if K == 1:
        return np.zeros(1, dtype=np.int64)
    return np.rint(np.arange(K) * 255 / (K - 1)).astype(np.int64)


def write_labels(path, partition, raw=False):
    """Write a label image; raw keeps 16-bit phase indices."""
    if raw:
        write_raster(path, partition.labels, 65535)
    else:
        write_raster(path, label_levels(partition.K)[partition.labels], 255)


def read_labels(path, K=None, raw=False):
    """Read a label image written by write_labels back into indices."""
    raster, _ = read_raster(path)
    raster = np.asarray(raster, dtype=np.int64)
    if raw:
        return PhasePartition(raster, int(raster.max()) + 1 if K is None else K)
    if K is None:
        levels = np.unique(raster)
        _, labels = np.unique(raster, return_inverse=True)
        return PhasePartition(labels.reshape(raster.shape), levels.size)
    levels = label_levels(K)
    labels = np.searchsorted(levels, raster)
    if np.any(labels >= K) or np.any(levels[np.minimum(labels, K - 1)] != raster):
        raise ImageFormatError(f'{path} holds gray levels not used for K={K}.')
    return PhasePartition(labels, K)
