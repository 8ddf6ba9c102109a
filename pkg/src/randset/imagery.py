"""Binary images, connected components and their boundary pixels."""
from __future__ import annotations

import io
import struct
import zlib
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import DecodeError, InvalidParameterError, UnsupportedFormatError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_CROSS = ndimage.generate_binary_structure(2, 1)
_SQUARE = ndimage.generate_binary_structure(2, 2)


class PixelCoord(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Foreground/background pixel grid.

    ``mask`` is a read-only boolean array indexed ``[y, x]`` (row-major).
    """

    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool, copy=True)
        if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
            raise InvalidParameterError(f"image must be a non-empty 2-D grid, got shape {mask.shape}")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def empty(cls, width, height):
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def foreground_count(self) -> int:
        return int(self.mask.sum())

    def is_foreground(self, x: int, y: int) -> bool:
        if 0 <= x < self.width and 0 <= y < self.height:
            return bool(self.mask[y, x])
        return False

    def inverted(self) -> BinaryImage:
        return BinaryImage(~self.mask)

    def __eq__(self, other):
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return self.mask.shape == other.mask.shape and bool(np.array_equal(self.mask, other.mask))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Component:
    """One connected foreground component.

    ``pixels`` and ``boundary`` are ``(n, 2)`` integer arrays of ``(x, y)``
    pairs in row-major order; ``bbox`` is ``(xmin, xmax, ymin, ymax)``
    inclusive.
    """

    id: int
    pixels: np.ndarray
    boundary: np.ndarray
    bbox: tuple[int, int, int, int]
    touches_border: bool

    @property
    def area(self) -> int:
        return len(self.pixels)

    @property
    def perimeter(self) -> int:
        return len(self.boundary)

    def local_mask(self, pad=0):
        """Component pixels on a tight canvas with ``pad`` background cells per side.

        Returns ``(canvas, origin)`` where canvas cell ``[y, x]`` corresponds
        to image pixel ``(x + origin[0], y + origin[1])``.
        """
        xmin, xmax, ymin, ymax = self.bbox
        canvas = np.zeros((ymax - ymin + 1 + 2 * pad, xmax - xmin + 1 + 2 * pad), dtype=np.uint8)
        canvas[self.pixels[:, 1] - ymin + pad, self.pixels[:, 0] - xmin + pad] = 1
        return canvas, (xmin - pad, ymin - pad)

    def shifted(self, dx, dy, width=None, height=None) -> Component:
        """Same shape translated by ``(dx, dy)``; border flag recomputed when a size is given."""
        xmin, xmax, ymin, ymax = self.bbox
        touches = self.touches_border
        if width is not None and height is not None:
            touches = xmin + dx == 0 or ymin + dy == 0 or xmax + dx == width - 1 or ymax + dy == height - 1
        return Component(
            id=self.id,
            pixels=self.pixels + (dx, dy),
            boundary=self.boundary + (dx, dy),
            bbox=(xmin + dx, xmax + dx, ymin + dy, ymax + dy),
            touches_border=touches,
        )


# ---------------------------------------------------------------------------
# decoding


def _pbm_tokens(data, pos, count):
    """Read ``count`` whitespace-separated header tokens starting at ``pos``."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and (data[pos:pos + 1].isspace() or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < n and data[pos] not in (10, 13):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos] != ord("#"):
            pos += 1
        if start == pos:
            raise DecodeError("truncated PBM header", pos)
        tok = data[start:pos]
        if not tok.isdigit():
            raise DecodeError(f"expected an integer in PBM header, got {tok[:16]!r}", start)
        tokens.append((int(tok), start))
    return tokens, pos


def _decode_pbm(data: bytes) -> np.ndarray:
    magic = data[:2]
    ((w, w_at), (h, h_at)), pos = _pbm_tokens(data, 2, 2)
    if w < 1:
        raise DecodeError("PBM width must be positive", w_at)
    if h < 1:
        raise DecodeError("PBM height must be positive", h_at)
    if magic == b"P4":
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise DecodeError("missing whitespace before PBM raster", pos)
        pos += 1
        row_bytes = (w + 7) // 8
        need = row_bytes * h
        if len(data) - pos < need:
            raise DecodeError(f"PBM raster truncated: need {need} bytes, have {len(data) - pos}", len(data))
        raw = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos).reshape(h, row_bytes)
        return np.unpackbits(raw, axis=1)[:, :w].astype(bool)
    bits = np.empty(w * h, dtype=bool)
    i = 0
    n = len(data)
    while i < w * h:
        if pos >= n:
            raise DecodeError(f"PBM data truncated after {i} of {w * h} pixels", pos)
        c = data[pos]
        if c == ord("#"):
            while pos < n and data[pos] not in (10, 13):
                pos += 1
            continue
        if c in (ord("0"), ord("1")):
            bits[i] = c == ord("1")
            i += 1
        elif not data[pos:pos + 1].isspace():
            raise DecodeError(f"unexpected byte {data[pos:pos + 1]!r} in plain PBM data", pos)
        pos += 1
    return bits.reshape(h, w)


def _png_chunks(data):
    """Walk the chunk list, checking lengths and CRCs. Yields (type, payload, offset)."""
    pos = len(PNG_SIGNATURE)
    n = len(data)
    while True:
        if pos + 8 > n:
            raise DecodeError("truncated PNG chunk header", pos)
        length, ctype = struct.unpack(">I4s", data[pos:pos + 8])
        end = pos + 12 + length
        if end > n:
            raise DecodeError(f"PNG chunk {ctype!r} runs past end of file", pos)
        payload = data[pos + 8:pos + 8 + length]
        (crc,) = struct.unpack(">I", data[pos + 8 + length:end])
        if zlib.crc32(ctype + payload) & 0xFFFFFFFF != crc:
            raise DecodeError(f"CRC mismatch in PNG chunk {ctype!r}", pos)
        yield ctype, payload, pos
        if ctype == b"IEND":
            return
        pos = end


def _decode_png(data: bytes) -> np.ndarray:
    from PIL import Image

    chunks = list(_png_chunks(data))
    ctype, ihdr, at = chunks[0]
    if ctype != b"IHDR" or len(ihdr) != 13:
        raise DecodeError("PNG does not start with a valid IHDR chunk", at)
    w, h, depth, color = struct.unpack(">IIBB", ihdr[:10])
    if color != 0:
        raise UnsupportedFormatError(
            f"PNG colour type {color} is not supported; only 1-bit or grayscale PNG is accepted"
        )
    idat_at = next((off for t, _, off in chunks if t == b"IDAT"), None)
    if idat_at is None:
        raise DecodeError("PNG has no IDAT chunk", len(data))
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            arr = np.asarray(im)
    except (OSError, ValueError, SyntaxError) as exc:
        raise DecodeError(f"PNG image data could not be decoded: {exc}", idat_at) from exc
    if arr.dtype == bool:
        return np.where(arr, 255, 0).astype(np.uint8)
    if depth == 16:
        return (arr.astype(np.uint32) >> 8).astype(np.uint8)
    if depth < 8:
        # Pillow expands low bit depths to 0..255 already for mode "L"; guard anyway.
        top = (1 << depth) - 1
        if arr.max(initial=0) <= top:
            return (arr.astype(np.uint32) * 255 // top).astype(np.uint8)
    return arr.astype(np.uint8)


def sniff_format(data: bytes) -> str:
    if data.startswith(PNG_SIGNATURE):
        return "png"
    if data[:2] in (b"P1", b"P4"):
        return "pbm"
    raise UnsupportedFormatError("unrecognised image format (expected PBM P1/P4 or PNG)")


def load_image(data: bytes, format: str | None = None, threshold: int = 127, invert: bool = False) -> BinaryImage:
    """Decode PBM (P1/P4) or grayscale/1-bit PNG bytes into a BinaryImage.

    PBM set bits are foreground. PNG pixels brighter than ``threshold`` are
    foreground. ``invert`` swaps foreground and background afterwards.
    """
    if not 0 <= threshold <= 255:
        raise InvalidParameterError(f"threshold must lie in [0, 255], got {threshold}")
    fmt = (format or sniff_format(data)).lower()
    if fmt == "pbm":
        if data[:2] not in (b"P1", b"P4"):
            raise DecodeError(f"bad PBM magic {data[:2]!r}", 0)
        mask = _decode_pbm(data)
    elif fmt == "png":
        if not data.startswith(PNG_SIGNATURE):
            raise DecodeError("bad PNG signature", 0)
        mask = _decode_png(data) > threshold
    else:
        raise UnsupportedFormatError(f"unsupported image format {format!r}")
    if invert:
        mask = ~mask
    return BinaryImage(mask)


def read_image(path, threshold=127, invert=False) -> BinaryImage:
    with open(path, "rb") as fh:
        return load_image(fh.read(), threshold=threshold, invert=invert)


def encode_pbm(img: BinaryImage) -> bytes:
    """Binary PBM (P4); foreground pixels become set bits."""
    header = f"P4\n{img.width} {img.height}\n".encode("ascii")
    return header + np.packbits(img.mask, axis=1).tobytes()


def encode_png(img: BinaryImage) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(img.mask).save(buf, format="PNG")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# components


def label_components(img: BinaryImage, connectivity: int = 8) -> list[Component]:
    """Connected foreground components in raster order of their first pixel.

    Boundary pixels are those with at least one background 4-neighbour,
    whatever the component connectivity; off-image cells are background.
    """
    if connectivity not in (4, 8):
        raise InvalidParameterError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = img.mask
    labels, n = ndimage.label(mask, structure=_CROSS if connectivity == 4 else _SQUARE)
    if n == 0:
        return []
    interior = ndimage.binary_erosion(mask, structure=_CROSS, border_value=0)
    edge = mask & ~interior
    h, w = mask.shape
    comps = []
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        sub = labels[sl] == lab
        ys, xs = np.nonzero(sub)
        is_b = edge[sl][sub]
        pix = np.column_stack((xs + sl[1].start, ys + sl[0].start)).astype(np.intp)
        xmin, xmax = sl[1].start, sl[1].stop - 1
        ymin, ymax = sl[0].start, sl[0].stop - 1
        comps.append(
            Component(
                id=lab,
                pixels=pix,
                boundary=pix[is_b],
                bbox=(xmin, xmax, ymin, ymax),
                touches_border=xmin == 0 or ymin == 0 or xmax == w - 1 or ymax == h - 1,
            )
        )
    return comps


def filter_components(comps, min_pixels: int = 1, discard_border: bool = False) -> list[Component]:
    if min_pixels < 1:
        raise InvalidParameterError(f"min_pixels must be >= 1, got {min_pixels}")
    return [c for c in comps if c.area >= min_pixels and not (discard_border and c.touches_border)]


def render_components(comps, width, height) -> BinaryImage:
    mask = np.zeros((height, width), dtype=bool)
    for c in comps:
        mask[c.pixels[:, 1], c.pixels[:, 0]] = True
    return BinaryImage(mask)


def components_csv(comps) -> str:
    """Debug dump: one ``id,x,y,is_boundary`` row per pixel."""
    lines = ["id,x,y,is_boundary"]
    for c in comps:
        bset = {(int(x), int(y)) for x, y in c.boundary}
        for x, y in c.pixels:
            lines.append(f"{c.id},{x},{y},{int((int(x), int(y)) in bset)}")
    return "\n".join(lines) + "\n"
