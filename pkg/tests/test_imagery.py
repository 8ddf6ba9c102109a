import io
import zlib
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from randset import BinaryImage, filter_components, label_components, load_image
from randset.errors import DecodeError, InvalidParameterError, UnsupportedFormatError
from randset.imagery import components_csv, encode_pbm, encode_png, render_components, sniff_format

from conftest import block_image, image_from_rows

masks = st.integers(1, 12).flatmap(
    lambda h: st.integers(1, 12).flatmap(
        lambda w: st.lists(st.booleans(), min_size=h * w, max_size=h * w).map(
            lambda bits: np.array(bits, dtype=bool).reshape(h, w))))


# --- BinaryImage -----------------------------------------------------------

def test_image_is_read_only_copy():
    src = np.zeros((3, 4), dtype=bool)
    img = BinaryImage(src)
    src[0, 0] = True
    assert not img.mask[0, 0]
    with pytest.raises(ValueError):
        img.mask[0, 0] = True
    assert (img.width, img.height) == (4, 3)


def test_off_image_queries_are_background():
    img = BinaryImage(np.ones((2, 2), dtype=bool))
    assert img.is_foreground(1, 1)
    for x, y in [(-1, 0), (0, -1), (2, 0), (0, 2), (100, 100)]:
        assert not img.is_foreground(x, y)


@pytest.mark.parametrize("shape", [(0, 3), (3, 0), (3,)])
def test_degenerate_shapes_rejected(shape):
    with pytest.raises(InvalidParameterError):
        BinaryImage(np.zeros(shape, dtype=bool))


# --- decoding --------------------------------------------------------------

def test_p4_all_set_2x2():
    img = load_image(b"P4\n2 2\n\xc0\xc0")
    assert img.foreground_count == 4


def test_p1_ascii_with_comments():
    img = load_image(b"P1\n# a comment\n3 2\n1 0 1\n0 1 0\n")
    assert img.mask.tolist() == [[True, False, True], [False, True, False]]


def test_all_background_400():
    img = load_image(encode_pbm(BinaryImage.empty(400, 400)))
    assert img.foreground_count == 0 and img.width == 400


def test_grayscale_threshold():
    arr = np.array([[0, 255], [255, 0]], dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    img = load_image(buf.getvalue(), threshold=127)
    assert img.mask.tolist() == [[False, True], [True, False]]
    assert load_image(buf.getvalue(), invert=True).mask.tolist() == [[True, False], [False, True]]


def test_one_bit_png():
    mask = np.array([[1, 0, 1], [0, 0, 1]], dtype=bool)
    buf = io.BytesIO()
    Image.fromarray(mask).convert("1").save(buf, format="PNG")
    assert load_image(buf.getvalue()).mask.tolist() == mask.tolist()


@given(masks)
@settings(max_examples=40, deadline=None)
def test_round_trips(mask):
    img = BinaryImage(mask)
    assert load_image(encode_pbm(img)) == img
    assert load_image(encode_png(img)) == img


def test_truncated_pbm_names_offset():
    with pytest.raises(DecodeError) as ei:
        load_image(b"P4\n16 2\n\xff\xff\xff")
    assert ei.value.offset == 11  # where the data ran out
    assert "offset" in str(ei.value)


def test_bad_pbm_header_names_offset():
    with pytest.raises(DecodeError) as ei:
        load_image(b"P1\n3 x\n")
    assert ei.value.offset == 5


def test_png_crc_error_names_offset():
    buf = io.BytesIO()
    Image.fromarray(np.zeros((2, 2), dtype=np.uint8), mode="L").save(buf, format="PNG")
    data = bytearray(buf.getvalue())
    data[29] ^= 0xFF  # inside the IHDR CRC
    with pytest.raises(DecodeError) as ei:
        load_image(bytes(data))
    assert ei.value.offset == 8


def test_colour_png_unsupported():
    buf = io.BytesIO()
    Image.new("RGB", (2, 2)).save(buf, format="PNG")
    with pytest.raises(UnsupportedFormatError):
        load_image(buf.getvalue())


def test_unknown_format():
    with pytest.raises(UnsupportedFormatError):
        sniff_format(b"GIF89a")
    with pytest.raises(UnsupportedFormatError):
        load_image(b"P4\n1 1\n\x80", format="tiff")


# --- labeling --------------------------------------------------------------

def test_diagonal_pixels_connectivity():
    img = image_from_rows("#.", ".#")
    assert len(label_components(img, 8)) == 1
    assert len(label_components(img, 4)) == 2


def test_solid_3x3():
    (c,) = label_components(block_image(7, 7, 2, 2, 3, 3))
    assert c.area == 9 and c.perimeter == 8
    assert (2 + 1, 2 + 1) not in {tuple(p) for p in c.boundary}
    assert c.bbox == (2, 4, 2, 4) and not c.touches_border


def test_empty_image_has_no_components():
    assert label_components(BinaryImage.empty(5, 5)) == []


def test_invalid_connectivity():
    with pytest.raises(InvalidParameterError):
        label_components(BinaryImage.empty(2, 2), 6)


def test_off_image_is_background_for_boundary():
    (c,) = label_components(BinaryImage(np.ones((4, 4), dtype=bool)))
    assert c.perimeter == 12 and c.touches_border


@given(masks, st.sampled_from([4, 8]))
@settings(max_examples=60, deadline=None)
def test_component_invariants(mask, conn):
    img = BinaryImage(mask)
    comps = label_components(img, conn)
    assert sum(c.area for c in comps) == img.foreground_count
    seen = set()
    h, w = mask.shape
    for c in comps:
        pix = {tuple(p) for p in c.pixels}
        assert pix.isdisjoint(seen)
        seen |= pix
        bnd = {tuple(p) for p in c.boundary}
        assert bnd and bnd <= pix
        for x, y in pix:
            has_bg = any(not img.is_foreground(x + dx, y + dy) for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)))
            assert ((x, y) in bnd) == has_bg
        on_edge = any(x in (0, w - 1) or y in (0, h - 1) for x, y in pix)
        assert c.touches_border == on_edge
        # rendering alone reproduces the component exactly
        (again,) = label_components(render_components([c], w, h), conn)
        assert {tuple(p) for p in again.pixels} == pix
        assert {tuple(p) for p in again.boundary} == bnd


@given(masks, st.integers(0, 5), st.integers(0, 5))
@settings(max_examples=40, deadline=None)
def test_translation_invariance(mask, dx, dy):
    h, w = mask.shape
    big = np.zeros((h + 12, w + 12), dtype=bool)
    big[1:1 + h, 1:1 + w] = mask
    moved = np.zeros_like(big)
    moved[1 + dy:1 + dy + h, 1 + dx:1 + dx + w] = mask
    a = label_components(BinaryImage(big))
    b = label_components(BinaryImage(moved))
    key = lambda comps, sx, sy: sorted(sorted((x - sx, y - sy) for x, y in c.pixels.tolist()) for c in comps)
    assert key(a, 0, 0) == key(b, dx, dy)


# --- filtering -------------------------------------------------------------

def test_filter_min_pixels_and_order():
    img = image_from_rows(
        ".......",
        ".#.###.",
        "...###.",
        "...###.",
        ".......",
    )
    comps = label_components(img)
    assert [c.area for c in comps] == [1, 9]
    assert [c.area for c in filter_components(comps, min_pixels=2)] == [9]
    assert filter_components(comps, discard_border=True) == comps


def test_filter_discards_border():
    img = image_from_rows("##...", ".....", "..#..", ".....")
    comps = label_components(img)
    kept = filter_components(comps, discard_border=True)
    assert [c.area for c in kept] == [1]


def test_components_csv():
    text = components_csv(label_components(image_from_rows("#.", "..")))
    assert text == "id,x,y,is_boundary\n1,0,0,1\n"
