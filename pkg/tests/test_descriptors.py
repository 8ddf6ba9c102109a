import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randset import BinaryImage, label_components
from randset.descriptors import (RADIUS_PRESETS, boundary_occupancies, curvature_estimate, describe_component,
                                 describe_components, describe_image, descriptors_csv, disc_mask, occupancy,
                                 perimeter_area_ratio)
from randset.descriptors import testing_function as make_tf
from randset.errors import EmptySampleError, InvalidParameterError

from conftest import block_image, disc_image


def brute_occupancy(fg, z, r):
    """Independent oracle: loop over the square and test each offset."""
    zx, zy = z
    hit = total = 0
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dx * dx + dy * dy <= r * r:
                total += 1
                hit += (zx + dx, zy + dy) in fg
    return hit / total


def fg_set(img):
    ys, xs = np.nonzero(img.mask)
    return set(zip(xs.tolist(), ys.tolist()))


# --- disc mask -------------------------------------------------------------

@pytest.mark.parametrize("r,count", [(1, 5), (3, 29), (5, 81)])
def test_disc_mask_counts(r, count):
    assert disc_mask(r).pixel_count == count


def test_disc_mask_r1_offsets():
    assert sorted(map(tuple, disc_mask(1).offsets.tolist())) == [(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)]


@pytest.mark.parametrize("r", range(1, 13))
def test_disc_mask_symmetry_and_lattice_count(r):
    offs = {tuple(o) for o in disc_mask(r).offsets.tolist()}
    assert (0, 0) in offs
    assert offs == {(-x, -y) for x, y in offs} == {(y, x) for x, y in offs}
    gauss = sum(1 for x in range(-r, r + 1) for y in range(-r, r + 1) if x * x + y * y <= r * r)
    assert len(offs) == gauss


@pytest.mark.parametrize("r", [0, -1, 2.5])
def test_disc_mask_invalid(r):
    with pytest.raises(InvalidParameterError):
        disc_mask(r)


def test_radius_presets():
    assert RADIUS_PRESETS == (3, 5)


# --- occupancy -------------------------------------------------------------

def test_occupancy_deep_interior():
    img = block_image(40, 40, 5, 5, 30, 30)
    assert occupancy(img, (20, 20), disc_mask(5)) == 1.0


@pytest.mark.parametrize("r,expected", [(5, 46 / 81), (3, 18 / 29), (1, 4 / 5)])
def test_half_plane_edge(r, expected):
    # The edge row itself is foreground, so the count is half the disc plus
    # the whole centre row: 46 of 81 offsets for r=5.
    img = block_image(30, 30, 0, 15, 30, 15)
    z = (15, 15)
    assert occupancy(img, z, disc_mask(r)) == pytest.approx(expected, abs=1e-15)
    assert occupancy(img, z, disc_mask(r)) == brute_occupancy(fg_set(img), z, r)


def test_isolated_pixel_r1():
    img = block_image(5, 5, 2, 2, 1, 1)
    assert occupancy(img, (2, 2), disc_mask(1)) == pytest.approx(0.2)


def test_off_image_counts_as_background():
    img = BinaryImage(np.ones((3, 3), dtype=bool))
    assert occupancy(img, (0, 0), disc_mask(1)) == pytest.approx(3 / 5)


def test_restrict_to_ignores_neighbours():
    img = block_image(20, 20, 5, 5, 3, 3)
    mask = img.mask.copy()
    mask[5:8, 9] = True  # second component two pixels to the right
    img2 = BinaryImage(mask)
    comps = label_components(img2)
    own = comps[0]
    z = (7, 6)
    assert occupancy(img2, z, disc_mask(3), restrict_to=own) == occupancy(img, z, disc_mask(3))
    assert occupancy(img2, z, disc_mask(3)) > occupancy(img, z, disc_mask(3))


random_masks = st.integers(3, 14).flatmap(
    lambda n: st.lists(st.booleans(), min_size=n * n, max_size=n * n).map(
        lambda b: np.array(b, dtype=bool).reshape(n, n)))


@given(random_masks, st.integers(1, 5), st.data())
@settings(max_examples=60, deadline=None)
def test_occupancy_matches_brute_force(mask, r, data):
    img = BinaryImage(mask)
    n = mask.shape[0]
    z = (data.draw(st.integers(0, n - 1)), data.draw(st.integers(0, n - 1)))
    assert occupancy(img, z, disc_mask(r)) == pytest.approx(brute_occupancy(fg_set(img), z, r), abs=1e-15)


@given(random_masks, st.integers(1, 4), st.integers(0, 6), st.integers(0, 6))
@settings(max_examples=40, deadline=None)
def test_occupancy_translation_invariant(mask, r, dx, dy):
    n = mask.shape[0]
    a = np.zeros((n + 20, n + 20), dtype=bool)
    a[7:7 + n, 7:7 + n] = mask
    b = np.zeros_like(a)
    b[7 + dy:7 + dy + n, 7 + dx:7 + dx + n] = mask
    z = (7 + n // 2, 7 + n // 2)
    m = disc_mask(r)
    assert occupancy(BinaryImage(a), z, m) == occupancy(BinaryImage(b), (z[0] + dx, z[1] + dy), m)


@given(random_masks, st.integers(1, 5), st.data())
@settings(max_examples=40, deadline=None)
def test_occupancy_complement_duality(mask, r, data):
    # duality holds where the disc stays on the image (off-image is background in both)
    n = mask.shape[0]
    big = np.zeros((n + 2 * r, n + 2 * r), dtype=bool)
    big[r:r + n, r:r + n] = mask
    img = BinaryImage(big)
    z = (r + data.draw(st.integers(0, n - 1)), r + data.draw(st.integers(0, n - 1)))
    inner = BinaryImage(~big)
    assert occupancy(img, z, disc_mask(r)) + occupancy(inner, z, disc_mask(r)) == pytest.approx(1.0, abs=1e-15)


@given(random_masks, st.integers(1, 5), st.booleans())
@settings(max_examples=40, deadline=None)
def test_boundary_occupancies_match_pointwise(mask, r, restrict):
    img = BinaryImage(mask)
    m = disc_mask(r)
    for comp in label_components(img):
        Ks = boundary_occupancies(img, comp, m, restrict=restrict)
        ref = [occupancy(img, tuple(z), m, restrict_to=comp if restrict else None) for z in comp.boundary.tolist()]
        assert Ks.tolist() == ref


# --- curvature -------------------------------------------------------------

@pytest.mark.parametrize("K,r,expected", [(0.5, 3, 0.0), (0.5, 7, 0.0), (1.0, 3, math.pi / 2), (0.0, 5, -3 * math.pi / 10)])
def test_curvature_estimate(K, r, expected):
    assert curvature_estimate(K, r) == pytest.approx(expected, abs=1e-15)


def test_curvature_estimate_array_and_invalid():
    np.testing.assert_allclose(curvature_estimate([0.5, 1.0], 3), [0.0, math.pi / 2])
    with pytest.raises(InvalidParameterError):
        curvature_estimate(0.5, 0)


def _disc_estimate(R, r):
    img = disc_image(R)
    (c,) = label_components(img)
    return curvature_estimate(boundary_occupancies(img, c, disc_mask(r)).mean(), r)


@pytest.mark.parametrize("R", [50, 80])
def test_disc_consistency_r5(R):
    r = 5
    est = _disc_estimate(R, r)
    assert abs(est - 1 / R) <= 0.5 / R + 0.05 * (3 * math.pi / r)


@pytest.mark.xfail(strict=True, reason="at r=3 the pixel-counting bias (about 0.25/px) exceeds the allowance")
def test_disc_consistency_r3():
    r, R = 3, 30
    est = _disc_estimate(R, r)
    assert abs(est - 1 / R) <= 0.5 / R + 0.05 * (3 * math.pi / r)


# --- testing function ------------------------------------------------------

def test_testing_function_single_bin():
    tf = make_tf([0.5] * 10, 10)
    assert tf.values[5] == 1.0 and tf.values.sum() == 1.0 and tf.support_size == 10


def test_testing_function_closed_last_bin():
    assert make_tf([1.0, 1.0], 10).values[9] == 1.0


def test_testing_function_direct_binning():
    tf = make_tf([0.05, 0.15, 0.25, 0.35], 10)
    assert tf.values.tolist() == [0.25, 0.25, 0.25, 0.25, 0, 0, 0, 0, 0, 0]


def test_testing_function_bin_edges_exact():
    # k/l exactly must open bin k+1 even where k/l is not representable
    for l in (3, 7, 10):
        for k in range(l):
            tf = make_tf([k / l], l)
            assert tf.values[k] == 1.0, (k, l)


def test_testing_function_errors():
    with pytest.raises(EmptySampleError):
        make_tf([], 10)
    with pytest.raises(InvalidParameterError):
        make_tf([0.5], 1)
    with pytest.raises(InvalidParameterError):
        make_tf([1.5], 10)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.integers(2, 20), st.integers(1, 4))
@settings(max_examples=100, deadline=None)
def test_testing_function_properties(Ks, l, reps):
    tf = make_tf(Ks, l)
    assert abs(tf.values.sum() - 1.0) <= 1e-12 and (tf.values >= 0).all()
    np.testing.assert_allclose(make_tf(Ks * reps, l).values, tf.values, rtol=0, atol=1e-15)
    for K in Ks:
        k = min(int(math.floor(K * l)), l - 1)
        if K < 1 and not (k / l <= K < (k + 1) / l):
            continue  # float rounding at the edge, covered by the exact-edge test
        assert tf.values[k] > 0


# --- ratio and descriptors -------------------------------------------------

@pytest.mark.parametrize("side,ratio", [(1, 1.0), (2, 1.0), (3, 8 / 9)])
def test_perimeter_area_ratio(side, ratio):
    (c,) = label_components(block_image(side + 4, side + 4, 2, 2, side, side))
    assert perimeter_area_ratio(c) == pytest.approx(ratio)


def test_describe_3x3_square_r3():
    img = block_image(9, 9, 3, 3, 3, 3)
    (c,) = label_components(img)
    d = describe_component(img, c, r=3, l=10, restrict=True)
    assert d.ratio == pytest.approx(8 / 9)
    # the whole 3x3 block lies inside the radius-3 disc of every boundary pixel
    fg = fg_set(img)
    Ks = [brute_occupancy(fg, tuple(z), 3) for z in c.boundary.tolist()]
    assert Ks == [9 / 29] * 8
    assert d.curve == make_tf(Ks, 10)
    assert d.curve.values[3] == 1.0


def test_describe_isolated_pixel_r1():
    img = block_image(5, 5, 2, 2, 1, 1)
    (c,) = label_components(img)
    d = describe_component(img, c, r=1, l=10)
    # K = 0.2 opens the bin [0.2, 0.3): zero-based index 2
    assert d.ratio == 1.0 and d.curve.values[2] == 1.0


def test_describe_deterministic():
    img = disc_image(9)
    (c,) = label_components(img)
    assert describe_component(img, c) == describe_component(img, c)


def test_restrict_independent_of_other_components():
    base = block_image(40, 40, 10, 10, 8, 8)
    mask = base.mask.copy()
    mask[10:18, 20:24] = True
    other = BinaryImage(mask)
    (c0,) = label_components(base)
    c1 = label_components(other)[0]
    assert describe_component(base, c0, r=5) == describe_component(other, c1, r=5)
    assert describe_component(base, c0, r=5, restrict=False) != describe_component(other, c1, r=5, restrict=False)


def test_describe_components_matches_single():
    img = BinaryImage(disc_image(6).mask | np.roll(disc_image(6).mask, 0, axis=0))
    comps = label_components(img)
    for restrict in (True, False):
        many = describe_components(img, comps, 3, 8, restrict)
        assert many == [describe_component(img, c, 3, 8, restrict) for c in comps]


def test_describe_image_filters():
    mask = np.zeros((30, 30), dtype=bool)
    mask[0:4, 0:4] = True   # touches the border
    mask[10:15, 10:15] = True
    mask[20, 20] = True     # one pixel
    img = BinaryImage(mask)
    assert len(describe_image(img)) == 3
    assert len(describe_image(img, discard_border=True)) == 2
    assert len(describe_image(img, discard_border=True, min_pixels=2)) == 1


def test_descriptors_csv():
    img = block_image(9, 9, 3, 3, 3, 3)
    d = describe_image(img, r=3, l=4)
    text = descriptors_csv(d)
    lines = text.split("\n")
    assert lines[0] == "component_id,ratio,t_1,t_2,t_3,t_4,n_boundary"
    assert lines[1] == f"1,{8 / 9!r},0.0,1.0,0.0,0.0,8"
    assert text.endswith("\n") and "\r" not in text
    assert descriptors_csv([], bins=3) == "component_id,ratio,t_1,t_2,t_3,n_boundary\n"
