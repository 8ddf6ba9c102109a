"""Seeded generators for the illustrative random-set models.

Every generator is a pure function of its parameters, the window and an
integer seed. Sub-steps draw from derived streams ``(seed, tag)`` so that,
for example, the reduced Boolean model shares its underlying Boolean
realisation with ``simulate_boolean`` under the same seed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .descriptors import perimeter_area_ratio
from .errors import InsufficientDataError, InvalidParameterError
from .imagery import BinaryImage, filter_components, label_components, render_components
from .permtest import rng_stream

log = logging.getLogger(__name__)

_GERM_STREAM = 0
_THIN_STREAM = 1
_PLACE_STREAM = 2

RSA_ATTEMPTS = 200


@dataclass(frozen=True)
class Window:
    width: int = 400
    height: int = 400

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidParameterError(f"window must be at least 1x1, got {self.width}x{self.height}")


@dataclass(frozen=True)
class BooleanParams:
    """Poisson germs with uniform disc radii on ``[r_min, r_max]`` (constant when equal).

    The defaults put roughly 60-70 components of 3-20 px radius in a
    400 x 400 window.
    """

    intensity: float = 7e-4
    r_min: float = 3.0
    r_max: float = 20.0

    def __post_init__(self):
        if not self.intensity > 0:
            raise InvalidParameterError(f"intensity must be positive, got {self.intensity}")
        if self.r_min < 1 or self.r_min > self.r_max:
            raise InvalidParameterError(f"need 1 <= r_min <= r_max, got [{self.r_min}, {self.r_max}]")

    @classmethod
    def constant(cls, intensity, r0):
        return cls(intensity, r0, r0)


@dataclass(frozen=True)
class EllipseParams:
    """Poisson germs carrying ellipses with uniform semi-axes; ``orientation=None`` means uniform angle."""

    intensity: float = 5e-4
    semi_major: tuple[float, float] = (8.0, 20.0)
    semi_minor: tuple[float, float] = (3.0, 8.0)
    orientation: float | None = None

    def __post_init__(self):
        if not self.intensity > 0:
            raise InvalidParameterError(f"intensity must be positive, got {self.intensity}")
        for lo, hi in (self.semi_major, self.semi_minor):
            if lo < 1 or lo > hi:
                raise InvalidParameterError(f"semi-axis range must satisfy 1 <= lo <= hi, got ({lo}, {hi})")


class EmpiricalLaw:
    """Uniform draws from a fixed multiset of observed values."""

    def __init__(self, values):
        vals = np.sort(np.asarray(values, dtype=float).ravel())
        if vals.size == 0:
            raise InsufficientDataError("empirical law needs at least one value")
        vals.setflags(write=False)
        self.values = vals

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return f"EmpiricalLaw(n={len(self.values)}, min={self.values[0]:.4g}, max={self.values[-1]:.4g})"

    def sample(self, rng: np.random.Generator, size=None):
        return rng.choice(self.values, size=size)

    def mean(self) -> float:
        return float(self.values.mean())


def _draw_count(count_law, rng) -> int:
    if isinstance(count_law, EmpiricalLaw):
        return int(round(count_law.sample(rng)))
    if count_law < 0:
        raise InvalidParameterError(f"mean count must be nonnegative, got {count_law}")
    return int(rng.poisson(count_law))


# ---------------------------------------------------------------------------
# Boolean models


def boolean_germs(p: BooleanParams, w: Window, rng: np.random.Generator):
    """Germ centres and radii in the window dilated by ``r_max``."""
    m = p.r_max
    area = (w.width + 2 * m) * (w.height + 2 * m)
    n = rng.poisson(p.intensity * area)
    xs = rng.uniform(-m, w.width + m, size=n)
    ys = rng.uniform(-m, w.height + m, size=n)
    radii = np.full(n, float(p.r_min)) if p.r_min == p.r_max else rng.uniform(p.r_min, p.r_max, size=n)
    return np.column_stack((xs, ys)), radii


def rasterize_discs(centres, radii, w: Window) -> np.ndarray:
    """Union of discs; a pixel is covered when its centre lies in a disc."""
    mask = np.zeros((w.height, w.width), dtype=bool)
    for (cx, cy), rad in zip(centres, radii):
        x0, x1 = max(math.ceil(cx - rad), 0), min(math.floor(cx + rad), w.width - 1)
        y0, y1 = max(math.ceil(cy - rad), 0), min(math.floor(cy + rad), w.height - 1)
        if x0 > x1 or y0 > y1:
            continue
        yy, xx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
        mask[y0:y1 + 1, x0:x1 + 1] |= (xx - cx) ** 2 + (yy - cy) ** 2 <= rad * rad
    return mask


def simulate_boolean(p: BooleanParams = BooleanParams(), w: Window = Window(), seed: int = 0) -> BinaryImage:
    centres, radii = boolean_germs(p, w, rng_stream(seed, _GERM_STREAM))
    return BinaryImage(rasterize_discs(centres, radii, w))


def simulate_reduced_boolean(p: BooleanParams = BooleanParams(), w: Window = Window(), seed: int = 0,
                             p_delete: float = 0.5, connectivity: int = 8) -> BinaryImage:
    """Boolean realisation with each connected component deleted independently."""
    if not 0.0 <= p_delete <= 1.0:
        raise InvalidParameterError(f"deletion probability must lie in [0, 1], got {p_delete}")
    img = simulate_boolean(p, w, seed)
    comps = label_components(img, connectivity)
    keep = rng_stream(seed, _THIN_STREAM).random(len(comps)) >= p_delete
    return render_components([c for c, k in zip(comps, keep) if k], w.width, w.height)


def empirical_ratio_distribution(realisations, connectivity=8, min_pixels=1, discard_border=False) -> EmpiricalLaw:
    """Pooled perimeter/area ratios of every retained component."""
    ratios = [perimeter_area_ratio(c)
              for img in realisations
              for c in filter_components(label_components(img, connectivity), min_pixels, discard_border)]
    if not ratios:
        raise InsufficientDataError("realisations contain no components")
    return EmpiricalLaw(ratios)


def component_count_law(realisations, connectivity=8, min_pixels=1, discard_border=False) -> EmpiricalLaw:
    return EmpiricalLaw([len(filter_components(label_components(img, connectivity), min_pixels, discard_border))
                         for img in realisations])


# ---------------------------------------------------------------------------
# disjoint boxes by random sequential adsorption


def square_side(ratio: float) -> int:
    """Side ``a >= 2`` whose square has boundary/area ratio ``(4a-4)/a**2`` closest to ``ratio``."""
    if not ratio > 0:
        raise InvalidParameterError(f"ratio must be positive, got {ratio}")
    if ratio >= 1.0:
        return 2
    guess = 2.0 * (1.0 + math.sqrt(1.0 - ratio)) / ratio
    cands = {max(2, int(math.floor(guess)) + d) for d in (-1, 0, 1, 2)}
    return min(sorted(cands), key=lambda a: abs((4 * a - 4) / (a * a) - ratio))


def square_perimeter_law(ratio_law: EmpiricalLaw) -> EmpiricalLaw:
    """Boundary-pixel perimeters ``4a - 4`` of the squares matched to each ratio."""
    return EmpiricalLaw([4 * square_side(r) - 4 for r in ratio_law.values])


def rsa_place(sizes, w: Window, rng: np.random.Generator, attempts: int = RSA_ATTEMPTS):
    """Place ``(width, height)`` boxes without overlap or 8-contact.

    Boxes are tried in the given order with up to ``attempts`` uniform
    proposals each; a box that finds no room is skipped. Returns the list of
    placed ``(x, y, width, height)`` and the number skipped.
    """
    blocked = np.zeros((w.height, w.width), dtype=bool)
    placed = []
    skipped = 0
    for bw, bh in sizes:
        if bw > w.width or bh > w.height:
            skipped += 1
            continue
        for _ in range(attempts):
            x = int(rng.integers(0, w.width - bw + 1))
            y = int(rng.integers(0, w.height - bh + 1))
            if not blocked[y:y + bh, x:x + bw].any():
                blocked[max(y - 1, 0):y + bh + 1, max(x - 1, 0):x + bw + 1] = True
                placed.append((x, y, bw, bh))
                break
        else:
            skipped += 1
    if skipped:
        log.info("RSA skipped %d of %d boxes", skipped, len(sizes))
    return placed, skipped


def render_boxes(boxes, w: Window) -> BinaryImage:
    mask = np.zeros((w.height, w.width), dtype=bool)
    for x, y, bw, bh in boxes:
        mask[y:y + bh, x:x + bw] = True
    return BinaryImage(mask)


def square_boxes(law: EmpiricalLaw, count_law, w: Window, seed: int):
    rng = rng_stream(seed, _PLACE_STREAM)
    n = _draw_count(count_law, rng)
    sides = sorted((square_side(r) for r in law.sample(rng, n)), reverse=True)
    return rsa_place([(a, a) for a in sides], w, rng)[0]


def simulate_squares(law: EmpiricalLaw, count_law, w: Window = Window(), seed: int = 0) -> BinaryImage:
    """Disjoint squares whose sides match ratios drawn from ``law``.

    ``count_law`` is a Poisson mean or an EmpiricalLaw of counts. Squares are
    placed largest first so that skipped placements do not bias the ratio law
    towards small squares.
    """
    return render_boxes(square_boxes(law, count_law, w, seed), w)


def rectangle_side(perimeter: float, fixed_side: int = 4) -> int | None:
    """Free side ``b`` with ``2*fixed + 2*b - 4 == perimeter``; None when infeasible."""
    twice_b = perimeter - 2 * fixed_side + 4
    if perimeter < 2 * (fixed_side + 1) or twice_b % 2:
        return None
    return int(twice_b // 2)


def rectangle_boxes(perimeter_law: EmpiricalLaw, count_law, w: Window, seed: int, fixed_side: int = 4):
    """Placed boxes plus the orientation flag drawn for every feasible rectangle."""
    rng = rng_stream(seed, _PLACE_STREAM)
    n = _draw_count(count_law, rng)
    sizes = []
    flips = []
    for per in perimeter_law.sample(rng, n):
        b = rectangle_side(per, fixed_side)
        flip = bool(rng.random() < 0.5)
        if b is None:
            log.info("skipping infeasible rectangle perimeter %s", per)
            continue
        flips.append(flip)
        sizes.append((b, fixed_side) if flip else (fixed_side, b))
    sizes.sort(key=lambda s: s[0] * s[1], reverse=True)
    return rsa_place(sizes, w, rng)[0], flips


def simulate_rectangles(perimeter_law: EmpiricalLaw, count_law, w: Window = Window(), seed: int = 0,
                        fixed_side: int = 4) -> BinaryImage:
    """Disjoint ``fixed_side x b`` rectangles with perimeters drawn from ``perimeter_law``."""
    return render_boxes(rectangle_boxes(perimeter_law, count_law, w, seed, fixed_side)[0], w)


# ---------------------------------------------------------------------------
# ellipses


def rasterize_ellipse(mask, cx, cy, a, b, theta):
    """OR a filled ellipse (semi-axes ``a``, ``b``, angle ``theta``) into ``mask`` in place."""
    h, w = mask.shape
    ext = max(a, b)
    x0, x1 = max(math.ceil(cx - ext), 0), min(math.floor(cx + ext), w - 1)
    y0, y1 = max(math.ceil(cy - ext), 0), min(math.floor(cy + ext), h - 1)
    if x0 > x1 or y0 > y1:
        return mask
    yy, xx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    dx = xx - cx
    dy = yy - cy
    if a == b:
        inside = dx * dx + dy * dy <= a * a
    else:
        c, s = math.cos(theta), math.sin(theta)
        u = (dx * c + dy * s) / a
        v = (-dx * s + dy * c) / b
        inside = u * u + v * v <= 1.0
    mask[y0:y1 + 1, x0:x1 + 1] |= inside
    return mask


def simulate_ellipses(p: EllipseParams = EllipseParams(), w: Window = Window(), seed: int = 0) -> BinaryImage:
    rng = rng_stream(seed, _GERM_STREAM)
    m = max(p.semi_major[1], p.semi_minor[1])
    n = rng.poisson(p.intensity * (w.width + 2 * m) * (w.height + 2 * m))
    xs = rng.uniform(-m, w.width + m, size=n)
    ys = rng.uniform(-m, w.height + m, size=n)
    a = rng.uniform(*p.semi_major, size=n)
    b = rng.uniform(*p.semi_minor, size=n)
    theta = rng.uniform(0.0, math.pi, size=n) if p.orientation is None else np.full(n, float(p.orientation))
    mask = np.zeros((w.height, w.width), dtype=bool)
    for i in range(n):
        rasterize_ellipse(mask, xs[i], ys[i], a[i], b[i], theta[i])
    return BinaryImage(mask)
