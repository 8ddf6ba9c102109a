"""Per-component shape descriptors.

For each boundary pixel the fraction of a discrete disc covered by the set
(the occupancy) is a linear proxy for the local boundary curvature. The
histogram of occupancies over a component's boundary is its testing
function; together with the boundary-to-area pixel ratio it forms the
component's descriptor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .errors import EmptySampleError, InvalidParameterError
from .imagery import BinaryImage, Component, PixelCoord, filter_components, label_components

DEFAULT_BINS = 10
DEFAULT_RADIUS = 5
RADIUS_PRESETS = (3, 5)


@dataclass(frozen=True, eq=False)
class DiscMask:
    radius: int
    offsets: np.ndarray  # (m, 2) intp, (dx, dy)

    @property
    def pixel_count(self) -> int:
        return len(self.offsets)


@lru_cache(maxsize=None)
def disc_mask(r: int) -> DiscMask:
    """Integer offsets of the closed Euclidean disc of radius ``r``."""
    if int(r) != r or r < 1:
        raise InvalidParameterError(f"disc radius must be an integer >= 1, got {r!r}")
    r = int(r)
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    inside = dx * dx + dy * dy <= r * r
    offsets = np.ascontiguousarray(np.column_stack((dx[inside], dy[inside])), dtype=np.intp)
    offsets.setflags(write=False)
    return DiscMask(radius=r, offsets=offsets)


def _occupancy_counts(canvas, points, mask, kernels=None):
    k = kernels or _backend.kernels
    return k.disc_counts(
        np.ascontiguousarray(canvas, dtype=np.uint8),
        np.ascontiguousarray(points, dtype=np.intp).reshape(-1, 2),
        mask.offsets,
    )


def boundary_occupancies(img: BinaryImage, comp: Component, mask: DiscMask, restrict: bool = True,
                         kernels=None) -> np.ndarray:
    """Occupancy at every boundary pixel of ``comp``, in boundary order.

    With ``restrict`` only the component's own pixels count as covered;
    otherwise any foreground pixel of ``img`` does.
    """
    r = mask.radius
    if restrict:
        canvas, (ox, oy) = comp.local_mask(pad=r)
    else:
        canvas = np.pad(img.mask.view(np.uint8), r)
        ox = oy = -r
    counts = _occupancy_counts(canvas, comp.boundary - (ox, oy), mask, kernels)
    return counts / mask.pixel_count


def occupancy(img: BinaryImage, z, mask: DiscMask, restrict_to: Component | None = None) -> float:
    """Fraction of the disc around pixel ``z`` that lands on foreground.

    Off-image cells are background. When ``restrict_to`` is given only that
    component's pixels count.
    """
    z = PixelCoord(*z)
    r = mask.radius
    window = np.zeros((2 * r + 1, 2 * r + 1), dtype=np.uint8)
    if restrict_to is not None:
        rel = restrict_to.pixels - (z.x - r, z.y - r)
        keep = np.all((rel >= 0) & (rel <= 2 * r), axis=1)
        window[rel[keep, 1], rel[keep, 0]] = 1
    else:
        x0, y0 = z.x - r, z.y - r
        sx0, sx1 = max(x0, 0), min(z.x + r + 1, img.width)
        sy0, sy1 = max(y0, 0), min(z.y + r + 1, img.height)
        if sx0 < sx1 and sy0 < sy1:
            window[sy0 - y0:sy1 - y0, sx0 - x0:sx1 - x0] = img.mask[sy0:sy1, sx0:sx1]
    count = _occupancy_counts(window, np.array([[r, r]]), mask)[0]
    return count / mask.pixel_count


def curvature_estimate(K, r: int):
    """Curvature from occupancy: ``(3*pi/r) * (K - 1/2)``, in 1/pixel.

    Diagnostic only; the test consumes occupancies directly. Accepts scalars
    or arrays.
    """
    if r < 1:
        raise InvalidParameterError(f"radius must be >= 1, got {r}")
    scale = 3.0 * math.pi / r
    if np.ndim(K):
        return scale * (np.asarray(K, dtype=float) - 0.5)
    return scale * (float(K) - 0.5)


@dataclass(frozen=True, eq=False)
class TestingFunction:
    """Normalised histogram of occupancies over ``bins`` equal bins of [0, 1]."""

    __test__ = False  # not a pytest class

    bins: int
    values: np.ndarray
    support_size: int

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __eq__(self, other):
        if not isinstance(other, TestingFunction):
            return NotImplemented
        return (self.bins == other.bins and self.support_size == other.support_size
                and bool(np.array_equal(self.values, other.values)))

    __hash__ = None


def bin_index(Ks, l: int) -> np.ndarray:
    """0-based bin of each value: ``[k/l, (k+1)/l)`` with the last bin closed at 1."""
    K = np.asarray(Ks, dtype=float)
    idx = np.floor(K * l).astype(np.int64)
    # float K*l may land one bin off near edges; re-check against k/l directly
    idx = np.where(K >= (idx + 1) / l, idx + 1, idx)
    idx = np.where(K < idx / l, idx - 1, idx)
    return np.clip(idx, 0, l - 1)


def testing_function(Ks, l: int = DEFAULT_BINS) -> TestingFunction:
    Ks = np.asarray(Ks, dtype=float).ravel()
    if l < 2:
        raise InvalidParameterError(f"bin count must be >= 2, got {l}")
    if Ks.size == 0:
        raise EmptySampleError("cannot build a testing function from an empty boundary")
    if np.any((Ks < 0) | (Ks > 1)):
        raise InvalidParameterError("occupancy values must lie in [0, 1]")
    counts = np.bincount(bin_index(Ks, l), minlength=l)
    return TestingFunction(bins=l, values=counts / Ks.size, support_size=int(Ks.size))


def perimeter_area_ratio(comp: Component) -> float:
    return comp.perimeter / comp.area


@dataclass(frozen=True)
class ShapeDescriptor:
    ratio: float
    curve: TestingFunction
    component_id: int = 0


def describe_component(img: BinaryImage, comp: Component, r: int = DEFAULT_RADIUS, l: int = DEFAULT_BINS,
                       restrict: bool = True) -> ShapeDescriptor:
    Ks = boundary_occupancies(img, comp, disc_mask(r), restrict=restrict)
    return ShapeDescriptor(ratio=perimeter_area_ratio(comp), curve=testing_function(Ks, l), component_id=comp.id)


def describe_components(img, comps, r=DEFAULT_RADIUS, l=DEFAULT_BINS, restrict=True) -> list[ShapeDescriptor]:
    mask = disc_mask(r)
    out = []
    padded = None if restrict else np.pad(img.mask.view(np.uint8), r)
    for c in comps:
        if restrict:
            Ks = boundary_occupancies(img, c, mask, restrict=True)
        else:
            Ks = _occupancy_counts(padded, c.boundary + r, mask) / mask.pixel_count
        out.append(ShapeDescriptor(perimeter_area_ratio(c), testing_function(Ks, l), c.id))
    return out


def describe_image(img: BinaryImage, r=DEFAULT_RADIUS, l=DEFAULT_BINS, restrict=True, connectivity=8,
                   min_pixels=1, discard_border=False) -> list[ShapeDescriptor]:
    """Label, filter and describe every component of ``img``."""
    comps = filter_components(label_components(img, connectivity), min_pixels, discard_border)
    return describe_components(img, comps, r, l, restrict)


def descriptors_csv(descs, bins: int = DEFAULT_BINS) -> str:
    """``component_id,ratio,t_1..t_l,n_boundary`` rows; header only for an empty list.

    ``bins`` sets the header width when there are no descriptors.
    """
    l = descs[0].curve.bins if descs else bins
    header = ["component_id", "ratio"] + [f"t_{k}" for k in range(1, l + 1)] + ["n_boundary"]
    lines = [",".join(header)]
    for d in descs:
        row = [str(d.component_id), repr(float(d.ratio))]
        row += [repr(float(v)) for v in d.curve.values]
        row.append(str(d.curve.support_size))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
