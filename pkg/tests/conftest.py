import numpy as np
import pytest

from randset import BinaryImage


def image_from_rows(*rows):
    """Build an image from strings where ``#`` is foreground."""
    return BinaryImage(np.array([[c == "#" for c in row] for row in rows]))


def block_image(width, height, x0, y0, w, h):
    mask = np.zeros((height, width), dtype=bool)
    mask[y0:y0 + h, x0:x0 + w] = True
    return BinaryImage(mask)


def disc_image(R, pad=3):
    """Rasterized solid disc of radius R centred on a pixel."""
    n = 2 * (R + pad) + 1
    yy, xx = np.mgrid[0:n, 0:n] - (R + pad)
    return BinaryImage(xx * xx + yy * yy <= R * R)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
