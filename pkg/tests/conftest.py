import numpy as np
import pytest

from lccd.colorgrid import RasterImage

ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_image(rng, width, height):
    return RasterImage(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))


def constant_image(width, height, rgb):
    data = np.empty((height, width, 3), dtype=np.uint8)
    data[...] = rgb
    return RasterImage(data)
