import contextlib
import time

import numpy as np
import pytest

from begflow.lattice import RectSpec, SpinGrid

_CRITERIA: list[tuple[str, bool, str]] = []


class _Record:
    detail = ""


@contextlib.contextmanager
def criterion(name: str):
    """Record one acceptance line; failures are recorded and re-raised."""
    rec = _Record()
    t0 = time.perf_counter()
    try:
        yield rec
    except BaseException:
        line = f"{name} FAIL ({time.perf_counter() - t0:.1f}s) {rec.detail}"
        _CRITERIA.append((name, False, line))
        print(line)
        raise
    line = f"{name} PASS ({time.perf_counter() - t0:.1f}s) {rec.detail}"
    _CRITERIA.append((name, True, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)


def random_staircase(rng: np.random.Generator, max_h: int = 12, max_w: int = 12) -> frozenset:
    """Rows [a_y, b_y] with a valley-shaped a, a mountain-shaped b and overlapping neighbours."""
    while True:
        h = int(rng.integers(1, max_h + 1))
        a = np.sort(rng.integers(0, max_w, h))
        b = np.sort(rng.integers(0, max_w, h))
        ka, kb = int(rng.integers(0, h + 1)), int(rng.integers(0, h + 1))
        a = np.concatenate([a[:ka][::-1], a[ka:]])
        b = np.concatenate([b[:kb], b[kb:][::-1]])
        if np.all(a <= b) and all(max(a[y], a[y + 1]) <= min(b[y], b[y + 1]) for y in range(h - 1)):
            return frozenset((x, y) for y in range(h) for x in range(int(a[y]), int(b[y]) + 1))


def random_grid(rng: np.random.Generator, max_side: int = 12, epsilon: float = 1 / 16) -> SpinGrid:
    w, h = (int(v) for v in rng.integers(1, max_side + 1, 2))
    spins = rng.integers(-1, 2, (h, w)).astype(np.int8)
    x0, y0 = (int(v) for v in rng.integers(-5, 6, 2))
    return SpinGrid(RectSpec(x0, x0 + w - 1, y0, y0 + h - 1), spins, epsilon)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
