"""JSON forms of regions and spin grids."""
from __future__ import annotations

import re

import numpy as np

from .lattice import Region, RectSpec, SpinGrid

_SYM = {-1: "M", 0: "Z", 1: "P"}
_VAL = {v: k for k, v in _SYM.items()}
_RUN = re.compile(r"(\d*)([MZP])")


def region_to_json(I: Region) -> list[list[int]]:
    return [[int(x), int(y)] for x, y in sorted(I)]


def region_from_json(data) -> Region:
    return frozenset((int(x), int(y)) for x, y in data)


def _encode_row(row: np.ndarray) -> str:
    out = []
    i = 0
    n = len(row)
    while i < n:
        j = i
        while j < n and row[j] == row[i]:
            j += 1
        count = j - i
        out.append(f"{count if count > 1 else ''}{_SYM[int(row[i])]}")
        i = j
    return "".join(out)


def _decode_row(text: str, width: int) -> list[int]:
    vals: list[int] = []
    pos = 0
    for m in _RUN.finditer(text):
        if m.start() != pos:
            raise ValueError(f"bad run-length row {text!r}")
        pos = m.end()
        vals.extend([_VAL[m.group(2)]] * int(m.group(1) or 1))
    if pos != len(text) or len(vals) != width:
        raise ValueError(f"bad run-length row {text!r}")
    return vals


def grid_to_json(u: SpinGrid) -> dict:
    """Window plus one run-length string per row, bottom row first."""
    w = u.window
    return {
        "window": [w.xmin, w.xmax, w.ymin, w.ymax],
        "rows": [_encode_row(r) for r in u.spins],
    }


def grid_from_json(data: dict, epsilon: float = 1.0) -> SpinGrid:
    rect = RectSpec(*data["window"])
    rows = [_decode_row(r, rect.width) for r in data["rows"]]
    if len(rows) != rect.height:
        raise ValueError("row count does not match window")
    return SpinGrid(rect, np.array(rows, dtype=np.int8), epsilon)
