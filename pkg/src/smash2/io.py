"""Text file formats used by the command line: symbol files, ragged CSV
series, label files, distance-matrix CSV and ASCII PGM heatmaps."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class FormatError(ValueError):
    pass


def read_symbols(path: str | Path) -> list[list[int]]:
    """One sequence per line, digits 0-9 with no separators; blank lines are empty sequences."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if line and not line.isdigit():
                raise FormatError(f"{path}:{lineno}: symbol lines may only contain digits 0-9")
            out.append([ord(c) - 48 for c in line])
    return out


def format_symbols(seq: Sequence[int]) -> str:
    if any(not 0 <= s <= 9 for s in seq):
        raise FormatError("symbol files hold at most 10 symbols (0-9)")
    return "".join(chr(48 + s) for s in seq)


def write_symbols(seqs: Iterable[Sequence[int]], path: str | Path) -> None:
    with open(path, "w") as fh:
        for s in seqs:
            fh.write(format_symbols(s) + "\n")


def read_series_csv(path: str | Path) -> list[list[float]]:
    """One real-valued series per row, comma separated; rows may differ in length."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append([float(v) for v in line.split(",") if v.strip() != ""])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return out


def read_labels(path: str | Path) -> list[str]:
    with open(path) as fh:
        return [line.strip() for line in fh if line.strip()]


def write_matrix_csv(D: np.ndarray, path: str | Path) -> None:
    # 12 significant digits keeps the re-read within 1e-9 for distances below ~100
    with open(path, "w") as fh:
        for row in np.asarray(D):
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


def read_matrix_csv(path: str | Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_pgm(D: np.ndarray, path: str | Path) -> None:
    """ASCII (P2) greyscale image of ``D``; min maps to 0 and max to 255."""
    D = np.asarray(D, dtype=float)
    lo, hi = (float(D.min()), float(D.max())) if D.size else (0.0, 0.0)
    if hi > lo:
        px = np.rint((D - lo) / (hi - lo) * 255).astype(int)
    else:
        px = np.zeros(D.shape, dtype=int)
    h, w = D.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n{w} {h}\n255\n")
        for row in px:
            fh.write(" ".join(str(v) for v in row) + "\n")


def read_pgm(path: str | Path) -> np.ndarray:
    with open(path) as fh:
        tokens = [t for line in fh if not line.startswith("#") for t in line.split()]
    if not tokens or tokens[0] != "P2":
        raise FormatError(f"{path}: not an ASCII PGM")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    px = np.array([int(t) for t in tokens[4:]], dtype=int)
    if px.size != w * h or px.max(initial=0) > maxval:
        raise FormatError(f"{path}: pixel data does not match header")
    return px.reshape(h, w)
