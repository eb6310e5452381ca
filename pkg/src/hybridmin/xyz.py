"""XYZ coordinate files."""

from __future__ import annotations

import numpy as np


def read_xyz(path) -> tuple[np.ndarray, list[str], str]:
    """Read an XYZ file.

    Returns ``(coords, symbols, comment)`` with coords as an ``(N, 3)`` array.
    """
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty XYZ file")
    try:
        n = int(lines[0].split()[0])
    except (ValueError, IndexError):
        raise ValueError(f"{path}:1: expected atom count, got {lines[0]!r}") from None
    if len(lines) < n + 2:
        raise ValueError(f"{path}: expected {n} atom lines, found {max(len(lines) - 2, 0)}")
    comment = lines[1]
    coords = np.empty((n, 3))
    symbols = []
    for i in range(n):
        words = lines[i + 2].split()
        if len(words) < 4:
            raise ValueError(f"{path}:{i + 3}: expected 'symbol x y z', got {lines[i + 2]!r}")
        symbols.append(words[0])
        try:
            coords[i] = [float(w) for w in words[1:4]]
        except ValueError:
            raise ValueError(f"{path}:{i + 3}: bad coordinate in {lines[i + 2]!r}") from None
    return coords, symbols, comment


def format_xyz(coords, symbols=None, comment: str = "") -> str:
    coords = np.asarray(coords, dtype=float).reshape(-1, 3)
    if symbols is None:
        symbols = ["X"] * len(coords)
    out = [str(len(coords)), comment.replace("\n", " ")]
    for sym, (x, y, z) in zip(symbols, coords):
        # repr is the shortest string that reads back to the same double
        out.append(f"{sym} {float(x)!r} {float(y)!r} {float(z)!r}")
    return "\n".join(out) + "\n"


def write_xyz(path, coords, symbols=None, comment: str = "") -> None:
    with open(path, "w") as f:
        f.write(format_xyz(coords, symbols, comment))
