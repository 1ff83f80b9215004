"""Text dataset formats.

points:  one point per line, whitespace- or comma-delimited reals; if the
         first line is a header declaring `label`, the final column is the
         label.
bits:    contiguous 0/1 strings, one per line.
ratings: (user, item, rating) triples, one per line, rating in {-1, +1}.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .core import LabeledDataset


class DatasetFormatError(ValueError):
    """Malformed dataset file; carries the offending line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


def _tokens(line: str):
    return line.replace(",", " ").split()


def load_points(path, rng: Optional[np.random.Generator] = None) -> LabeledDataset:
    path = Path(path)
    rows = []
    labeled = False
    width = None
    with path.open() as fh:
        lines = fh.readlines()
    start = 0
    if lines and "label" in lines[0].lower() and not _is_numeric_line(lines[0]):
        labeled = True
        start = 1
    for line_no, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        toks = _tokens(line)
        try:
            vals = [float(t) for t in toks]
        except ValueError:
            raise DatasetFormatError(path, line_no, f"non-numeric value in {line.strip()!r}")
        if width is None:
            width = len(vals)
            if labeled and width < 2:
                raise DatasetFormatError(path, line_no, "labeled file needs >= 2 columns")
        elif len(vals) != width:
            raise DatasetFormatError(path, line_no,
                                     f"expected {width} columns, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise DatasetFormatError(path, len(lines) + 1, "empty dataset")
    arr = np.asarray(rows, dtype=float)
    if labeled:
        return LabeledDataset.from_points(arr[:, :-1], labels=arr[:, -1], rng=rng)
    return LabeledDataset.from_points(arr, rng=rng)


def _is_numeric_line(line: str) -> bool:
    try:
        [float(t) for t in _tokens(line)]
        return True
    except ValueError:
        return False


def load_bits(path, rng: Optional[np.random.Generator] = None) -> LabeledDataset:
    path = Path(path)
    rows = []
    width = None
    with path.open() as fh:
        for line_no, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if set(s) - {"0", "1"}:
                raise DatasetFormatError(path, line_no, f"non-binary characters in {s!r}")
            if width is None:
                width = len(s)
            elif len(s) != width:
                raise DatasetFormatError(path, line_no,
                                         f"expected {width} bits, got {len(s)}")
            rows.append([int(c) for c in s])
    if not rows:
        raise DatasetFormatError(path, 1, "empty dataset")
    return LabeledDataset.from_bits(np.asarray(rows, dtype=np.uint8), rng=rng)


def load_ratings(path) -> Tuple[np.ndarray, int, int]:
    """Returns (triples array of shape (k, 3), n_users, n_items)."""
    path = Path(path)
    rows = []
    with path.open() as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            toks = _tokens(line)
            if len(toks) != 3:
                raise DatasetFormatError(path, line_no, "expected user item rating")
            try:
                u, i, r = int(toks[0]), int(toks[1]), int(toks[2])
            except ValueError:
                raise DatasetFormatError(path, line_no, f"non-integer triple {toks!r}")
            if r not in (-1, 1):
                raise DatasetFormatError(path, line_no, f"rating must be -1 or +1, got {r}")
            rows.append((u, i, r))
    if not rows:
        raise DatasetFormatError(path, 1, "empty dataset")
    arr = np.asarray(rows, dtype=int)
    return arr, int(arr[:, 0].max()) + 1, int(arr[:, 1].max()) + 1


def write_points(path, points, labels=None) -> None:
    """Write reals with enough digits to round-trip to 1e-12 and beyond."""
    points = np.asarray(points, dtype=float)
    with Path(path).open("w") as fh:
        if labels is not None:
            fh.write(" ".join(f"x{j}" for j in range(points.shape[1])) + " label\n")
        for i, row in enumerate(points):
            cells = [f"{v:.17g}" for v in row]
            if labels is not None:
                cells.append(f"{labels[i]:.17g}")
            fh.write(" ".join(cells) + "\n")


def write_bits(path, points) -> None:
    with Path(path).open("w") as fh:
        for row in np.asarray(points):
            fh.write("".join(str(int(b)) for b in row) + "\n")


def write_ratings(path, ratings: np.ndarray) -> None:
    """Snapshot of revealed ratings as (user, item, rating) triples."""
    with Path(path).open("w") as fh:
        for u, i in zip(*np.nonzero(ratings)):
            fh.write(f"{u} {i} {int(ratings[u, i])}\n")
