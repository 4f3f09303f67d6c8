"""Plain-text datasets: one comma-separated record per line, ``#`` starts a comment line."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InputError
from .queries import Dataset


def parse_dataset(text: str, *, source: str = "<string>", labeled: bool = False,
                  coordinate_values=None) -> Dataset:
    """Parse records; errors name the offending line.

    With ``labeled`` the last column must be 0/1. ``coordinate_values``
    (defaults to {0, 1}) restricts the attribute columns.
    """
    allowed = set(float(v) for v in (coordinate_values if coordinate_values is not None else (0, 1)))
    rows, width = [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            row = [float(tok) for tok in line.split(",")]
        except ValueError:
            raise InputError(f"{source}:{lineno}: non-numeric value in {line!r}") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InputError(f"{source}:{lineno}: expected {width} values, found {len(row)}")
        attrs = row[:-1] if labeled else row
        bad = [v for v in attrs if v not in allowed]
        if bad:
            raise InputError(f"{source}:{lineno}: value {bad[0]:g} not in the coordinate set {sorted(allowed)}")
        if labeled and row[-1] not in (0.0, 1.0):
            raise InputError(f"{source}:{lineno}: label must be 0 or 1")
        rows.append(row)
    if not rows:
        raise InputError(f"{source}: no records")
    X = np.array(rows)
    if np.all(X == np.round(X)) and set(np.unique(X)) <= {0.0, 1.0}:
        X = X.astype(np.int8)
    return Dataset(X)


def read_dataset(path, **kw) -> Dataset:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read dataset {p}: {exc.strerror}") from None
    return parse_dataset(text, source=str(p), **kw)


def format_dataset(points) -> str:
    X = np.asarray(points)
    if np.issubdtype(X.dtype, np.integer):
        return "".join(",".join(str(int(v)) for v in row) + "\n" for row in X)
    return "".join(",".join(f"{v:g}" for v in row) + "\n" for row in X)


def write_dataset(path, points, header: str | None = None) -> None:
    body = format_dataset(points)
    if header:
        body = "".join(f"# {h}\n" for h in header.splitlines()) + body
    Path(path).write_text(body)
