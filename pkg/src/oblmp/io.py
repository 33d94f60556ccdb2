"""Plain-text file formats.

Atom matrices and signals travel as columnar CSV: comment lines ``# key=value``
carry metadata, a header row names the columns, and each following row is one
grid point.  Reports are JSON documents.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .errors import OblmpError


class ParseError(OblmpError):
    """A data file could not be parsed."""


def _format_meta(meta):
    return "".join(f"# {k}={v}\n" for k, v in meta.items())


def write_matrix(path, matrix, column_names, meta=None, x=None):
    """Write a (rows x cols) matrix as columnar CSV.

    An optional `x` column of grid coordinates is prepended.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[1] != len(column_names):
        raise ValueError("one name per column required")
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(_format_meta(meta or {}))
        writer = csv.writer(fh)
        names = list(column_names)
        blocks = [matrix]
        if x is not None:
            names = ["x"] + names
            blocks = [np.asarray(x, dtype=float)[:, None]] + blocks
        writer.writerow(names)
        for row in np.hstack(blocks):
            writer.writerow([repr(float(v)) for v in row])


def read_matrix(path):
    """Read a columnar CSV written by `write_matrix`.

    Returns (values, column_names, meta); an `x` column, when present, is
    returned inside `values` under its name.
    """
    path = Path(path)
    meta = {}
    try:
        with path.open("r", encoding="utf-8") as fh:
            rows = []
            names = None
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line.lstrip("#").strip()
                    if "=" in body:
                        key, val = body.split("=", 1)
                        meta[key.strip()] = val.strip()
                    continue
                cells = next(csv.reader([line]))
                if names is None:
                    names = cells
                    continue
                rows.append([float(c) for c in cells])
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"malformed numeric row in {path}: {exc}") from exc
    if names is None:
        raise ParseError(f"{path} has no header row")
    if not rows:
        raise ParseError(f"{path} has no data rows")
    values = np.asarray(rows, dtype=float)
    if values.shape[1] != len(names):
        raise ParseError(
            f"{path}: {len(names)} columns named, {values.shape[1]} found"
        )
    return values, names, meta


def write_signal(path, signal, meta=None, x=None, name="signal"):
    write_matrix(path, np.asarray(signal, dtype=float)[:, None], [name],
                 meta=meta, x=x)


def read_signal(path):
    """Read a single-signal CSV (ignoring any x column)."""
    values, names, meta = read_matrix(path)
    cols = [j for j, n in enumerate(names) if n != "x"]
    if len(cols) != 1:
        raise ParseError(f"{path}: expected one signal column, found {len(cols)}")
    return values[:, cols[0]], meta


def read_atoms(path):
    """Read an atom matrix CSV (ignoring any x column)."""
    values, names, meta = read_matrix(path)
    cols = [j for j, n in enumerate(names) if n != "x"]
    return values[:, cols], meta


def write_report(path, report):
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_report(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read report {path}: {exc}") from exc
