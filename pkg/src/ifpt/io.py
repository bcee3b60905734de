"""Plain-text input and output: full-precision CSV tables and quote files."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .calibration import CdsQuote, DiscountCurve
from .errors import InvalidParameterError

__all__ = ["write_csv", "read_csv", "write_json", "fmt", "read_quotes",
           "read_discount", "read_path", "write_snapshots", "write_quotes"]


def fmt(v):
    """17 significant digits for floats, plain digits for integers."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path, columns: dict):
    """Write equally long columns with the keys of ``columns`` as header."""
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    n = {c.shape[0] for c in cols}
    if len(n) != 1:
        raise InvalidParameterError("CSV columns differ in length")
    lines = [",".join(names)]
    for row in zip(*cols):
        lines.append(",".join(fmt(v.item() if hasattr(v, "item") else v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def read_csv(path, required):
    """Rows of a CSV file as dicts; the header must contain ``required``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise InvalidParameterError(f"{path}: missing column(s) {', '.join(missing)}")
        return list(reader)


def _floats(text, where):
    try:
        return [float(v) for v in text.replace(";", " ").split()]
    except ValueError:
        raise InvalidParameterError(f"{where}: not a list of numbers: {text!r}") from None


def read_quotes(path):
    """Quote file with columns ``j,T,upfront,running,payment_times,accruals``.

    The last two fields hold semicolon separated lists.
    """
    rows = read_csv(path, ["j", "T", "upfront", "running", "payment_times", "accruals"])
    quotes = []
    for r in rows:
        where = f"{path}: quote {r['j']}"
        try:
            quotes.append(CdsQuote(int(r["j"]), float(r["T"]), float(r["upfront"]),
                                   float(r["running"]),
                                   tuple(_floats(r["payment_times"], where)),
                                   tuple(_floats(r["accruals"], where))))
        except (TypeError, ValueError) as exc:
            raise InvalidParameterError(f"{where}: {exc}") from None
    return sorted(quotes, key=lambda q: q.T)


def read_discount(path):
    rows = read_csv(path, ["t", "p0"])
    return DiscountCurve([float(r["t"]) for r in rows], [float(r["p0"]) for r in rows])


def read_path(path):
    """Observed asset path with columns ``t,X``."""
    rows = read_csv(path, ["t", "X"])
    return (np.array([float(r["t"]) for r in rows]), np.array([float(r["X"]) for r in rows]))


def write_snapshots(directory, grid, snapshots):
    """One ``u_<k>.csv`` file (columns ``x,u``) per stored snapshot."""
    directory = Path(directory)
    for k, u in enumerate(snapshots):
        write_csv(directory / f"u_{k}.csv", {"x": grid.x, "u": u})


def write_quotes(path, quotes):
    """Inverse of :func:`read_quotes`."""
    lines = ["j,T,upfront,running,payment_times,accruals"]
    for q in quotes:
        lines.append(",".join([str(q.j), fmt(q.T), fmt(q.upfront), fmt(q.running),
                               ";".join(fmt(t) for t in q.payment_times),
                               ";".join(fmt(d) for d in q.accruals)]))
    Path(path).write_text("\n".join(lines) + "\n")
