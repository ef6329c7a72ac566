"""CSV readers and writers.

Numbers are written with 17 significant digits so every float round-trips
exactly; infinity is the literal ``Inf``. Readers accept ``Inf``/``inf`` and
treat ``NA`` or an empty cell as infinity for event times.
"""

import csv
import io
import math
from pathlib import Path

import numpy as np

from .epidemic import EventHistory, Framework, build_event_history
from .exceptions import ValidationError
from .networks import ContactNetwork

SIR_HEADER = ["id", "rem.time", "inf.period", "inf.time"]
SINR_HEADER = ["id", "rem.time", "delay.period", "not.time", "inc.period", "inf.time"]
EDGE_HEADER = ["from", "to", "weight"]
LOCATION_HEADER = ["x", "y"]

_MISSING = {"", "na", "nan", "null"}


def fmt(x):
    """Format one number: integers as-is, floats with 17 significant digits."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "Inf" if x > 0 else "-Inf"
    if math.isnan(x):
        return "NA"
    return format(x, ".17g")


def parse_float(s, missing=math.inf):
    t = s.strip()
    low = t.lower()
    if low in _MISSING:
        return missing
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    if low in ("-inf", "-infinity"):
        return -math.inf
    try:
        return float(t)
    except ValueError:
        raise ValidationError(f"not a number: {s!r}") from None


def write_rows(path_or_buf, header, rows):
    """Write a CSV with ``\\n`` line endings; returns the text when ``path_or_buf`` is None."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    text = buf.getvalue()
    if path_or_buf is None:
        return text
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        Path(path_or_buf).write_text(text)
    return text


def read_rows(path):
    """(header, rows of strings) from a CSV file."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = [r for r in reader if r]
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise ValidationError(f"{path} is empty")
    return [h.strip() for h in rows[0]], rows[1:]


def _check_header(path, header, expected):
    if [h.lower() for h in header] != [e.lower() for e in expected]:
        raise ValidationError(f"{path}: expected header {','.join(expected)}, got {','.join(header)}")


def write_event_history(hist, path=None):
    if hist.framework is Framework.SIR:
        rows = zip(hist.ids, hist.rem_times, hist.infectious_periods, hist.inf_times)
        return write_rows(path, SIR_HEADER, rows)
    rows = zip(
        hist.ids,
        hist.rem_times,
        hist.delay_periods,
        hist.notif_times,
        hist.incubation_periods,
        hist.inf_times,
    )
    return write_rows(path, SINR_HEADER, rows)


def read_event_history(path):
    header, rows = read_rows(path)
    if len(header) == len(SIR_HEADER):
        _check_header(path, header, SIR_HEADER)
        framework = Framework.SIR
    else:
        _check_header(path, header, SINR_HEADER)
        framework = Framework.SINR
    data = np.array([[parse_float(v) for v in r] for r in rows], dtype=float).reshape(-1, len(header))
    if not np.isfinite(data[:, 0]).all():
        raise ValidationError(f"{path}: ids must be finite integers")
    ids = data[:, 0]
    if framework is Framework.SIR:
        return build_event_history(framework, data[:, 3], data[:, 1], ids=ids)
    return build_event_history(framework, data[:, 5], data[:, 1], notif_times=data[:, 3], ids=ids)


def write_edge_list(net, path=None):
    rows = [(i + 1, j + 1, w) for i, j, w in net.edges()]
    return write_rows(path, EDGE_HEADER, rows)


def read_edge_list(path, n, directed=False):
    header, rows = read_rows(path)
    _check_header(path, header, EDGE_HEADER)
    edges = []
    for r in rows:
        if len(r) != 3:
            raise ValidationError(f"{path}: edge rows need three fields")
        i, j, w = int(r[0]) - 1, int(r[1]) - 1, parse_float(r[2], missing=math.nan)
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"{path}: edge ({r[0]},{r[1]}) outside population of {n}")
        if not math.isfinite(w) or w < 0:
            raise ValidationError(f"{path}: edge weight must be finite and >= 0")
        edges.append((i, j, w))
    return ContactNetwork.from_edges(n, edges, directed=directed)


def write_locations(loc, path=None):
    return write_rows(path, LOCATION_HEADER, np.asarray(loc, dtype=float).tolist())


def read_locations(path):
    header, rows = read_rows(path)
    _check_header(path, header, LOCATION_HEADER)
    return np.array([[parse_float(v, missing=math.nan) for v in r] for r in rows], dtype=float)


def read_matrix(path):
    """Dense numeric matrix; a non-numeric first row is treated as a header."""
    header, rows = read_rows(path)
    try:
        [float(h) for h in header]
    except ValueError:
        pass
    else:
        rows = [header] + rows
    return np.array([[parse_float(v, missing=math.nan) for v in r] for r in rows], dtype=float)


def write_matrix(a, path=None):
    return write_rows(path, None, np.asarray(a).tolist())


def read_covariates(path):
    """Row-per-individual CSV with a header of covariate names; returned as p x n."""
    header, rows = read_rows(path)
    x = np.array([[parse_float(v, missing=math.nan) for v in r] for r in rows], dtype=float)
    return x.reshape(len(rows), len(header)).T.copy()


def write_covariates(x, names=None, path=None):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    names = names or [f"x{k + 1}" for k in range(x.shape[0])]
    return write_rows(path, names, x.T.tolist())


__all__ = [
    "EventHistory",
    "fmt",
    "parse_float",
    "read_covariates",
    "read_edge_list",
    "read_event_history",
    "read_locations",
    "read_matrix",
    "write_covariates",
    "write_edge_list",
    "write_event_history",
    "write_locations",
    "write_matrix",
    "write_rows",
]
