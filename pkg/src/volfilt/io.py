"""
File formats
============

* Samples: CSV, one row per time step, one column per channel, optional
  header row, '.' decimal point.
* Ground truth: JSON sidecar ``<stem>.truth.json`` next to the samples file.
* Configs: flat JSON objects.

Every writer goes through :func:`atomic_write` (temp file then rename).
"""
from __future__ import annotations

import contextlib
import csv
import io
import json
import math
import os
from pathlib import Path
import tempfile

import numpy as np


class InputError(ValueError):
    """Malformed or missing user input."""


@contextlib.contextmanager
def atomic_write(path, mode="w"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, newline="" if "b" not in mode else None) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _is_number(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_samples(path, n_columns=None):
    """Load a samples CSV into an ``(n, C)`` float array.

    Raises
    ------
    InputError
        On unreadable files, ragged rows, non-numeric or non-finite cells (the
        message names the 1-based line number), or a column count different from
        ``n_columns``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows = []
    width = None
    header = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if not rows and header is None and not all(_is_number(c) for c in cells):
            header = cells
            width = len(cells)
            continue
        if width is None:
            width = len(cells)
        if len(cells) != width:
            raise InputError(f"{path}: line {lineno}: expected {width} columns, got {len(cells)}")
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            raise InputError(f"{path}: line {lineno}: non-numeric value") from None
        if not all(math.isfinite(v) for v in vals):
            raise InputError(f"{path}: line {lineno}: non-finite value")
        rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no samples")
    x = np.array(rows, dtype=float)
    if n_columns is not None and x.shape[1] != n_columns:
        raise InputError(f"{path}: expected {n_columns} channel column(s), found {x.shape[1]}")
    return x


def write_samples(path, x, header=True):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"ch{c}" for c in range(x.shape[1])])
        for row in x:
            w.writerow([repr(float(v)) for v in row])


def sidecar_path(samples_path):
    p = Path(samples_path)
    return p.with_name(p.stem + ".truth.json")


def write_truth(path, scenario, extra=None):
    rec = {
        "change_times": [int(t) for t in scenario.change_times],
        "segment_sigmas": [float(s) for s in scenario.segment_sigmas],
        "correlation": np.asarray(scenario.correlation).tolist(),
        "seed": int(scenario.seed),
        "n_samples": int(scenario.n_samples),
        "n_channels": int(scenario.n_channels),
    }
    if extra:
        rec.update(extra)
    with atomic_write(path) as fh:
        json.dump(rec, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_truth(path):
    try:
        rec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read ground truth {path}: {exc}") from exc
    if "change_times" not in rec:
        raise InputError(f"{path}: missing change_times")
    return rec


def read_config(path):
    """Flat JSON config (keys are option names, ``-`` or ``_`` accepted)."""
    try:
        rec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(rec, dict):
        raise InputError(f"{path}: config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in rec.items()}


def write_json(path, obj):
    with atomic_write(path) as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_table(path, rows, columns=None):
    """CSV table from a list of dicts."""
    if columns is None:
        columns = list(rows[0]) if rows else []
    with atomic_write(path) as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)
