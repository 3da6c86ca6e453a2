"""Writers for the CLI's CSV and JSON outputs.

Every CSV starts with a block of ``#`` comment lines naming the tool
version, the network fingerprint, and the full parameter set. JSON has no
comments, so the same information goes under a top-level ``"meta"`` key.
Nothing time- or host-dependent is recorded, which keeps repeated runs
byte-identical.
"""

from __future__ import annotations

import io
import json
from pathlib import Path as FsPath

import numpy as np

from . import __version__
from .network import Network


def header(net: Network | None, params: dict) -> dict:
    meta = {"tool": f"crnqp {__version__}"}
    if net is not None:
        meta["network"] = net.fingerprint()
    meta["params"] = _plain(params)
    return meta


def _plain(obj):
    """Convert numpy scalars/arrays (recursively) into JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def csv_text(meta: dict, columns: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# tool: {meta['tool']}\n")
    if "network" in meta:
        buf.write(f"# network: {meta['network']}\n")
    buf.write(f"# params: {json.dumps(meta['params'], sort_keys=True)}\n")
    buf.write(",".join(columns) + "\n")
    for row in np.atleast_2d(np.asarray(rows, dtype=float)) if len(rows) else []:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def json_text(meta: dict, body: dict) -> str:
    return json.dumps({"meta": meta, **_plain(body)}, indent=2, sort_keys=False) + "\n"


def table_json(meta: dict, columns: list[str], rows) -> str:
    rows = np.atleast_2d(np.asarray(rows, dtype=float)) if len(rows) else np.empty((0, len(columns)))
    return json_text(meta, {"columns": columns, "rows": rows.tolist()})


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Inverse of :func:`csv_text` (comments skipped)."""
    lines = [ln for ln in FsPath(path).read_text().splitlines() if ln and not ln.startswith("#")]
    cols = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(cols))
    return cols, data
