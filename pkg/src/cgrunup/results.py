"""Result files: CSV tables and a JSON summary, each carrying the resolved scenario.

Apart from the single ``generated`` line, output is a deterministic function
of the scenario, so reruns can be compared byte for byte after dropping it.
"""

from __future__ import annotations

import datetime as _dt
import json
from pathlib import Path

import numpy as np

STAMP_PREFIX = "# generated: "


def _stamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_csv(path, columns, rows, scenario_json: str, title: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with path.open("w", newline="\n") as fh:
        if title:
            fh.write(f"# {title}\n")
        fh.write(f"# scenario: {scenario_json}\n")
        fh.write(f"{STAMP_PREFIX}{_stamp()}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload: dict, scenario: dict | None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"generated": _stamp(), "scenario": scenario, **_jsonable(payload)}
    # the timestamp sits on its own line as the first key
    text = json.dumps(doc, indent=2, sort_keys=False)
    path.write_text(text + "\n")
    return path


def strip_stamp(text: str) -> str:
    """Drop the timestamp line, for byte comparisons of reruns."""
    return "\n".join(line for line in text.splitlines()
                     if not line.startswith(STAMP_PREFIX) and not line.startswith('  "generated"'))
