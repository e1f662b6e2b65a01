"""Deterministic CSV / NDJSON writers with an embedded metadata header."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import tempfile
from typing import Iterable, Sequence


def _clean(value):
    """JSON-safe value: NaN and infinities become strings, numpy scalars become Python."""
    if hasattr(value, "item") and not isinstance(value, (list, tuple, dict)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, ensure_ascii=False, allow_nan=False)


def render_csv(rows: Iterable[dict], columns: Sequence[str], metadata: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + dumps(metadata) + "\n")
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _format(row.get(k)) for k in columns})
    return buf.getvalue()


def _format(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return v


def render_ndjson(records: Iterable[dict], metadata: dict) -> str:
    lines = [dumps({"metadata": metadata})]
    lines.extend(dumps(r) for r in records)
    return "\n".join(lines) + "\n"


def atomic_write(path: str | None, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename; ``None`` means stdout."""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sswalk-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
