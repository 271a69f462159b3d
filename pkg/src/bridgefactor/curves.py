"""CurveTable: grid-point rows plus provenance, written as CSV or JSON."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


@dataclass
class CurveTable:
    columns: list[str]
    rows: list[dict[str, Any]] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def add(self, **row: Any) -> None:
        missing = set(self.columns) - row.keys()
        if missing:
            raise KeyError(f"row is missing columns {sorted(missing)}")
        self.rows.append({c: row[c] for c in self.columns})

    def column(self, name: str) -> list[Any]:
        return [r[name] for r in self.rows]

    def provenance(self) -> dict[str, Any]:
        return {"version": __version__, "config": _jsonable(self.config)}

    def to_csv(self) -> str:
        lines = ["# " + json.dumps(self.provenance(), sort_keys=True)]
        if self.meta:
            lines.append("# meta " + json.dumps(_jsonable(self.meta), sort_keys=True))
        lines.append(",".join(self.columns))
        for r in self.rows:
            lines.append(",".join(_fmt(r[c]) for c in self.columns))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "version": __version__,
            "config": _jsonable(self.config),
            "meta": _jsonable(self.meta),
            "columns": self.columns,
            "rows": _jsonable(self.rows),
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"

    def write(self, path: str | Path, fmt: str = "csv") -> None:
        text = self.to_json() if fmt == "json" else self.to_csv()
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
