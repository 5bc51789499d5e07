"""Line-delimited JSON with deterministic output and line-numbered errors.

All corpus and pipeline artifacts are JSONL: one UTF-8 encoded object per
line, no BOM, so multilingual text round-trips exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator


class JsonlError(ValueError):
    """A malformed record, reported with its 1-based line number."""

    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def read_records(path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (lineno, record) pairs; blank lines are skipped."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonlError(path, lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise JsonlError(path, lineno, "expected a JSON object")
            yield lineno, record


def write_records(path, records: Iterable[dict[str, Any]]) -> Path:
    """Write records one per line, UTF-8, preserving insertion key order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")
    return path
