"""Content-addressed file cache for endpoint responses.

Keys digest the model name, the serialized messages, and the generation
parameters, so any change produces a different key. Entries are single JSON
files written atomically; concurrent identical misses may both call the
endpoint but converge on one stored value.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CacheKey:
    digest: str

    @classmethod
    def for_request(cls, model_name: str, messages, params: dict) -> "CacheKey":
        canonical = json.dumps(
            {"model": model_name, "messages": messages, "params": params},
            sort_keys=True,
            ensure_ascii=False,
        )
        return cls(hashlib.sha256(canonical.encode("utf-8")).hexdigest())


class ResponseCache:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: CacheKey) -> Path:
        return self.directory / f"{key.digest}.json"

    def get(self, key: CacheKey) -> Optional[str]:
        path = self._path(key)
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
            return entry["response"]
        except FileNotFoundError:
            return None
        except (json.JSONDecodeError, KeyError, TypeError):
            logger.warning("corrupt cache entry %s; treating as a miss", path.name)
            return None

    def put(self, key: CacheKey, response: str) -> None:
        path = self._path(key)
        payload = json.dumps({"key": key.digest, "response": response}, ensure_ascii=False)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except FileNotFoundError:
                pass
            raise

    def get_or_call(self, key: CacheKey, call: Callable[[], str]) -> str:
        """Return the cached response, or invoke, store, and return."""
        cached = self.get(key)
        if cached is not None:
            return cached
        response = call()
        self.put(key, response)
        return response
