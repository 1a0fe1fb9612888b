"""Content-addressed on-disk completion cache.

Layout: ``<root>/<key[:2]>/<key>.json``, each file holding the raw
completion text and its usage counts.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path

log = logging.getLogger(__name__)


def cache_key(model, system: str, user: str, params: dict | None = None) -> str:
    """SHA-256 over provider, model name, both prompt texts and sampling parameters."""
    if params is None:
        params = model.params()
    payload = json.dumps(
        [model.provider, model.model_name, system, user, params],
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class DiskCache:
    def __init__(self, root):
        self.root = Path(root)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        try:
            with open(path, encoding="utf-8") as f:
                entry = json.load(f)
            if not isinstance(entry, dict) or not isinstance(entry.get("text"), str):
                raise ValueError("missing text")
            return entry
        except FileNotFoundError:
            return None
        except (OSError, ValueError) as exc:
            log.warning("ignoring corrupt cache entry %s: %s", path, exc)
            return None

    def put(self, key: str, entry: dict) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(entry, f, ensure_ascii=False)
        os.replace(tmp, path)

    def __contains__(self, key: str) -> bool:
        return self.get(key) is not None
