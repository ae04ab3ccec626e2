"""
Content-addressed on-disk cache for expensive intermediate results.

Entries are JSON files named by the SHA-256 of a canonical key.  Each file
stores its key, so a hash collision or a stale layout is detected as a miss.
Writers take an advisory ``fcntl`` lock on ``<dir>/.lock`` and replace files
atomically.  Unreadable entries are reported with a warning and recomputed.
"""
from __future__ import annotations

import fcntl
import hashlib
import json
import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .bessel import FrobMatrix2
from .series import OmegaSeries

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


def _canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def series_to_json(s: OmegaSeries) -> dict:
    return {"p": s.p, "N": s.N, "prec": s.prec,
            "data": [[str(int(c)) for c in row] for row in s.data]}


def series_from_json(obj: dict) -> OmegaSeries:
    rows = [[int(c) for c in row] for row in obj["data"]]
    data = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
    for j, row in enumerate(rows):
        data[j, :] = row
    return OmegaSeries(int(obj["p"]), int(obj["N"]), data, int(obj["prec"]))


def frob_to_json(F: FrobMatrix2) -> dict:
    return {"level": F.level, "p": F.p, "meta": F.meta,
            "A": [series_to_json(s) for s in (F.A1, F.A2, F.A3, F.A4)]}


def frob_from_json(obj: dict) -> FrobMatrix2:
    A = [series_from_json(x) for x in obj["A"]]
    return FrobMatrix2(*A, level=int(obj["level"]), p=int(obj["p"]), meta=dict(obj["meta"]))


class Cache:
    """A directory of JSON entries; ``Cache(None)`` never stores anything."""

    def __init__(self, directory: str | os.PathLike | None):
        self.dir = Path(directory) if directory else None
        self.hits = 0
        self.misses = 0
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def _path(self, key: dict) -> Path:
        digest = hashlib.sha256(_canonical(key).encode()).hexdigest()
        return self.dir / f"{digest}.json"

    @contextmanager
    def _locked(self):
        with open(self.dir / ".lock", "a+") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    def get(self, key: dict) -> Any | None:
        if self.dir is None:
            return None
        path = self._path(key)
        if not path.exists():
            return None
        try:
            with self._locked():
                entry = json.loads(path.read_text())
            if entry.get("version") != FORMAT_VERSION or entry.get("key") != json.loads(_canonical(key)):
                return None
            return entry["value"]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            log.warning("corrupt cache entry %s (%s); recomputing", path.name, exc)
            return None

    def put(self, key: dict, value: Any) -> None:
        if self.dir is None:
            return
        path = self._path(key)
        payload = _canonical({"version": FORMAT_VERSION, "key": key, "value": value})
        with self._locked():
            fd, tmp = tempfile.mkstemp(dir=self.dir, suffix=".tmp")
            with os.fdopen(fd, "w") as fh:
                fh.write(payload)
            os.replace(tmp, path)

    def fetch(self, key: dict, compute: Callable[[], Any], encode: Callable[[Any], Any],
              decode: Callable[[Any], Any]) -> Any:
        """Return the cached value for ``key``, computing and storing it on a miss."""
        raw = self.get(key)
        if raw is not None:
            try:
                value = decode(raw)
                self.hits += 1
                return value
            except (ValueError, KeyError, TypeError, IndexError) as exc:
                log.warning("corrupt cache entry for %s (%s); recomputing", key.get("kind"), exc)
        self.misses += 1
        value = compute()
        self.put(key, encode(value))
        return value
