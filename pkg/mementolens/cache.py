"""
Response Cache Module

On-disk cache for archive responses. Bodies are stored as content-addressed
files under objects/. The index mapping the hash of the full request URL to
the stored file and its fetch metadata lives in two files: an index.json
snapshot and an index.jsonl journal that every put appends one line to. The
journal is folded into the snapshot when the cache is opened and when it is
closed. Entries never expire; a refresh cache ignores existing entries and
overwrites them.
"""

import hashlib
import json
import logging
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, Optional

from pydantic import BaseModel, Field

from mementolens.errors import StorageError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "index.json"
JOURNAL_NAME = "index.jsonl"


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def isoformat_utc(moment: datetime) -> str:
    return moment.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class CacheEntry(BaseModel):
    """One cached response."""

    url: str
    body: bytes = Field(repr=False)
    status: int = 200
    headers: Dict[str, str] = Field(default_factory=dict)
    fetched_at: str


class ResponseCache:
    """
    Content-addressed response cache with a journaled JSON index.

    A put costs one body write and one appended journal line, whatever the
    size of the cache. Thread-safe: a lock serializes index reads and writes.
    Use as a context manager (or call close()) to compact the journal.

    Example:
        >>> with ResponseCache(Path(".cache")) as cache:
        ...     key = cache.make_key("https://web.archive.org/cdx/search/cdx?url=x")
        ...     cache.get(key) is None
        True
    """

    def __init__(
        self,
        directory: Path,
        refresh: bool = False,
        clock: Callable[[], datetime] = utc_now,
    ):
        self.directory = Path(directory)
        self.refresh = refresh
        self.clock = clock
        self._lock = threading.Lock()
        self._refreshed: set = set()
        self._manifest = self._load_manifest()
        self._replay_journal()
        if self.journal_path.exists():
            self._compact()

    @staticmethod
    def make_key(url: str) -> str:
        """Deterministic key for a full request URL."""
        return hashlib.sha256(url.encode("utf-8")).hexdigest()

    @property
    def manifest_path(self) -> Path:
        return self.directory / MANIFEST_NAME

    @property
    def journal_path(self) -> Path:
        return self.directory / JOURNAL_NAME

    def _load_manifest(self) -> Dict[str, Dict]:
        try:
            return json.loads(self.manifest_path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return {}
        except (OSError, json.JSONDecodeError) as e:
            raise StorageError(f"unreadable cache manifest {self.manifest_path}: {e}") from e

    def _replay_journal(self) -> int:
        """Apply journal lines on top of the snapshot; returns how many applied."""
        try:
            lines = self.journal_path.read_text(encoding="utf-8").splitlines()
        except FileNotFoundError:
            return 0
        except OSError as e:
            raise StorageError(f"unreadable cache journal {self.journal_path}: {e}") from e
        applied = 0
        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                item = json.loads(line)
                key = item.pop("key")
            except (json.JSONDecodeError, KeyError, AttributeError):
                # a put interrupted mid-line; its body may be on disk but the entry is lost
                logger.warning("skipping damaged cache journal line %d in %s", number, self.journal_path)
                continue
            self._manifest[key] = item
            applied += 1
        return applied

    def _compact(self) -> None:
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            tmp = self.manifest_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(self._manifest, indent=1, sort_keys=True), encoding="utf-8")
            os.replace(tmp, self.manifest_path)
            self.journal_path.unlink(missing_ok=True)
        except OSError as e:
            raise StorageError(f"cannot write cache manifest {self.manifest_path}: {e}") from e

    def close(self) -> None:
        """Fold the journal into index.json."""
        with self._lock:
            if self.journal_path.exists():
                self._compact()

    def __enter__(self) -> "ResponseCache":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def get(self, key: str) -> Optional[CacheEntry]:
        """
        Return the cached entry for key, or None on a miss.

        With refresh enabled, entries written before this cache object was
        created are reported as misses.
        """
        with self._lock:
            meta = self._manifest.get(key)
            if meta is None or (self.refresh and key not in self._refreshed):
                return None
            try:
                body = (self.directory / meta["file"]).read_bytes()
            except OSError as e:
                raise StorageError(f"cached body missing for {meta.get('url')}: {e}") from e
        return CacheEntry(
            url=meta["url"],
            body=body,
            status=meta.get("status", 200),
            headers=meta.get("headers", {}),
            fetched_at=meta["fetched_at"],
        )

    def put(
        self,
        key: str,
        body: bytes,
        url: str,
        status: int = 200,
        headers: Optional[Dict[str, str]] = None,
    ) -> CacheEntry:
        """Store a response body and its metadata under key."""
        digest = hashlib.sha256(body).hexdigest()
        relative = Path("objects") / digest[:2] / digest
        entry = CacheEntry(
            url=url,
            body=body,
            status=status,
            headers=dict(headers or {}),
            fetched_at=isoformat_utc(self.clock()),
        )
        meta = {
            "url": url,
            "file": relative.as_posix(),
            "fetched_at": entry.fetched_at,
            "status": status,
            "headers": entry.headers,
        }
        with self._lock:
            try:
                target = self.directory / relative
                if not target.exists():
                    target.parent.mkdir(parents=True, exist_ok=True)
                    target.write_bytes(body)
                with open(self.journal_path, "a", encoding="utf-8") as journal:
                    journal.write(json.dumps({"key": key, **meta}, sort_keys=True) + "\n")
                self._manifest[key] = meta
                self._refreshed.add(key)
            except OSError as e:
                raise StorageError(f"cannot write cache entry for {url}: {e}") from e
        logger.debug("cached %s (%d bytes, status %d)", url, len(body), status)
        return entry

    def __len__(self) -> int:
        return len(self._manifest)
