"""
Probe Module

Answers two questions about URLs harvested from scrape results (post
permalinks, bio websites, image URLs):

- is it archived? exact-URL CDX lookup against one archive
- is it still live? one GET to the live web, only when explicitly enabled

Verdicts are tri-state: a network failure during the archive lookup makes
the verdict indeterminate, never "not archived".
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence
from urllib.parse import urlsplit

from pydantic import BaseModel, model_validator

from mementolens.cache import isoformat_utc, utc_now
from mementolens.cdx_client import CdxClient, CdxQuery
from mementolens.classifier import canonicalize
from mementolens.endpoints import ArchiveEndpoint
from mementolens.errors import DisabledError, MalformedResponse, NetworkError, Unreachable
from mementolens.transport import RateLimiter, Transport

logger = logging.getLogger(__name__)

DELETED_STATUSES = {404, 410}


class LiveStatus(BaseModel):
    status: int
    likely_deleted: bool


class ProbeVerdict(BaseModel):
    """
    What is known about one URL.

    archived is None when the archive lookup failed (indeterminate).
    live_status is None when the live web was not probed; live_error is set
    when it was probed but could not be reached.
    """

    url: str
    endpoint: str
    archived: Optional[bool] = None
    memento_count: int = 0
    first_memento: Optional[str] = None
    last_memento: Optional[str] = None
    live_status: Optional[int] = None
    likely_deleted: Optional[bool] = None
    live_error: Optional[str] = None
    archive_error: Optional[str] = None
    checked_at: str

    @model_validator(mode="after")
    def check_evidence(self) -> "ProbeVerdict":
        if self.archived and self.memento_count < 1:
            raise ValueError("archived=true needs at least one 2xx memento as evidence")
        return self

    @property
    def archived_label(self) -> str:
        if self.archived is None:
            return "indeterminate"
        return "true" if self.archived else "false"

    def row(self) -> Dict[str, object]:
        if self.live_status is not None:
            live = self.live_status
        else:
            live = "unreachable" if self.live_error else ""
        return {
            "url": self.url,
            "archived": self.archived_label,
            "first_memento": self.first_memento or "",
            "last_memento": self.last_memento or "",
            "live_status": live,
            "checked_at": self.checked_at,
            "endpoint": self.endpoint,
            "memento_count": self.memento_count,
        }

    @classmethod
    def from_row(cls, row: Dict[str, str]) -> "ProbeVerdict":
        archived = {"true": True, "false": False}.get(row["archived"])
        live = row.get("live_status", "")
        live_status = int(live) if live.isdigit() else None
        return cls(
            url=row["url"],
            endpoint=row.get("endpoint", ""),
            archived=archived,
            memento_count=int(row.get("memento_count") or 0),
            first_memento=row.get("first_memento") or None,
            last_memento=row.get("last_memento") or None,
            live_status=live_status,
            likely_deleted=live_status in DELETED_STATUSES if live_status is not None else None,
            live_error="unreachable" if live == "unreachable" else None,
            checked_at=row["checked_at"],
        )


class ArchiveProbe:
    """
    Archived/live checks over injected transports.

    The archive half goes through the CdxClient (and so through the shared
    fetcher, cache and rate limiter). The live half needs its own transport
    and is refused unless live_enabled is set.
    """

    def __init__(
        self,
        cdx_client: CdxClient,
        live_transport: Optional[Transport] = None,
        live_enabled: bool = False,
        live_limiter: Optional[RateLimiter] = None,
        timeout: float = 30.0,
        user_agent: str = "mementolens",
    ):
        self.cdx_client = cdx_client
        self.live_transport = live_transport
        self.live_enabled = live_enabled
        self.live_limiter = live_limiter
        self.timeout = timeout
        self.headers = {"User-Agent": user_agent}

    def is_archived(self, url: str, endpoint: ArchiveEndpoint) -> ProbeVerdict:
        """
        Archived half of a verdict: true iff the endpoint has a 2xx memento of
        exactly this URL.

        Raises:
            ParseError: url is not a URL
        """
        canonicalize(url)
        query = CdxQuery(endpoint=endpoint, target=url)
        try:
            result = self.cdx_client.fetch_result(query)
        except (NetworkError, MalformedResponse) as e:
            logger.warning("archive lookup for %s failed: %s", url, e)
            return ProbeVerdict(
                url=url, endpoint=endpoint.name, archived=None, archive_error=str(e), checked_at=isoformat_utc(utc_now())
            )
        ok = [r.timestamp for r in result.records if r.statuscode.isdigit() and 200 <= int(r.statuscode) < 300]
        return ProbeVerdict(
            url=url,
            endpoint=endpoint.name,
            archived=bool(ok),
            memento_count=len(ok),
            first_memento=min(ok) if ok else None,
            last_memento=max(ok) if ok else None,
            checked_at=result.fetched_at or isoformat_utc(utc_now()),
        )

    def is_live(self, url: str) -> LiveStatus:
        """
        One GET to the live URL (redirects followed).

        Raises:
            DisabledError: live probing not enabled
            Unreachable: the host could not be reached
        """
        if not self.live_enabled or self.live_transport is None:
            raise DisabledError("live probing is disabled; enable it explicitly to contact the live web")
        target = url if "://" in url else f"https://{url}"
        if self.live_limiter is not None:
            self.live_limiter.acquire((urlsplit(target).hostname or "").lower())
        try:
            response = self.live_transport.get(target, headers=self.headers, timeout=self.timeout, allow_redirects=True)
        except NetworkError as e:
            raise Unreachable(f"{url}: {e.reason}") from e
        return LiveStatus(status=response.status, likely_deleted=response.status in DELETED_STATUSES)

    def probe(self, url: str, endpoint: ArchiveEndpoint, live: bool = False) -> ProbeVerdict:
        verdict = self.is_archived(url, endpoint)
        if not live:
            return verdict
        try:
            status = self.is_live(url)
        except Unreachable as e:
            logger.warning("%s", e)
            return verdict.model_copy(update={"live_error": "unreachable"})
        return verdict.model_copy(update={"live_status": status.status, "likely_deleted": status.likely_deleted})

    def probe_all(
        self, urls: Sequence[str], endpoint: ArchiveEndpoint, live: bool = False, workers: int = 1
    ) -> List[ProbeVerdict]:
        """Verdicts in input order; probes run on a bounded worker pool."""
        if workers > 1 and len(urls) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(lambda u: self.probe(u, endpoint, live), urls))
        return [self.probe(u, endpoint, live) for u in urls]
