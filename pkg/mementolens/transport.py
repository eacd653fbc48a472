"""
Transport Module

HTTP plumbing shared by every network-touching module:

- Transport: the minimal protocol (one GET, redirects not followed) that
  tests replace with an in-memory fake
- RequestsTransport: production transport on a requests.Session
- AllowlistTransport: refuses any host that is not an archive host
- RateLimiter: per-host minimum spacing between requests
- Fetcher: cache lookup, rate limiting and tenacity retries around a
  transport
"""

import logging
import threading
import time
from typing import Callable, Dict, Iterable, Optional, Protocol
from urllib.parse import urlsplit

import requests
from pydantic import BaseModel, Field
from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from mementolens.cache import ResponseCache, isoformat_utc, utc_now
from mementolens.errors import BlockedRequest, NetworkError, RateLimited

logger = logging.getLogger(__name__)

# headers worth keeping in the cache manifest
KEPT_HEADERS = ("location", "content-type")
RETRYABLE_STATUS = {429, 500, 502, 503, 504, 520, 522, 524}


class HttpResponse(BaseModel):
    """A response as seen by the rest of the package."""

    url: str
    status: int
    headers: Dict[str, str] = Field(default_factory=dict)
    body: bytes = Field(default=b"", repr=False)
    fetched_at: Optional[str] = None
    from_cache: bool = False

    @property
    def location(self) -> Optional[str]:
        return self.headers.get("location")

    @property
    def is_redirect(self) -> bool:
        return 300 <= self.status < 400 and bool(self.location)


class Transport(Protocol):
    def get(
        self,
        url: str,
        headers: Optional[Dict[str, str]] = None,
        timeout: Optional[float] = None,
        allow_redirects: bool = False,
    ) -> HttpResponse:
        """Issue one GET. Raises NetworkError on transport failure."""
        ...


class RequestsTransport:
    """Transport backed by a requests.Session."""

    def __init__(self, session: Optional[requests.Session] = None):
        self.session = session or requests.Session()

    def get(
        self,
        url: str,
        headers: Optional[Dict[str, str]] = None,
        timeout: Optional[float] = None,
        allow_redirects: bool = False,
    ) -> HttpResponse:
        try:
            response = self.session.get(
                url, headers=headers, timeout=timeout, allow_redirects=allow_redirects
            )
        except requests.RequestException as e:
            raise NetworkError(url, str(e)) from e
        return HttpResponse(
            url=response.url or url,
            status=response.status_code,
            headers={k.lower(): v for k, v in response.headers.items()},
            body=response.content,
        )


class AllowlistTransport:
    """Wraps a transport and refuses requests to hosts outside the allowlist."""

    def __init__(self, inner: Transport, allowed_hosts: Iterable[str]):
        self.inner = inner
        self.allowed_hosts = {h.lower() for h in allowed_hosts if h}

    def get(self, url, headers=None, timeout=None, allow_redirects=False) -> HttpResponse:
        host = (urlsplit(url).hostname or "").lower()
        if host not in self.allowed_hosts:
            raise BlockedRequest(url, host)
        return self.inner.get(url, headers=headers, timeout=timeout, allow_redirects=allow_redirects)


class RateLimiter:
    """
    Enforces a minimum interval of 1/rate seconds between requests to the
    same key (an archive host), regardless of how many threads call it.

    The clock and sleep functions are injectable so tests can run on a fake
    clock and read back the total wait.
    """

    def __init__(
        self,
        rate: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.interval = 1.0 / rate
        self.clock = clock
        self.sleep = sleep
        self.total_wait = 0.0
        self._next_slot: Dict[str, float] = {}
        self._lock = threading.Lock()

    def acquire(self, key: str) -> float:
        """Block until key may be used again; returns the seconds waited."""
        with self._lock:
            now = self.clock()
            slot = max(now, self._next_slot.get(key, now))
            self._next_slot[key] = slot + self.interval
            wait = slot - now
            self.total_wait += wait
        if wait > 0:
            self.sleep(wait)
        return wait


class _RetryableStatus(Exception):
    def __init__(self, response: HttpResponse):
        super().__init__(f"HTTP {response.status} for {response.url}")
        self.response = response


class Fetcher:
    """
    Cached, rate-limited, retrying GET.

    Every archive request in the package goes through one Fetcher so the
    per-host limit holds across modules. Responses with status < 500 (429
    excepted) are cached; retryable statuses and transport errors are retried
    with exponential backoff.

    Attributes:
        network_requests: number of requests that reached the transport
    """

    def __init__(
        self,
        transport: Transport,
        cache: Optional[ResponseCache] = None,
        limiter: Optional[RateLimiter] = None,
        retry_attempts: int = 3,
        backoff_base: float = 2.0,
        timeout: float = 60.0,
        user_agent: str = "mementolens",
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.transport = transport
        self.cache = cache
        self.limiter = limiter
        self.retry_attempts = retry_attempts
        self.backoff_base = backoff_base
        self.timeout = timeout
        self.headers = {"User-Agent": user_agent}
        self.sleep = sleep
        self.network_requests = 0
        self._count_lock = threading.Lock()

    def _attempt(self, url: str) -> HttpResponse:
        if self.limiter is not None:
            self.limiter.acquire((urlsplit(url).hostname or "").lower())
        with self._count_lock:
            self.network_requests += 1
        response = self.transport.get(url, headers=self.headers, timeout=self.timeout)
        if response.status in RETRYABLE_STATUS:
            raise _RetryableStatus(response)
        return response

    def fetch(self, url: str) -> HttpResponse:
        """
        GET url (redirects are not followed).

        Raises:
            RateLimited: 429 persisted through every attempt
            NetworkError: transport failure through every attempt
            BlockedRequest: the transport refused the host
        """
        key = ResponseCache.make_key(url)
        if self.cache is not None:
            entry = self.cache.get(key)
            if entry is not None:
                return HttpResponse(
                    url=url,
                    status=entry.status,
                    headers=entry.headers,
                    body=entry.body,
                    fetched_at=entry.fetched_at,
                    from_cache=True,
                )

        retrying = Retrying(
            stop=stop_after_attempt(self.retry_attempts),
            wait=wait_exponential(multiplier=self.backoff_base, max=60),
            retry=retry_if_exception_type((NetworkError, _RetryableStatus)),
            before_sleep=before_sleep_log(logger, logging.INFO),
            sleep=self.sleep,
            reraise=True,
        )
        try:
            response = retrying(self._attempt, url)
        except _RetryableStatus as e:
            if e.response.status == 429:
                raise RateLimited(url) from e
            logger.warning("giving up on %s after %d attempts (HTTP %d)", url, self.retry_attempts, e.response.status)
            return e.response.model_copy(update={"fetched_at": isoformat_utc(utc_now())})

        kept = {k: v for k, v in response.headers.items() if k in KEPT_HEADERS}
        if self.cache is not None:
            entry = self.cache.put(key, response.body, url=url, status=response.status, headers=kept)
            fetched_at = entry.fetched_at
        else:
            fetched_at = isoformat_utc(utc_now())
        return response.model_copy(update={"headers": kept, "fetched_at": fetched_at, "url": url})
