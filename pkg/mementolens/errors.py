"""
Error Types Module

Every failure raised by mementolens derives from MementoLensError so callers
can catch the whole family at a batch boundary.
"""

from typing import List, Optional


class MementoLensError(Exception):
    """Base class for all mementolens errors."""


# Transport / storage

class NetworkError(MementoLensError):
    """Transport failure that persisted after the retry budget."""

    def __init__(self, url: str, reason: str):
        super().__init__(f"network failure for {url}: {reason}")
        self.url = url
        self.reason = reason


class RateLimited(NetworkError):
    """The archive kept answering 429 past the backoff budget."""

    def __init__(self, url: str):
        super().__init__(url, "HTTP 429 persisted past backoff budget")


class BlockedRequest(MementoLensError):
    """A request targeted a host outside the configured allowlist."""

    def __init__(self, url: str, host: str):
        super().__init__(f"request to non-archive host {host!r} refused: {url}")
        self.url = url
        self.host = host


class Unreachable(MementoLensError):
    """The live web host could not be reached."""


class StorageError(MementoLensError):
    """Cache or report storage could not be read or written."""


# CDX

class MalformedResponse(MementoLensError):
    """A CDX response row could not be parsed."""

    def __init__(self, message: str, raw: str):
        super().__init__(f"{message}: {raw!r}")
        self.raw = raw


# Classification

class ParseError(MementoLensError):
    """Input that should be a URL (or a dataset line) did not parse."""

    def __init__(self, message: str, line: Optional[int] = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class UnknownStatus(MementoLensError):
    """CDX status code outside 2xx/3xx/4xx/5xx/'-'."""

    def __init__(self, status: str):
        super().__init__(f"unknown status code {status!r}")
        self.status = status


class UnresolvableRedirect(MementoLensError):
    """A 3xx memento whose final URI could not be determined."""


class HopLimitExceeded(UnresolvableRedirect):
    """A replay redirect chain was longer than the hop limit."""

    def __init__(self, urim: str, limit: int):
        super().__init__(f"more than {limit} redirects while resolving {urim}")
        self.urim = urim
        self.limit = limit


class NoLoginRedirects(MementoLensError):
    """Onset detection found no login-wall redirect at all."""

    def __init__(self, report=None):
        super().__init__("no redirect to the login page in the classified records")
        self.report = report


# Scraping

class FetchError(MementoLensError):
    """The memento page could not be fetched."""


class LoginPageContent(MementoLensError):
    """The memento body is the Instagram login page."""


class UnsupportedFormat(MementoLensError):
    """No page-format era matched the page source."""

    def __init__(self, attempted: List[str], detail: str = ""):
        tried = ", ".join(attempted) if attempted else "none"
        message = f"no extractor matched (attempted: {tried})"
        if detail:
            message += f"; {detail}"
        super().__init__(message)
        self.attempted = attempted


class EmptyDocument(MementoLensError):
    """The page source holds no embedded metadata block."""


class MalformedEmbeddedData(MementoLensError):
    """An embedded metadata block was found but could not be decoded."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class SchemaViolation(MementoLensError):
    """A mapped field carries an impossible type or value."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# Probing

class DisabledError(MementoLensError):
    """An operation that must be explicitly enabled was invoked."""


# Reports / datasets

class DuplicateHandle(MementoLensError):
    """A dataset lists the same handle twice."""

    def __init__(self, handle: str, line: int):
        super().__init__(f"line {line}: duplicate handle {handle!r}")
        self.handle = handle
        self.line = line


class MissingRun(MementoLensError):
    """The requested run directory (or one of its inputs) does not exist."""


class ConfigError(MementoLensError):
    """Configuration or endpoint registry is invalid."""
