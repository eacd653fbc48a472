"""
Replay Outcome Classifier Module

Assigns every CDX record a replay-outcome class:

- 2xx -> success
- 3xx -> redirect to the login wall, URI-canonicalization redirect, or other
  redirect, decided on the final URI of the replay redirect chain
- 4xx / 5xx -> client / server error
- warc/revisit ("-" status) -> the class of the capture it duplicates,
  found by digest or, failing that, by replaying the URI-M

Redirect chains are followed through archive replay requests only; the live
site is never contacted.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple
from urllib.parse import quote, unquote, urljoin, urlsplit

from pydantic import BaseModel, ConfigDict, Field, model_validator

from mementolens.cdx_client import CdxRecord, build_urim
from mementolens.endpoints import EndpointRegistry
from mementolens.errors import (
    HopLimitExceeded,
    NetworkError,
    ParseError,
    UnknownStatus,
    UnresolvableRedirect,
)
from mementolens.transport import Fetcher, HttpResponse

logger = logging.getLogger(__name__)

DEFAULT_HOP_LIMIT = 10
LOGIN_PATH = "/accounts/login"
REVISIT_MIMETYPE = "warc/revisit"
_PATH_SAFE = "/:@!$&'()*+,;=-._~"

ResolvedVia = Literal["digest", "network", "none"]


# ---------------------------------------------------------------------------
# URL helpers


def _split(uri: str):
    uri = uri.strip()
    if not uri or any(c.isspace() for c in uri):
        raise ParseError(f"not a URL: {uri!r}")
    if "://" not in uri:
        uri = "http://" + uri.lstrip("/")
    parts = urlsplit(uri)
    host = (parts.hostname or "").lower()
    if parts.scheme not in ("http", "https") or "." not in host:
        raise ParseError(f"not a URL: {uri!r}")
    return parts, host


def canonicalize(uri: str) -> str:
    """
    Canonical form used to decide whether two URIs name the same resource.

    Drops the scheme, lowercases the host, strips a leading ``www.``, the
    default port, trailing slashes and the fragment, and normalizes percent
    encoding of the path. The result is scheme-less and canonicalize is
    idempotent on it.

    Example:
        >>> canonicalize("http://instagram.com/katyperry")
        'instagram.com/katyperry'
        >>> canonicalize("https://www.instagram.com/katyperry/")
        'instagram.com/katyperry'
    """
    parts, host = _split(uri)
    if host.startswith("www."):
        host = host[4:]
    port = parts.port
    if port and port not in (80, 443):
        host = f"{host}:{port}"
    path = quote(unquote(parts.path), safe=_PATH_SAFE).rstrip("/")
    canonical = host + path
    if parts.query:
        canonical += "?" + parts.query
    return canonical


def is_login_uri(uri: str) -> bool:
    """
    True iff uri is Instagram's login page.

    The host must be instagram.com or a subdomain of it; the path, with the
    query string removed and trailing slashes ignored, must be
    /accounts/login or lie below it.

    Raises:
        ParseError: uri is not a URL
    """
    parts, host = _split(uri)
    if host != "instagram.com" and not host.endswith(".instagram.com"):
        return False
    path = unquote(parts.path).lower().rstrip("/")
    return path == LOGIN_PATH or path.startswith(LOGIN_PATH + "/")


def is_canonicalization_redirect(record: CdxRecord, final_uri: str) -> bool:
    """True iff final_uri and record.original are the same resource once canonicalized."""
    try:
        return canonicalize(record.original) == canonicalize(final_uri)
    except ParseError:
        return False


def account_handle(uri: str) -> str:
    """First path segment of an account-page URI-R, lowercased ('' when absent)."""
    try:
        parts, _ = _split(uri)
    except ParseError:
        return ""
    segments = [s for s in parts.path.split("/") if s]
    return segments[0].lower() if segments else ""


# ---------------------------------------------------------------------------
# Types


class ReplayKind(str, Enum):
    SUCCESS = "success"
    REDIRECT_LOGIN = "redirect_login"
    REDIRECT_CANONICAL = "redirect_canonical"
    REDIRECT_OTHER = "redirect_other"
    CLIENT_ERROR = "client_error"
    SERVER_ERROR = "server_error"
    REVISIT = "revisit"


REDIRECT_KINDS = {ReplayKind.REDIRECT_LOGIN, ReplayKind.REDIRECT_CANONICAL, ReplayKind.REDIRECT_OTHER}


class MementoClass(BaseModel):
    """
    Replay outcome of one memento.

    Exactly one kind per memento. A revisit carries the class it resolves to
    in ``resolution`` (None means unresolved); a resolution is never itself a
    revisit.
    """

    model_config = ConfigDict(frozen=True)

    kind: ReplayKind
    final_uri: Optional[str] = None
    status: Optional[int] = None
    unresolved: bool = False
    resolution: Optional["MementoClass"] = None

    @model_validator(mode="after")
    def check_shape(self) -> "MementoClass":
        if self.resolution is not None:
            if self.kind is not ReplayKind.REVISIT:
                raise ValueError("only revisits carry a resolution")
            if self.resolution.kind is ReplayKind.REVISIT:
                raise ValueError("revisit resolution must not be another revisit")
        return self

    @classmethod
    def success(cls) -> "MementoClass":
        return cls(kind=ReplayKind.SUCCESS)

    @classmethod
    def redirect_to_login(cls, final_uri: str) -> "MementoClass":
        return cls(kind=ReplayKind.REDIRECT_LOGIN, final_uri=final_uri)

    @classmethod
    def redirect_canonical(cls, final_uri: str) -> "MementoClass":
        return cls(kind=ReplayKind.REDIRECT_CANONICAL, final_uri=final_uri)

    @classmethod
    def redirect_other(cls, final_uri: Optional[str], unresolved: bool = False) -> "MementoClass":
        return cls(kind=ReplayKind.REDIRECT_OTHER, final_uri=final_uri, unresolved=unresolved)

    @classmethod
    def client_error(cls, status: int) -> "MementoClass":
        return cls(kind=ReplayKind.CLIENT_ERROR, status=status)

    @classmethod
    def server_error(cls, status: int) -> "MementoClass":
        return cls(kind=ReplayKind.SERVER_ERROR, status=status)

    @classmethod
    def revisit(cls, resolution: Optional["MementoClass"]) -> "MementoClass":
        return cls(kind=ReplayKind.REVISIT, resolution=resolution)

    @property
    def is_revisit(self) -> bool:
        return self.kind is ReplayKind.REVISIT

    @property
    def label(self) -> str:
        """Stable label written to classified.csv."""
        if self.kind is ReplayKind.REVISIT:
            return "revisit/" + (self.resolution.label if self.resolution else "unresolved")
        return self.kind.value

    @classmethod
    def from_label(
        cls, label: str, final_uri: Optional[str] = None, status: Optional[int] = None
    ) -> "MementoClass":
        """Inverse of ``label`` given the row's final_uri and status columns."""
        if label.startswith("revisit/"):
            inner = label.split("/", 1)[1]
            if inner == "unresolved":
                return cls.revisit(None)
            return cls.revisit(cls.from_label(inner, final_uri, status))
        kind = ReplayKind(label)
        if kind in REDIRECT_KINDS:
            return cls(kind=kind, final_uri=final_uri or None, unresolved=kind is ReplayKind.REDIRECT_OTHER and not final_uri)
        if kind in (ReplayKind.CLIENT_ERROR, ReplayKind.SERVER_ERROR):
            return cls(kind=kind, status=status)
        return cls(kind=kind)


class RedirectResolution(BaseModel):
    """Where a URI-M's replay redirect chain ends."""

    start_urim: str
    final_uri: str
    final_urim: str
    hops: int = Field(ge=0)
    final_status: int


class ClassifiedRecord(BaseModel):
    """A CDX record with its class; one row of classified.csv."""

    record: CdxRecord
    memento_class: MementoClass
    final_uri: Optional[str] = None
    hops: int = 0
    resolved_via: ResolvedVia = "none"
    dataset: Optional[str] = None

    @property
    def timestamp(self) -> str:
        return self.record.timestamp

    def row(self) -> Dict[str, object]:
        return {
            "endpoint": self.record.endpoint_name,
            "timestamp": self.record.timestamp,
            "original": self.record.original,
            "status": self.record.statuscode,
            "class": self.memento_class.label,
            "final_uri": self.final_uri or "",
            "hops": self.hops,
            "resolved_via": self.resolved_via,
            "dataset": self.dataset or "",
        }


# ---------------------------------------------------------------------------
# Resolution


class ReplayResolver:
    """
    Follows replay redirect chains inside the archive.

    Each hop is a single archive GET (redirects are not followed by the
    transport). A Location that leaves the archive ends the chain without
    being requested.
    """

    def __init__(self, fetcher: Fetcher, registry: EndpointRegistry, hop_limit: int = DEFAULT_HOP_LIMIT):
        self.fetcher = fetcher
        self.registry = registry
        self.hop_limit = hop_limit

    def urim_for(self, record: CdxRecord) -> str:
        return build_urim(self.registry.get(record.endpoint_name), record)

    def follow(self, urim: str) -> Tuple[RedirectResolution, HttpResponse]:
        """
        Follow the chain from urim; returns the resolution and last response.

        Raises:
            HopLimitExceeded: more than hop_limit redirects
            NetworkError: a hop could not be fetched
        """
        current = urim
        hops = 0
        response = self.fetcher.fetch(current)
        while response.is_redirect:
            target = urljoin(current, response.location)
            hops += 1
            if hops > self.hop_limit:
                raise HopLimitExceeded(urim, self.hop_limit)
            if self.registry.for_urim(target) is None:
                # leaves the archive: report it, never request it
                return self._resolution(urim, target, hops, response.status), response
            current = target
            response = self.fetcher.fetch(current)
        return self._resolution(urim, current, hops, response.status), response

    def _resolution(self, start: str, final_urim: str, hops: int, status: int) -> RedirectResolution:
        endpoint = self.registry.for_urim(final_urim)
        final_uri = endpoint.parse_urim(final_urim)[1] if endpoint else final_urim
        return RedirectResolution(
            start_urim=start, final_uri=final_uri, final_urim=final_urim, hops=hops, final_status=status
        )

    def resolve_redirect(self, urim: str) -> RedirectResolution:
        """Final URI-R (archive prefix stripped) and hop count of urim's replay."""
        resolution, _ = self.follow(urim)
        logger.debug("%s -> %s in %d hop(s)", urim, resolution.final_uri, resolution.hops)
        return resolution


def _class_from_resolution(record: CdxRecord, resolution: RedirectResolution) -> MementoClass:
    """Class of a revisit replay that ended at resolution."""
    status = resolution.final_status
    if resolution.hops and 200 <= status < 300 and is_canonicalization_redirect(record, resolution.final_uri):
        # the archive only moved to another memento of the same URI-R
        return MementoClass.success()
    if resolution.hops == 0:
        if 200 <= status < 300:
            return MementoClass.success()
        if 400 <= status < 500:
            return MementoClass.client_error(status)
        if status >= 500:
            return MementoClass.server_error(status)
    return _redirect_class(record, resolution)


def _redirect_class(record: CdxRecord, resolution: RedirectResolution) -> MementoClass:
    """Login wall wins over canonicalization; both are judged on the final URI-R."""
    final = resolution.final_uri
    try:
        if is_login_uri(final):
            return MementoClass.redirect_to_login(final)
    except ParseError:
        return MementoClass.redirect_other(final)
    if is_canonicalization_redirect(record, final):
        return MementoClass.redirect_canonical(final)
    return MementoClass.redirect_other(final)


def resolve_revisit(
    record: CdxRecord,
    prior_records: Sequence[ClassifiedRecord],
    resolver: Optional[ReplayResolver] = None,
) -> ClassifiedRecord:
    """
    Resolve a warc/revisit memento.

    The most recent earlier record with the same digest supplies the class
    (a matching revisit is chased to its own resolution). Without a digest
    match the URI-M is replayed. If neither works the revisit is unresolved,
    which is a value, not an error.

    Args:
        record: the revisit record
        prior_records: classified records of the same URI-R, timestamps <= record's
        resolver: replay resolver for the network fallback (None disables it)
    """
    if record.digest:
        for prior in reversed(prior_records):
            if prior.record.digest != record.digest or prior.record.timestamp > record.timestamp:
                continue
            matched = prior.memento_class
            if matched.is_revisit:
                matched = matched.resolution
            if matched is not None:
                return ClassifiedRecord(
                    record=record,
                    memento_class=MementoClass.revisit(matched),
                    final_uri=prior.final_uri,
                    hops=prior.hops,
                    resolved_via="digest",
                )
            break

    if resolver is not None:
        try:
            resolution = resolver.resolve_redirect(resolver.urim_for(record))
        except (UnresolvableRedirect, NetworkError) as e:
            logger.warning("revisit %s %s unresolved: %s", record.timestamp, record.original, e)
        else:
            return ClassifiedRecord(
                record=record,
                memento_class=MementoClass.revisit(_class_from_resolution(record, resolution)),
                final_uri=resolution.final_uri,
                hops=resolution.hops,
                resolved_via="network",
            )

    return ClassifiedRecord(record=record, memento_class=MementoClass.revisit(None))


def is_revisit_record(record: CdxRecord) -> bool:
    return record.statuscode == "-" or record.mimetype.lower() == REVISIT_MIMETYPE


def classify_record(
    record: CdxRecord,
    resolver: Optional[ReplayResolver],
    prior_records: Sequence[ClassifiedRecord] = (),
) -> ClassifiedRecord:
    """
    Classify one record (see classify); returns the full classified row.

    Raises:
        UnknownStatus: status outside 2xx/3xx/4xx/5xx/'-'
    """
    if is_revisit_record(record):
        return resolve_revisit(record, prior_records, resolver)

    status = int(record.statuscode)
    if 200 <= status < 300:
        return ClassifiedRecord(record=record, memento_class=MementoClass.success())
    if 300 <= status < 400:
        if resolver is None:
            return ClassifiedRecord(record=record, memento_class=MementoClass.redirect_other(None, unresolved=True))
        try:
            resolution = resolver.resolve_redirect(resolver.urim_for(record))
        except (UnresolvableRedirect, NetworkError) as e:
            logger.warning("redirect %s %s unresolved: %s", record.timestamp, record.original, e)
            return ClassifiedRecord(record=record, memento_class=MementoClass.redirect_other(None, unresolved=True))
        return ClassifiedRecord(
            record=record,
            memento_class=_redirect_class(record, resolution),
            final_uri=resolution.final_uri,
            hops=resolution.hops,
            resolved_via="network",
        )
    if 400 <= status < 500:
        return ClassifiedRecord(record=record, memento_class=MementoClass.client_error(status))
    if 500 <= status < 600:
        return ClassifiedRecord(record=record, memento_class=MementoClass.server_error(status))
    raise UnknownStatus(record.statuscode)


def classify(
    record: CdxRecord,
    resolver: Optional[ReplayResolver],
    prior_records: Sequence[ClassifiedRecord] = (),
) -> MementoClass:
    """
    Replay-outcome class of one CDX record.

    Args:
        record: the CDX row
        resolver: redirect/revisit resolution provider
        prior_records: earlier classified records of the same URI-R, used for
            revisit digest matching

    Raises:
        UnknownStatus: status outside 2xx/3xx/4xx/5xx/'-'
    """
    return classify_record(record, resolver, prior_records).memento_class


def classify_records(
    records: Iterable[CdxRecord],
    resolver: Optional[ReplayResolver],
    workers: int = 1,
) -> List[ClassifiedRecord]:
    """
    Classify one account's records.

    Non-revisit records are independent and run on a worker pool; revisits
    are then resolved in timestamp order so each sees every earlier class.
    Records with an unknown status are logged and skipped.
    """
    ordered = sorted(records, key=lambda r: r.timestamp)
    direct = [r for r in ordered if not is_revisit_record(r)]

    def _safe(record: CdxRecord) -> Optional[ClassifiedRecord]:
        try:
            return classify_record(record, resolver)
        except UnknownStatus as e:
            logger.warning("skipping %s %s: %s", record.timestamp, record.original, e)
            return None

    if workers > 1 and len(direct) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            direct_results = list(pool.map(_safe, direct))
    else:
        direct_results = [_safe(r) for r in direct]
    by_record = {id(r): c for r, c in zip(direct, direct_results)}

    classified: List[ClassifiedRecord] = []
    for record in ordered:
        if is_revisit_record(record):
            classified.append(resolve_revisit(record, classified, resolver))
        else:
            result = by_record[id(record)]
            if result is not None:
                classified.append(result)
    return classified


MementoClass.model_rebuild()
