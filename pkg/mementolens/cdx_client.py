"""
CDX Client Module

Queries CDX Server APIs (Wayback Machine, Arquivo.pt) for the memento index
of one URI-R. Handles the three response shapes met in the wild:

- JSON array of arrays, header row first (Wayback ``output=json``)
- newline-delimited JSON objects (Arquivo.pt ``output=json``)
- space-delimited text, column layout declared by the endpoint registry

Column order is never assumed: a header row wins, otherwise the endpoint's
declared columns are used.
"""

import calendar
import json
import logging
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple
from urllib.parse import urlencode, urlsplit

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from mementolens.endpoints import ArchiveEndpoint, parse_timestamp
from mementolens.errors import MalformedResponse, NetworkError
from mementolens.transport import Fetcher

logger = logging.getLogger(__name__)

BUILTIN_ALIASES = {
    "url": "original",
    "mime": "mimetype",
    "status": "statuscode",
    "timestamp": "timestamp",
    "original": "original",
    "mimetype": "mimetype",
    "statuscode": "statuscode",
    "digest": "digest",
}
REQUIRED_FIELDS = ("timestamp", "original", "mimetype", "statuscode")


def expand_bound(value: Optional[str], upper: bool = False) -> Optional[str]:
    """
    Pad a partial timestamp (YYYY, YYYYMM, YYYYMMDD, ...) to 14 digits.

    Lower bounds pad with the earliest instant, upper bounds with the latest,
    so both ends stay inclusive.

    Example:
        >>> expand_bound("201908", upper=True)
        '20190831235959'
    """
    if value is None:
        return None
    digits = value.replace("-", "").replace(":", "").replace("T", "").replace(" ", "")
    if not digits.isdigit() or len(digits) < 4 or len(digits) > 14 or len(digits) % 2:
        raise ValueError(f"not a timestamp bound: {value!r}")
    if not upper:
        floor = "00000101000000"
        return digits + floor[len(digits):]
    year = int(digits[:4])
    month = int(digits[4:6]) if len(digits) >= 6 else 12
    last_day = calendar.monthrange(year, month)[1]
    ceiling = f"{year:04d}{month:02d}{last_day:02d}235959"
    return digits + ceiling[len(digits):]


class CdxQuery(BaseModel):
    """An exact-URL memento index query against one endpoint."""

    model_config = ConfigDict(populate_by_name=True)

    endpoint: ArchiveEndpoint
    target: str
    from_: Optional[str] = Field(default=None, alias="from")
    to: Optional[str] = None
    match_scope: Literal["exact"] = "exact"
    page_limit: Optional[int] = Field(default=None, gt=0)

    @field_validator("target")
    @classmethod
    def check_target(cls, value: str) -> str:
        value = value.strip()
        if not value:
            raise ValueError("target must not be empty")
        if "://" in value and urlsplit(value).scheme not in ("http", "https"):
            raise ValueError(f"target must be scheme-less or http(s): {value!r}")
        return value

    @field_validator("from_", "to")
    @classmethod
    def check_bound(cls, value: Optional[str]) -> Optional[str]:
        if value is not None:
            parse_timestamp(value)
        return value

    @model_validator(mode="after")
    def check_order(self) -> "CdxQuery":
        if self.from_ and self.to and self.from_ > self.to:
            raise ValueError(f"from ({self.from_}) is after to ({self.to})")
        return self

    def params(self, resume_key: Optional[str] = None) -> List[Tuple[str, str]]:
        """Query parameters in a fixed order (the order is part of the cache key)."""
        params = [("url", self.target), ("output", self.endpoint.output)]
        if self.from_:
            params.append(("from", self.from_))
        if self.to:
            params.append(("to", self.to))
        if self.page_limit and self.endpoint.supports_resume_key:
            params.append(("limit", str(self.page_limit)))
            params.append(("showResumeKey", "true"))
            if resume_key:
                params.append(("resumeKey", resume_key))
        return params

    def request_url(self, resume_key: Optional[str] = None) -> str:
        return f"{self.endpoint.cdx_base}?{urlencode(self.params(resume_key))}"


class CdxRecord(BaseModel):
    """One row of a CDX response."""

    model_config = ConfigDict(frozen=True)

    timestamp: str
    original: str
    mimetype: str
    statuscode: str
    digest: Optional[str] = None
    endpoint_name: str

    @field_validator("timestamp")
    @classmethod
    def check_timestamp(cls, value: str) -> str:
        parse_timestamp(value)
        return value

    @field_validator("statuscode")
    @classmethod
    def check_statuscode(cls, value: str) -> str:
        if value != "-" and not value.isdigit():
            raise ValueError(f"statuscode must be digits or '-': {value!r}")
        return value


class CdxResult(BaseModel):
    """Records plus fetch metadata for one query."""

    records: List[CdxRecord]
    pages: int
    fetched_at: Optional[str] = None
    from_cache: bool = True


def build_urim(endpoint: ArchiveEndpoint, record: CdxRecord) -> str:
    """
    URI-M of a CDX record in the endpoint's replay system.

    Example:
        >>> build_urim(wayback, record)
        'https://web.archive.org/web/20170214033011/https://www.instagram.com/beyonce/'
    """
    return endpoint.build_urim(record.timestamp, record.original)


def _record_from_fields(fields: Dict[str, Any], endpoint: ArchiveEndpoint, raw: str) -> CdxRecord:
    aliases = {**BUILTIN_ALIASES, **endpoint.field_aliases}
    mapped: Dict[str, Any] = {}
    for name, value in fields.items():
        target = aliases.get(name)
        if target and target not in mapped:
            mapped[target] = value
    missing = [name for name in REQUIRED_FIELDS if mapped.get(name) in (None, "")]
    if missing:
        raise MalformedResponse(f"CDX row lacks {', '.join(missing)}", raw)
    digest = mapped.get("digest")
    if not endpoint.supports_digest or digest in (None, "", "-"):
        digest = None
    try:
        return CdxRecord(
            timestamp=str(mapped["timestamp"]),
            original=str(mapped["original"]),
            mimetype=str(mapped["mimetype"]),
            statuscode=str(mapped["statuscode"]),
            digest=str(digest) if digest is not None else None,
            endpoint_name=endpoint.name,
        )
    except ValidationError as e:
        raise MalformedResponse(f"invalid CDX row ({e.errors()[0]['msg']})", raw) from e


def _zip_row(columns: Sequence[str], values: Sequence[Any], raw: str) -> Dict[str, Any]:
    if len(values) != len(columns):
        raise MalformedResponse(f"expected {len(columns)} columns, got {len(values)}", raw)
    return dict(zip(columns, values))


def _parse_json_array(text: str, endpoint: ArchiveEndpoint) -> Tuple[List[CdxRecord], Optional[str]]:
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedResponse(f"undecodable JSON CDX body ({e.msg})", text[:200]) from e
    if not isinstance(rows, list):
        raise MalformedResponse("JSON CDX body is not a list", text[:200])

    resume_key = None
    # showResumeKey appends an empty row and then [resumeKey]
    if len(rows) >= 2 and rows[-2] == [] and isinstance(rows[-1], list) and len(rows[-1]) == 1:
        resume_key = str(rows[-1][0])
        rows = rows[:-2]
    rows = [row for row in rows if row != []]
    if not rows:
        return [], resume_key

    columns: Sequence[str] = endpoint.columns
    first = rows[0]
    if isinstance(first, list) and "timestamp" in first:
        columns, rows = [str(c) for c in first], rows[1:]

    records = []
    for row in rows:
        raw = json.dumps(row)
        if not isinstance(row, list):
            raise MalformedResponse("JSON CDX row is not a list", raw)
        records.append(_record_from_fields(_zip_row(columns, row, raw), endpoint, raw))
    return records, resume_key


def _parse_ndjson(text: str, endpoint: ArchiveEndpoint) -> Tuple[List[CdxRecord], Optional[str]]:
    records = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedResponse(f"undecodable CDX line ({e.msg})", line) from e
        if not isinstance(obj, dict):
            raise MalformedResponse("CDX line is not an object", line)
        records.append(_record_from_fields(obj, endpoint, line))
    return records, None


def _parse_text(
    text: str, endpoint: ArchiveEndpoint, expect_resume_key: bool = False
) -> Tuple[List[CdxRecord], Optional[str]]:
    lines = text.splitlines()
    resume_key = None
    # a resume key is one token on the last line, after a blank line
    if (
        expect_resume_key
        and len(lines) >= 2
        and not lines[-2].strip()
        and len(lines[-1].split()) == 1
    ):
        resume_key = lines[-1].strip()
        lines = lines[:-2]
    records = []
    for line in lines:
        if not line.strip():
            continue
        records.append(_record_from_fields(_zip_row(endpoint.columns, line.split(), line), endpoint, line))
    return records, resume_key


def parse_cdx_body(
    text: str, endpoint: ArchiveEndpoint, expect_resume_key: bool = False
) -> Tuple[List[CdxRecord], Optional[str]]:
    """
    Parse one CDX response body.

    Args:
        expect_resume_key: the request asked for showResumeKey; only then is a
            trailing text line read as a resume key instead of a row

    Returns:
        (records in response order, resume key or None)

    Raises:
        MalformedResponse: a row failed to parse; carries the raw row text
    """
    stripped = text.strip()
    if not stripped:
        return [], None
    if stripped.startswith("["):
        return _parse_json_array(stripped, endpoint)
    if stripped.startswith("{"):
        return _parse_ndjson(stripped, endpoint)
    return _parse_text(text, endpoint, expect_resume_key)


class CdxClient:
    """
    Fetches memento indexes through a shared Fetcher.

    Pages are fetched one at a time; each page is cached under its own full
    request URL, so a warm cache replays the whole query without touching
    the network.
    """

    MAX_PAGES = 10_000

    def __init__(self, fetcher: Fetcher):
        self.fetcher = fetcher

    def fetch_result(self, query: CdxQuery) -> CdxResult:
        records: List[CdxRecord] = []
        fetched: List[str] = []
        from_cache = True
        resume_key: Optional[str] = None
        pages = 0
        while True:
            url = query.request_url(resume_key)
            response = self.fetcher.fetch(url)
            pages += 1
            if response.status != 200:
                raise NetworkError(url, f"CDX endpoint answered HTTP {response.status}")
            from_cache = from_cache and response.from_cache
            if response.fetched_at:
                fetched.append(response.fetched_at)
            paged = bool(query.page_limit and query.endpoint.supports_resume_key)
            body = response.body.decode("utf-8", errors="replace")
            page_records, next_key = parse_cdx_body(body, query.endpoint, expect_resume_key=paged)
            records.extend(page_records)
            if not (next_key and paged):
                break
            if next_key == resume_key or pages >= self.MAX_PAGES:
                logger.warning("stopping pagination for %s at page %d", query.target, pages)
                break
            resume_key = next_key

        records.sort(key=lambda r: r.timestamp)
        logger.info(
            "%s: %d records for %s (%d page%s%s)",
            query.endpoint.name,
            len(records),
            query.target,
            pages,
            "" if pages == 1 else "s",
            ", cached" if from_cache else "",
        )
        return CdxResult(records=records, pages=pages, fetched_at=max(fetched) if fetched else None, from_cache=from_cache)

    def fetch_cdx(self, query: CdxQuery) -> List[CdxRecord]:
        """
        Memento index of query.target, ascending by timestamp.

        Raises:
            NetworkError / RateLimited: from the fetcher, after retries
            MalformedResponse: a row failed to parse
        """
        return self.fetch_result(query).records


def main():
    """Fetch one account's memento index from the Wayback Machine."""
    from pathlib import Path

    from mementolens.cache import ResponseCache
    from mementolens.config import DEFAULT_ENDPOINTS
    from mementolens.endpoints import load_registry
    from mementolens.transport import RateLimiter, RequestsTransport

    logging.basicConfig(level=logging.INFO)
    registry = load_registry(DEFAULT_ENDPOINTS)
    fetcher = Fetcher(RequestsTransport(), cache=ResponseCache(Path(".mementolens-cache")), limiter=RateLimiter(1.0))
    client = CdxClient(fetcher)

    query = CdxQuery(
        endpoint=registry.get("wayback"),
        target="instagram.com/beyonce/",
        from_=expand_bound("2017"),
        to=expand_bound("2017", upper=True),
    )
    result = client.fetch_result(query)
    print(f"{len(result.records)} mementos in {result.pages} page(s)")
    for record in result.records[:5]:
        print(f"  {record.timestamp}  {record.statuscode}  {record.original}")


if __name__ == "__main__":
    main()
