"""
Archive Endpoint Module

Describes CDX-speaking web archives (Wayback Machine, Arquivo.pt) and turns
CDX rows into replay URLs (URI-Ms) and back.
"""

import json
import re
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Set, Tuple
from urllib.parse import urlsplit

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from mementolens.errors import ConfigError, ParseError

TIMESTAMP_FORMAT = "%Y%m%d%H%M%S"
_SAMPLE_TIMESTAMP = "20170214033011"
_SAMPLE_ORIGINAL = "https://www.instagram.com/beyonce/"

# Wayback default column layout for space-delimited CDX output
DEFAULT_COLUMNS = ["urlkey", "timestamp", "original", "mimetype", "statuscode", "digest", "length"]


def parse_timestamp(timestamp: str) -> datetime:
    """Parse a 14-digit CDX timestamp; raises ValueError when it is not one."""
    if len(timestamp) != 14 or not timestamp.isdigit():
        raise ValueError(f"not a 14-digit timestamp: {timestamp!r}")
    return datetime.strptime(timestamp, TIMESTAMP_FORMAT)


class ArchiveEndpoint(BaseModel):
    """
    A CDX-speaking archive.

    The replay template must contain the placeholders {timestamp} and
    {original}; the Wayback Machine template is
    https://web.archive.org/web/{timestamp}/{original}.
    """

    name: str = Field(min_length=1)
    cdx_base: str
    replay_template: str
    supports_digest: bool = True
    supports_resume_key: bool = False
    output: str = Field(default="json", description="Value sent as the CDX output parameter")
    columns: List[str] = Field(default_factory=lambda: list(DEFAULT_COLUMNS))
    field_aliases: Dict[str, str] = Field(default_factory=dict)

    @field_validator("cdx_base")
    @classmethod
    def check_cdx_base(cls, value: str) -> str:
        parts = urlsplit(value)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise ValueError(f"cdx_base must be an absolute http(s) URL: {value!r}")
        return value

    @model_validator(mode="after")
    def check_replay_template(self) -> "ArchiveEndpoint":
        if "{timestamp}" not in self.replay_template or "{original}" not in self.replay_template:
            raise ValueError("replay_template needs {timestamp} and {original}")
        parts = urlsplit(self.fill_template(_SAMPLE_TIMESTAMP, _SAMPLE_ORIGINAL))
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise ValueError(f"replay_template does not produce an absolute URL: {self.replay_template!r}")
        return self

    def fill_template(self, timestamp: str, original: str) -> str:
        return self.replay_template.replace("{timestamp}", timestamp).replace("{original}", original)

    def build_urim(self, timestamp: str, original: str) -> str:
        """Instantiate the replay template for one capture."""
        parse_timestamp(timestamp)
        return self.fill_template(timestamp, original)

    def replay_prefix(self, timestamp: str) -> str:
        """Prefix that archive-rewritten URLs of this memento start with."""
        return self.fill_template(timestamp, "")

    def urim_pattern(self) -> "re.Pattern[str]":
        pattern = _URIM_PATTERNS.get(self.replay_template)
        if pattern is None:
            template = re.sub(r"^https?://", "", self.replay_template)
            pieces = re.split(r"(\{timestamp\}|\{original\})", template)
            regex = r"^https?://"
            for piece in pieces:
                if piece == "{timestamp}":
                    # replay modifiers such as id_, im_, if_
                    regex += r"(?P<timestamp>\d{14})(?:[a-z]{2}_)?"
                elif piece == "{original}":
                    regex += r"(?P<original>.+)"
                else:
                    regex += re.escape(piece)
            pattern = re.compile(regex + "$")
            _URIM_PATTERNS[self.replay_template] = pattern
        return pattern

    def parse_urim(self, urim: str) -> Tuple[str, str]:
        """
        Split a URI-M of this archive into (timestamp, URI-R).

        Raises:
            ParseError: urim was not produced by this endpoint's template
        """
        match = self.urim_pattern().match(urim)
        if not match:
            raise ParseError(f"not a {self.name} URI-M: {urim}")
        return match.group("timestamp"), match.group("original")

    def owns(self, urim: str) -> bool:
        return bool(self.urim_pattern().match(urim))

    def hosts(self) -> Set[str]:
        return {
            urlsplit(self.cdx_base).hostname or "",
            urlsplit(self.fill_template(_SAMPLE_TIMESTAMP, _SAMPLE_ORIGINAL)).hostname or "",
        }


_URIM_PATTERNS: Dict[str, "re.Pattern[str]"] = {}


class EndpointRegistry:
    """Named collection of ArchiveEndpoint entries; names are unique."""

    def __init__(self, endpoints: List[ArchiveEndpoint]):
        if not endpoints:
            raise ConfigError("endpoint registry is empty")
        self._endpoints: Dict[str, ArchiveEndpoint] = {}
        for endpoint in endpoints:
            if endpoint.name in self._endpoints:
                raise ConfigError(f"duplicate endpoint name {endpoint.name!r}")
            self._endpoints[endpoint.name] = endpoint

    def __iter__(self) -> Iterator[ArchiveEndpoint]:
        return iter(self._endpoints.values())

    def __contains__(self, name: object) -> bool:
        return name in self._endpoints

    def names(self) -> List[str]:
        return list(self._endpoints)

    def get(self, name: str) -> ArchiveEndpoint:
        try:
            return self._endpoints[name]
        except KeyError:
            raise ConfigError(
                f"unknown endpoint {name!r} (known: {', '.join(self._endpoints)})"
            ) from None

    def for_urim(self, urim: str) -> Optional[ArchiveEndpoint]:
        """The endpoint whose replay template produced urim, if any."""
        for endpoint in self._endpoints.values():
            if endpoint.owns(urim):
                return endpoint
        return None

    def archive_hosts(self) -> Set[str]:
        hosts: Set[str] = set()
        for endpoint in self._endpoints.values():
            hosts |= endpoint.hosts()
        return hosts


def load_registry(path: Path) -> EndpointRegistry:
    """
    Load the endpoint registry JSON file (a list of endpoint objects).

    Raises:
        ConfigError: missing file, invalid JSON, invalid entry, empty list
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"endpoint registry not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"endpoint registry is not valid JSON: {e}") from e
    if not isinstance(raw, list):
        raise ConfigError("endpoint registry must be a JSON list")
    try:
        return EndpointRegistry([ArchiveEndpoint(**entry) for entry in raw])
    except ValidationError as e:
        raise ConfigError(f"invalid endpoint entry: {e}") from e
