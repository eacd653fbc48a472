"""
Page Format Era Module

Instagram account pages changed their embedded-metadata layout several times
between 2012 and 2018. Each layout is an era: a structural signature (the
script marker plus the path of the profile object inside the embedded
document), a date hint that orders candidates, and a field map from canonical
fields to source paths. Eras are data (data/eras.json), so a new layout is an
added entry, not new code.
"""

import json
from datetime import date, datetime
from pathlib import Path
from typing import Any, Dict, Iterator, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, ValidationError, model_validator

from mementolens.errors import ConfigError

PACKAGE_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_ERAS_PATH = PACKAGE_ROOT / "data" / "eras.json"

ImageRole = Literal["display", "thumbnail", "other-variant"]

MISSING = object()


def resolve_path(document: Any, path: str) -> Any:
    """
    Follow a dotted path (numeric segments index lists) into a document.

    Returns MISSING when any segment is absent.

    Example:
        >>> resolve_path({"a": [{"b": 1}]}, "a.0.b")
        1
    """
    current = document
    if not path:
        return current
    for segment in path.split("."):
        if isinstance(current, dict):
            if segment not in current:
                return MISSING
            current = current[segment]
        elif isinstance(current, list) and segment.isdigit():
            index = int(segment)
            if index >= len(current):
                return MISSING
            current = current[index]
        else:
            return MISSING
    return current


def first_present(document: Any, paths: Sequence[str]) -> Tuple[Any, Optional[str]]:
    """First (value, path) among paths whose value is present and not null."""
    for path in paths:
        value = resolve_path(document, path)
        if value is not MISSING and value is not None:
            return value, path
    return MISSING, None


DISPLAY_LABELS = {"display", "standard_resolution"}
THUMBNAIL_LABELS = {"thumbnail"}


def role_for_label(label: str) -> ImageRole:
    """Role of an image resource, derived from its output label."""
    if label in DISPLAY_LABELS:
        return "display"
    if label in THUMBNAIL_LABELS:
        return "thumbnail"
    return "other-variant"


class ImageField(BaseModel):
    label: str
    paths: List[str]

    @property
    def role(self) -> ImageRole:
        return role_for_label(self.label)


class PageEra(BaseModel):
    """One page-source layout and how to read it."""

    id: str = Field(min_length=1)
    starts: date
    ends: date
    marker: str = "window._sharedData"
    root: str
    profile: Dict[str, List[str]]
    media_list: List[str] = Field(default_factory=list)
    media_node: Optional[str] = None
    media: Dict[str, List[str]] = Field(default_factory=dict)
    images: List[ImageField] = Field(default_factory=list)
    image_variants: Optional[str] = None
    extra: Dict[str, List[str]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_range(self) -> "PageEra":
        if self.ends < self.starts:
            raise ValueError(f"era {self.id}: ends before it starts")
        if "username" not in self.profile:
            raise ValueError(f"era {self.id}: profile map lacks username")
        return self

    @property
    def timestamp_hint(self) -> Tuple[date, date]:
        return self.starts, self.ends

    def covers(self, moment: date) -> bool:
        return self.starts <= moment <= self.ends

    def profile_root(self, document: Any) -> Any:
        return resolve_path(document, self.root)

    def matches(self, document: Any) -> bool:
        """Structural signature: the profile object exists at root."""
        return isinstance(self.profile_root(document), dict)


class EraRegistry:
    """Ordered eras; order breaks ties between overlapping date hints."""

    def __init__(self, eras: List[PageEra]):
        if not eras:
            raise ConfigError("era registry is empty")
        ids = [e.id for e in eras]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate era ids in {ids}")
        self.eras = list(eras)

    def __iter__(self) -> Iterator[PageEra]:
        return iter(self.eras)

    def __len__(self) -> int:
        return len(self.eras)

    def get(self, era_id: str) -> PageEra:
        for era in self.eras:
            if era.id == era_id:
                return era
        raise ConfigError(f"unknown era {era_id!r}")

    @property
    def coverage(self) -> Tuple[date, date]:
        return min(e.starts for e in self.eras), max(e.ends for e in self.eras)

    def candidates(self, timestamp: str) -> List[PageEra]:
        """Eras whose hint contains the timestamp first, then the rest."""
        moment = datetime.strptime(timestamp, "%Y%m%d%H%M%S").date()
        hinted = [e for e in self.eras if e.covers(moment)]
        return hinted + [e for e in self.eras if e not in hinted]


def load_eras(path: Path = DEFAULT_ERAS_PATH) -> EraRegistry:
    """
    Load the era registry JSON file.

    Raises:
        ConfigError: unreadable file or invalid entry
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return EraRegistry([PageEra(**entry) for entry in raw])
    except FileNotFoundError as e:
        raise ConfigError(f"era registry not found: {path}") from e
    except (json.JSONDecodeError, TypeError) as e:
        raise ConfigError(f"era registry is not a JSON list of objects: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"invalid era entry: {e}") from e
