"""
Memento Scraper Module

Scrapes archived Instagram account pages (Wayback Machine URI-Ms) into a
profileUser / userMedia JSON document:

1. fetch the replayed page through the archive (redirects followed inside
   the archive only)
2. locate and decode the script-embedded metadata block
3. detect the page-format era and map its fields onto the canonical schema
4. optionally issue a GET for every image resource to record whether the
   archive holds it

Pages that render blank often still carry this metadata, so the scrape works
on page source, never on rendered content.
"""

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from functools import lru_cache
from typing import Any, Dict, Iterable, List, Literal, Optional, Sequence, Tuple
from urllib.parse import urljoin, urlsplit

from bs4 import BeautifulSoup
from pydantic import BaseModel, Field, field_validator

from mementolens.cache import isoformat_utc, utc_now
from mementolens.classifier import DEFAULT_HOP_LIMIT, ReplayResolver, account_handle, is_login_uri
from mementolens.endpoints import EndpointRegistry
from mementolens.eras import MISSING, EraRegistry, ImageRole, PageEra, first_present, load_eras, resolve_path, role_for_label
from mementolens.errors import (
    BlockedRequest,
    EmptyDocument,
    FetchError,
    LoginPageContent,
    MalformedEmbeddedData,
    NetworkError,
    ParseError,
    SchemaViolation,
    UnresolvableRedirect,
    UnsupportedFormat,
)
from mementolens.transport import Fetcher

logger = logging.getLogger(__name__)

SHORTCODE_RE = re.compile(r"^[A-Za-z0-9_-]+$")
SHORTCODE_IN_LINK = re.compile(r"/p/([A-Za-z0-9_-]+)")
HASHTAG_RE = re.compile(r"#(\w+)", re.UNICODE)
MENTION_RE = re.compile(r"(?<![\w.])@([A-Za-z0-9_](?:[A-Za-z0-9_.]*[A-Za-z0-9_])?)")
DEFAULT_MARKER = "window._sharedData"
LOGIN_PAGE_ENTRY = "LoginAndSignupPage"

TrendMetric = Literal["followed_by", "media", "follows"]


# ---------------------------------------------------------------------------
# Canonical schema


class ImageResource(BaseModel):
    """An archive-rewritten image URL and, when probed, its replay status."""

    label: str
    uri: str
    role: ImageRole
    status_code: Optional[int] = None
    probe_error: Optional[str] = None

    def to_document(self, key: str = "url") -> Dict[str, Any]:
        doc: Dict[str, Any] = {key: self.uri}
        if self.status_code is not None:
            doc["status_code"] = self.status_code
        if self.probe_error is not None:
            doc["probe_error"] = self.probe_error
        return doc

    @classmethod
    def from_document(cls, label: str, doc: Dict[str, Any], key: str = "url") -> "ImageResource":
        return cls(
            label=label,
            uri=doc[key],
            role="display" if key == "uri" else role_for_label(label),
            status_code=doc.get("status_code"),
            probe_error=doc.get("probe_error"),
        )


class ProfileCounts(BaseModel):
    media: Optional[int] = Field(default=None, ge=0)
    followed_by: Optional[int] = Field(default=None, ge=0)
    follows: Optional[int] = Field(default=None, ge=0)


class ProfileUser(BaseModel):
    username: str = Field(min_length=1)
    bio: Optional[str] = None
    website: Optional[str] = None
    profile_picture: Optional[ImageResource] = None
    full_name: Optional[str] = None
    count: ProfileCounts = Field(default_factory=ProfileCounts)
    id: Optional[str] = Field(default=None, pattern=r"^\d+$")
    is_verified: Optional[bool] = None

    def to_document(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"username": self.username}
        if self.bio is not None:
            doc["bio"] = self.bio
        if self.website is not None:
            doc["website"] = self.website
        if self.profile_picture is not None:
            doc["profile_picture"] = self.profile_picture.to_document(key="uri")
        if self.full_name is not None:
            doc["full_name"] = self.full_name
        doc["count"] = self.count.model_dump(exclude_none=True)
        if self.id is not None:
            doc["id"] = self.id
        if self.is_verified is not None:
            doc["isVerified"] = self.is_verified
        return doc

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "ProfileUser":
        picture = doc.get("profile_picture")
        return cls(
            username=doc["username"],
            bio=doc.get("bio"),
            website=doc.get("website"),
            profile_picture=ImageResource.from_document("profile_picture", picture, key="uri") if picture else None,
            full_name=doc.get("full_name"),
            count=ProfileCounts(**doc.get("count", {})),
            id=doc.get("id"),
            is_verified=doc.get("isVerified"),
        )


def iso_from_unix(seconds: int) -> str:
    """UTC ISO-8601 rendering of UNIX seconds, e.g. 1485974340 -> 2017-02-01T18:39:00Z."""
    return datetime.fromtimestamp(seconds, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class MediaPost(BaseModel):
    short_code: str
    caption: Optional[str] = None
    likes_count: Optional[int] = Field(default=None, ge=0)
    comments_count: Optional[int] = Field(default=None, ge=0)
    comments_disabled: Optional[bool] = None
    created_time: Optional[int] = Field(default=None, ge=0)
    images: List[ImageResource] = Field(default_factory=list)
    extra: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("short_code")
    @classmethod
    def check_short_code(cls, value: str) -> str:
        if not SHORTCODE_RE.match(value):
            raise ValueError(f"not a shortcode: {value!r}")
        return value

    @property
    def created_time_iso(self) -> Optional[str]:
        return iso_from_unix(self.created_time) if self.created_time is not None else None

    @property
    def post_url(self) -> str:
        return f"https://www.instagram.com/p/{self.short_code}/"

    def to_document(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {}
        if self.comments_disabled is not None:
            doc["comments_disabled"] = self.comments_disabled
        if self.comments_count is not None:
            doc["comments"] = {"count": self.comments_count}
        if self.caption is not None:
            doc["caption"] = {"text": self.caption}
        doc["short_code"] = self.short_code
        if self.likes_count is not None:
            doc["likes"] = {"count": self.likes_count}
        if self.created_time is not None:
            doc["created_time"] = self.created_time
            doc["created_time_iso"] = self.created_time_iso
        doc["images"] = {image.label: image.to_document() for image in self.images}
        if self.extra:
            doc["extra"] = dict(self.extra)
        return doc

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "MediaPost":
        post = cls(
            short_code=doc["short_code"],
            caption=(doc.get("caption") or {}).get("text"),
            likes_count=(doc.get("likes") or {}).get("count"),
            comments_count=(doc.get("comments") or {}).get("count"),
            comments_disabled=doc.get("comments_disabled"),
            created_time=doc.get("created_time"),
            images=[ImageResource.from_document(label, image) for label, image in doc.get("images", {}).items()],
            extra=doc.get("extra", {}),
        )
        if "created_time_iso" in doc and doc["created_time_iso"] != post.created_time_iso:
            raise SchemaViolation("created_time_iso", f"disagrees with created_time {post.created_time}")
        return post


class ScrapeResult(BaseModel):
    """Everything recovered from one account-page memento."""

    urim: str
    timestamp: str
    era: str
    scraped_at: str
    profile_user: ProfileUser
    user_media: List[MediaPost] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    @property
    def handle(self) -> str:
        return self.profile_user.username.lower()

    def images(self) -> List[ImageResource]:
        found = [self.profile_user.profile_picture] if self.profile_user.profile_picture else []
        for post in self.user_media:
            found.extend(post.images)
        return found

    def to_document(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            "urim": self.urim,
            "timestamp": self.timestamp,
            "era": self.era,
            "scraped_at": self.scraped_at,
            "profileUser": self.profile_user.to_document(),
            "userMedia": [post.to_document() for post in self.user_media],
        }
        if self.warnings:
            doc["warnings"] = list(self.warnings)
        return doc

    def to_json(self) -> str:
        """UTF-8 friendly JSON: non-ASCII text is written as characters."""
        return json.dumps(self.to_document(), indent=4, ensure_ascii=False) + "\n"

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "ScrapeResult":
        return cls(
            urim=doc["urim"],
            timestamp=doc["timestamp"],
            era=doc["era"],
            scraped_at=doc["scraped_at"],
            profile_user=ProfileUser.from_document(doc["profileUser"]),
            user_media=[MediaPost.from_document(p) for p in doc.get("userMedia", [])],
            warnings=doc.get("warnings", []),
        )


# ---------------------------------------------------------------------------
# Page source


def decode_page(body: bytes) -> Tuple[str, List[str]]:
    """Decode a page as UTF-8, replacing and reporting undecodable bytes."""
    try:
        return body.decode("utf-8"), []
    except UnicodeDecodeError:
        text = body.decode("utf-8", errors="replace")
        replaced = text.count("�") - body.count("�".encode("utf-8"))
        return text, [f"{replaced} undecodable byte sequence(s) replaced with U+FFFD"]


def _byte_offset(html: str, index: int) -> int:
    return len(html[:index].encode("utf-8", errors="surrogatepass"))


def _script_blocks(html: str, marker: str) -> Iterable[Tuple[str, int]]:
    """(text, start index in html) of each script containing marker."""
    found = False
    soup = BeautifulSoup(html, "html.parser")
    for script in soup.find_all("script"):
        text = script.string
        if text and marker in text:
            found = True
            yield str(text), max(html.find(str(text)), 0)
    if not found and marker in html:
        # unterminated script (capture cut mid-page)
        yield html, 0


def extract_embedded_json(html: str, markers: Sequence[str] = (DEFAULT_MARKER,)) -> Dict[str, Any]:
    """
    Decode the script-embedded metadata block of a page.

    Archive banners and rewritten URLs around the block are ignored; the
    block is decoded from the first '{' after ``marker =``.

    Raises:
        EmptyDocument: no script carries any marker
        MalformedEmbeddedData: a block was found but is not valid JSON; the
            error carries the UTF-8 byte offset of the failure in html
    """
    decoder = json.JSONDecoder()
    for marker in markers:
        assignment = re.compile(re.escape(marker) + r"\s*=\s*")
        for text, base in _script_blocks(html, marker):
            match = assignment.search(text)
            if not match:
                continue
            try:
                document, _ = decoder.raw_decode(text, match.end())
            except json.JSONDecodeError as e:
                raise MalformedEmbeddedData(
                    f"embedded {marker} block is not valid JSON ({e.msg})", _byte_offset(html, base + e.pos)
                ) from e
            if not isinstance(document, dict):
                raise MalformedEmbeddedData(f"embedded {marker} block is not an object", _byte_offset(html, base + match.end()))
            return document
    raise EmptyDocument("page source holds no embedded metadata block")


def is_login_page(html: str, document: Optional[Dict[str, Any]] = None) -> bool:
    """True when the page is Instagram's login page rather than an account page."""
    if document is not None and resolve_path(document, f"entry_data.{LOGIN_PAGE_ENTRY}") is not MISSING:
        return True
    if f'"{LOGIN_PAGE_ENTRY}"' in html:
        return True
    soup = BeautifulSoup(html, "html.parser")
    for tag, attr, value in (("link", "rel", "canonical"), ("meta", "property", "og:url")):
        element = soup.find(tag, attrs={attr: value})
        target = element.get("href" if tag == "link" else "content") if element else None
        if target:
            try:
                if is_login_uri(target):
                    return True
            except ParseError:
                pass
    title = soup.title.get_text(strip=True).lower() if soup.title else ""
    return title.startswith("login") and "instagram" in title


@lru_cache(maxsize=1)
def default_eras() -> EraRegistry:
    return load_eras()


def detect_era(
    html: str,
    timestamp: str,
    eras: Optional[EraRegistry] = None,
    document: Optional[Dict[str, Any]] = None,
) -> PageEra:
    """
    The first era whose structural signature matches the page.

    Eras whose date hint contains the timestamp are tried first. Pages dated
    outside the registry's overall window are refused rather than guessed.

    Raises:
        UnsupportedFormat: lists every era attempted
    """
    eras = eras or default_eras()
    if not html or not html.strip():
        raise UnsupportedFormat([], "empty page source")
    start, end = eras.coverage
    moment = datetime.strptime(timestamp, "%Y%m%d%H%M%S").date()
    if not start <= moment <= end:
        raise UnsupportedFormat([], f"{moment} is outside the supported window {start}..{end}")

    candidates = eras.candidates(timestamp)
    if document is None:
        try:
            document = extract_embedded_json(html, sorted({e.marker for e in candidates}))
        except (EmptyDocument, MalformedEmbeddedData) as e:
            raise UnsupportedFormat([e.id for e in candidates], str(e)) from e

    attempted = []
    for era in candidates:
        attempted.append(era.id)
        if era.marker in html and era.matches(document):
            logger.debug("era %s matched for %s", era.id, timestamp)
            return era
    raise UnsupportedFormat(attempted)


# ---------------------------------------------------------------------------
# Normalization


def _clean_text(value: str, path: str, warnings: Optional[List[str]]) -> str:
    try:
        value.encode("utf-8")
        return value
    except UnicodeEncodeError:
        if warnings is not None:
            warnings.append(f"{path}: lone surrogate replaced with U+FFFD")
        return value.encode("utf-16", "surrogatepass").decode("utf-16", "replace")


class _FieldReader:
    """Typed access to one source object, raising SchemaViolation with full paths."""

    def __init__(self, source: Any, prefix: str, warnings: Optional[List[str]]):
        self.source = source
        self.prefix = prefix
        self.warnings = warnings

    def raw(self, paths: Sequence[str]) -> Tuple[Any, str]:
        value, path = first_present(self.source, paths)
        return value, f"{self.prefix}.{path}" if path else self.prefix

    def text(self, paths: Sequence[str]) -> Optional[str]:
        value, path = self.raw(paths)
        if value is MISSING:
            return None
        if not isinstance(value, str):
            raise SchemaViolation(path, f"expected text, got {type(value).__name__}")
        return _clean_text(value, path, self.warnings)

    def count(self, paths: Sequence[str]) -> Optional[int]:
        value, path = self.raw(paths)
        if value is MISSING:
            return None
        if isinstance(value, str) and value.isdigit():
            value = int(value)
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaViolation(path, f"expected a count, got {value!r}")
        if value < 0:
            raise SchemaViolation(path, f"negative count {value}")
        return value

    def flag(self, paths: Sequence[str]) -> Optional[bool]:
        value, path = self.raw(paths)
        if value is MISSING:
            return None
        if not isinstance(value, bool):
            raise SchemaViolation(path, f"expected a boolean, got {value!r}")
        return value

    def identifier(self, paths: Sequence[str]) -> Optional[str]:
        value, path = self.raw(paths)
        if value is MISSING:
            return None
        if isinstance(value, int) and not isinstance(value, bool):
            value = str(value)
        if not isinstance(value, str) or not value.isdigit():
            raise SchemaViolation(path, f"expected a numeric id, got {value!r}")
        return value


def archive_url(url: str, replay_prefix: Optional[str]) -> str:
    """
    Rewrite a page-source URL into the memento's archive namespace.

    Protocol-relative URLs get https; URLs already on the archive host are
    kept as they are.

    Example:
        >>> archive_url("http://www.beyonce.com/", "https://web.archive.org/web/20170214033011/")
        'https://web.archive.org/web/20170214033011/http://www.beyonce.com/'
    """
    if url.startswith("//"):
        url = "https:" + url
    if not replay_prefix:
        return url
    if url.startswith("/"):
        return urljoin(replay_prefix, url)
    if (urlsplit(url).hostname or "") == (urlsplit(replay_prefix).hostname or ""):
        return url
    return replay_prefix + url


def _image(
    label: str, url: Optional[str], replay_prefix: Optional[str], role: Optional[ImageRole] = None
) -> Optional[ImageResource]:
    if not url:
        return None
    return ImageResource(label=label, uri=archive_url(url, replay_prefix), role=role or role_for_label(label))


def _short_code(reader: _FieldReader, paths: Sequence[str]) -> str:
    value, path = reader.raw(paths)
    if value is MISSING or not isinstance(value, str):
        raise SchemaViolation(path, "post has no shortcode")
    if "/" in value:
        match = SHORTCODE_IN_LINK.search(value)
        if not match:
            raise SchemaViolation(path, f"no shortcode in link {value!r}")
        value = match.group(1)
    if not SHORTCODE_RE.match(value):
        raise SchemaViolation(path, f"not a shortcode: {value!r}")
    return value


def _post(node: Dict[str, Any], era: PageEra, prefix: str, replay_prefix: Optional[str], warnings) -> MediaPost:
    reader = _FieldReader(node, prefix, warnings)
    fields = era.media
    images: List[ImageResource] = []
    for spec in era.images:
        image = _image(spec.label, reader.text(spec.paths), replay_prefix)
        if image:
            images.append(image)
    if era.image_variants:
        variants = resolve_path(node, era.image_variants)
        if isinstance(variants, list):
            taken = {i.label for i in images}
            for index, variant in enumerate(variants):
                src = variant.get("src") if isinstance(variant, dict) else None
                if not isinstance(src, str) or not src.strip():
                    continue
                label = f"variant_{variant.get('config_width', index)}"
                if label in taken:
                    label = f"{label}_{index}"
                taken.add(label)
                images.append(_image(label, src, replay_prefix))

    extra = {}
    for key, paths in era.extra.items():
        value, _ = first_present(node, paths)
        if value is not MISSING and (value is None or isinstance(value, (str, int, float, bool))):
            extra[key] = value

    return MediaPost(
        short_code=_short_code(reader, fields.get("short_code", [])),
        caption=reader.text(fields.get("caption", [])),
        likes_count=reader.count(fields.get("likes", [])),
        comments_count=reader.count(fields.get("comments", [])),
        comments_disabled=reader.flag(fields.get("comments_disabled", [])),
        created_time=reader.count(fields.get("created_time", [])),
        images=images,
        extra=extra,
    )


def normalize(
    document: Dict[str, Any],
    era: PageEra,
    replay_prefix: Optional[str] = None,
    warnings: Optional[List[str]] = None,
) -> Tuple[ProfileUser, List[MediaPost]]:
    """
    Map an era's raw document onto ProfileUser and MediaPost.

    Absent source fields stay absent. URLs are rewritten under
    replay_prefix when one is given.

    Raises:
        SchemaViolation: a mapped field has an impossible type or value;
            carries the field path within the document
    """
    root = era.profile_root(document)
    if not isinstance(root, dict):
        raise SchemaViolation(era.root, "profile object missing")
    reader = _FieldReader(root, era.root, warnings)
    fields = era.profile

    username = reader.text(fields["username"])
    if not username:
        raise SchemaViolation(f"{era.root}.{fields['username'][0]}", "username missing or empty")
    website = reader.text(fields.get("website", []))
    profile = ProfileUser(
        username=username,
        bio=reader.text(fields.get("bio", [])),
        website=archive_url(website, replay_prefix) if website else None,
        profile_picture=_image(
            "profile_picture", reader.text(fields.get("profile_picture", [])), replay_prefix, role="display"
        ),
        full_name=reader.text(fields.get("full_name", [])),
        count=ProfileCounts(
            media=reader.count(fields.get("media", [])),
            followed_by=reader.count(fields.get("followed_by", [])),
            follows=reader.count(fields.get("follows", [])),
        ),
        id=reader.identifier(fields.get("id", [])),
        is_verified=reader.flag(fields.get("is_verified", [])),
    )

    posts: List[MediaPost] = []
    items, list_path = first_present(root, era.media_list)
    if items is not MISSING:
        if not isinstance(items, list):
            raise SchemaViolation(f"{era.root}.{list_path}", "post list is not a list")
        for index, item in enumerate(items):
            prefix = f"{era.root}.{list_path}.{index}"
            node = item
            if era.media_node:
                node = item.get(era.media_node) if isinstance(item, dict) else None
                prefix += f".{era.media_node}"
            if not isinstance(node, dict):
                raise SchemaViolation(prefix, "post is not an object")
            posts.append(_post(node, era, prefix, replay_prefix, warnings))
    return profile, posts


# ---------------------------------------------------------------------------
# Scraping


class ImageProbe(BaseModel):
    status_code: Optional[int] = None
    error: Optional[str] = None


class MementoScraper:
    """
    Scrapes account-page URI-Ms through the shared Fetcher.

    Example:
        >>> scraper = MementoScraper(fetcher, registry)
        >>> result = scraper.scrape(
        ...     "https://web.archive.org/web/20170214033011/https://www.instagram.com/beyonce/",
        ...     probe_images=False,
        ... )
        >>> result.profile_user.count.followed_by
        94709950
    """

    def __init__(
        self,
        fetcher: Fetcher,
        registry: EndpointRegistry,
        eras: Optional[EraRegistry] = None,
        hop_limit: int = DEFAULT_HOP_LIMIT,
        workers: int = 4,
    ):
        self.registry = registry
        self.eras = eras or default_eras()
        self.resolver = ReplayResolver(fetcher, registry, hop_limit)
        self.workers = max(1, workers)

    def fetch_page(self, urim: str) -> Tuple[str, List[str], Optional[str]]:
        """
        Replayed page source of urim.

        Returns:
            (html, decode warnings, fetched_at of the final response)

        Raises:
            FetchError: network failure, redirect loop, or a non-2xx replay
            LoginPageContent: the replay ends on the login page
        """
        try:
            resolution, response = self.resolver.follow(urim)
        except (NetworkError, UnresolvableRedirect, BlockedRequest) as e:
            raise FetchError(f"cannot fetch {urim}: {e}") from e
        try:
            if is_login_uri(resolution.final_uri):
                raise LoginPageContent(f"{urim} replays the login page {resolution.final_uri}")
        except ParseError:
            pass
        if not 200 <= resolution.final_status < 300:
            raise FetchError(f"{urim} replayed HTTP {resolution.final_status}")
        html, warnings = decode_page(response.body)
        return html, warnings, response.fetched_at

    def probe_image(self, uri: str) -> ImageProbe:
        """
        GET an archived image; final status after archive-internal redirects.

        Network failures are reported in the result, never raised.
        """
        try:
            resolution, _ = self.resolver.follow(uri)
        except (NetworkError, UnresolvableRedirect, BlockedRequest) as e:
            logger.warning("image probe failed for %s: %s", uri, e)
            return ImageProbe(error=str(e))
        return ImageProbe(status_code=resolution.final_status)

    def probe_images(self, images: Sequence[ImageResource]) -> None:
        """Probe every distinct image URI concurrently and record the outcomes in place."""
        uris = sorted({image.uri for image in images})
        if not uris:
            return
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            outcomes = dict(zip(uris, pool.map(self.probe_image, uris)))
        for image in images:
            outcome = outcomes[image.uri]
            image.status_code = outcome.status_code
            image.probe_error = outcome.error

    def scrape(self, urim: str, probe_images: bool = True) -> ScrapeResult:
        """
        Scrape one account-page memento.

        Raises:
            FetchError, LoginPageContent, EmptyDocument, MalformedEmbeddedData,
            UnsupportedFormat, SchemaViolation
        """
        endpoint = self.registry.for_urim(urim)
        if endpoint is None:
            raise FetchError(f"not a URI-M of a registered archive: {urim}")
        timestamp, _ = endpoint.parse_urim(urim)

        html, warnings, fetched_at = self.fetch_page(urim)
        try:
            document = extract_embedded_json(html, sorted({e.marker for e in self.eras}))
        except EmptyDocument:
            if is_login_page(html):
                raise LoginPageContent(f"{urim} holds the login page") from None
            raise
        if is_login_page(html, document):
            raise LoginPageContent(f"{urim} holds the login page")
        era = detect_era(html, timestamp, self.eras, document)
        profile, posts = normalize(document, era, endpoint.replay_prefix(timestamp), warnings)

        result = ScrapeResult(
            urim=urim,
            timestamp=timestamp,
            era=era.id,
            scraped_at=fetched_at or isoformat_utc(utc_now()),
            profile_user=profile,
            user_media=posts,
            warnings=warnings,
        )
        if probe_images:
            self.probe_images(result.images())
        logger.info("%s: era %s, %d post(s)", urim, era.id, len(posts))
        return result


def output_name(result: ScrapeResult, registry: Optional[EndpointRegistry] = None) -> str:
    """Batch output file name: {handle}_{timestamp}.json."""
    handle = result.handle
    endpoint = registry.for_urim(result.urim) if registry else None
    if endpoint is not None:
        handle = account_handle(endpoint.parse_urim(result.urim)[1]) or handle
    return f"{handle}_{result.timestamp}.json"


# ---------------------------------------------------------------------------
# Downstream analyses over scrape results


class ShortcodeSighting(BaseModel):
    short_code: str
    first_seen: str
    post_url: str


def collect_shortcodes(results: Iterable[ScrapeResult]) -> List[ShortcodeSighting]:
    """Every shortcode across results, once, tagged with the earliest memento holding it."""
    first_seen: Dict[str, str] = {}
    for result in results:
        for post in result.user_media:
            seen = first_seen.get(post.short_code)
            if seen is None or result.timestamp < seen:
                first_seen[post.short_code] = result.timestamp
    return [
        ShortcodeSighting(short_code=code, first_seen=ts, post_url=f"https://www.instagram.com/p/{code}/")
        for code, ts in sorted(first_seen.items(), key=lambda item: (item[1], item[0]))
    ]


class TrendPoint(BaseModel):
    timestamp: str
    value: Optional[int] = None


def trend_series(results: Iterable[ScrapeResult], metric: TrendMetric = "followed_by") -> List[TrendPoint]:
    """One point per result; a result lacking the metric is a gap (None), never 0."""
    if metric not in ("followed_by", "media", "follows"):
        raise ValueError(f"unknown metric {metric!r}")
    return [
        TrendPoint(timestamp=r.timestamp, value=getattr(r.profile_user.count, metric))
        for r in sorted(results, key=lambda r: r.timestamp)
    ]


class TagSighting(BaseModel):
    kind: Literal["hashtag", "mention"]
    tag: str
    first_seen: str
    mementos: int


def extract_tags(results: Iterable[ScrapeResult]) -> List[TagSighting]:
    """
    Hashtags and mentions in bios and captions.

    Tags are case-folded; each carries the earliest memento it appears in
    and the number of mementos mentioning it.
    """
    first_seen: Dict[Tuple[str, str], str] = {}
    mementos: Dict[Tuple[str, str], int] = {}
    for result in results:
        texts = [result.profile_user.bio or ""] + [post.caption or "" for post in result.user_media]
        found = set()
        for text in texts:
            found.update(("hashtag", t.lower()) for t in HASHTAG_RE.findall(text))
            found.update(("mention", t.lower()) for t in MENTION_RE.findall(text))
        for key in found:
            mementos[key] = mementos.get(key, 0) + 1
            if key not in first_seen or result.timestamp < first_seen[key]:
                first_seen[key] = result.timestamp
    return [
        TagSighting(kind=kind, tag=tag, first_seen=first_seen[(kind, tag)], mementos=mementos[(kind, tag)])
        for kind, tag in sorted(first_seen)
    ]


# ---------------------------------------------------------------------------
# Provenance audit

DERIVED_KEYS = {"created_time_iso", "status_code", "probe_error"}
_REPLAY_PREFIX_RE = r"^https?://[^/]+/(?:[^/]+/)*?{ts}(?:[a-z]{{2}}_)?/"


class ProvenanceAudit(BaseModel):
    """Source offset (UTF-8 bytes into the page) of every scraped leaf value."""

    traced: Dict[str, int] = Field(default_factory=dict)
    untraceable: List[str] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.untraceable


def _leaves(value: Any, path: str) -> Iterable[Tuple[str, Any]]:
    if isinstance(value, dict):
        for key, child in value.items():
            if key in DERIVED_KEYS:
                continue
            yield from _leaves(child, f"{path}.{key}" if path else key)
    elif isinstance(value, list):
        for index, child in enumerate(value):
            yield from _leaves(child, f"{path}.{index}")
    else:
        yield path, value


def _string_forms(text: str) -> List[str]:
    forms = [text, json.dumps(text)[1:-1], json.dumps(text, ensure_ascii=False)[1:-1]]
    forms += [f.replace("/", "\\/") for f in forms]
    return list(dict.fromkeys(f for f in forms if f))


def _locate(html: str, value: Any, timestamp: str) -> Optional[int]:
    if isinstance(value, bool):
        match = re.search(r":\s*" + ("true" if value else "false") + r"\b", html)
        return match.start() if match else None
    if isinstance(value, (int, float)):
        match = re.search(rf"(?<![\d.]){re.escape(str(value))}(?![\d.])", html)
        return match.start() if match else None
    if isinstance(value, str):
        candidates = [value]
        stripped = re.sub(_REPLAY_PREFIX_RE.format(ts=re.escape(timestamp)), "", value)
        if stripped != value:
            candidates.append(stripped)
            if stripped.startswith("https://"):
                candidates.append(stripped[len("https:"):])
        for candidate in candidates:
            for form in _string_forms(candidate):
                index = html.find(form)
                if index >= 0:
                    return index
    return None


def audit_provenance(result: ScrapeResult, html: str) -> ProvenanceAudit:
    """
    Trace every leaf of result back to the page source.

    Declared derivations (created_time_iso, probe outcomes) and run metadata
    are skipped. A leaf that cannot be found in html is listed as
    untraceable.
    """
    document = result.to_document()
    audit = ProvenanceAudit()
    for section in ("profileUser", "userMedia"):
        for path, value in _leaves(document[section], section):
            if value is None:
                continue
            index = _locate(html, value, result.timestamp)
            if index is None:
                audit.untraceable.append(path)
            else:
                audit.traced[path] = _byte_offset(html, index)
    return audit


def main():
    """Scrape one archived account page and print the profile it carries."""
    from pathlib import Path

    from mementolens.cache import ResponseCache
    from mementolens.config import DEFAULT_ENDPOINTS
    from mementolens.endpoints import load_registry
    from mementolens.transport import RateLimiter, RequestsTransport

    logging.basicConfig(level=logging.INFO)
    registry = load_registry(DEFAULT_ENDPOINTS)
    fetcher = Fetcher(RequestsTransport(), cache=ResponseCache(Path(".mementolens-cache")), limiter=RateLimiter(1.0))
    scraper = MementoScraper(fetcher, registry)

    result = scraper.scrape(
        "https://web.archive.org/web/20170214033011/https://www.instagram.com/beyonce/", probe_images=False
    )
    print(f"era: {result.era}")
    print(json.dumps(result.to_document()["profileUser"], indent=2, ensure_ascii=False))
    print(f"posts: {len(result.user_media)}")


if __name__ == "__main__":
    main()
