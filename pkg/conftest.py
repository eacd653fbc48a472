"""
Shared pytest fixtures

Every network-touching test runs against FakeTransport, an in-memory transport
that serves recorded fixture bodies and synthetic archive responses, counts
requests and records the hosts it was asked for. Tests that reach real
archives carry the ``network`` marker and only run with --run-network.
"""

import json
from datetime import date, timedelta
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union
from urllib.parse import parse_qs, urlsplit

import pytest

from mementolens.cache import ResponseCache
from mementolens.cdx_client import CdxClient, CdxRecord
from mementolens.classifier import ClassifiedRecord, MementoClass, ReplayResolver
from mementolens.config import DEFAULT_ENDPOINTS
from mementolens.endpoints import load_registry
from mementolens.errors import NetworkError
from mementolens.transport import AllowlistTransport, Fetcher, HttpResponse, RateLimiter

FIXTURES = Path(__file__).parent / "fixtures"
WAYBACK_CDX = "https://web.archive.org/cdx/search/cdx"
ARQUIVO_CDX = "https://arquivo.pt/wayback/cdx"
WAYBACK_COLUMNS = ["urlkey", "timestamp", "original", "mimetype", "statuscode", "digest", "length"]
LOGIN_TARGET = "www.instagram.com/accounts/login"

BEYONCE_URIM = "https://web.archive.org/web/20170214033011/https://www.instagram.com/beyonce/"
BEYONCE_PREFIX = "https://web.archive.org/web/20170214033011/"


def pytest_addoption(parser):
    parser.addoption(
        "--run-network", action="store_true", default=False, help="run smoke tests against real web archives"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "network: reaches real web archives (opt in with --run-network)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-network"):
        return
    skip = pytest.mark.skip(reason="needs --run-network")
    for item in items:
        if "network" in item.keywords:
            item.add_marker(skip)


# ---------------------------------------------------------------------------
# Fakes


class FakeClock:
    """Monotonic clock whose sleep advances time instantly."""

    def __init__(self, start: float = 1_000.0):
        self.now = start
        self.sleeps: List[float] = []

    def __call__(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.sleeps.append(seconds)
        self.now += seconds


Reply = Union[HttpResponse, Exception]


class FakeTransport:
    """
    In-memory Transport.

    Exact-URL routes answer first; CDX handlers are keyed on (endpoint base,
    url parameter) so query parameter order and encoding do not matter.
    Anything else is a 404.
    """

    def __init__(self):
        self.routes: Dict[str, List[Reply]] = {}
        self.cdx: Dict[Tuple[str, str], Callable[[Dict[str, str]], Union[str, HttpResponse]]] = {}
        self.requests: List[str] = []

    @property
    def hosts(self) -> set:
        return {(urlsplit(u).hostname or "").lower() for u in self.requests}

    @staticmethod
    def response(url: str, body: Union[str, bytes] = b"", status: int = 200, headers=None) -> HttpResponse:
        if isinstance(body, str):
            body = body.encode("utf-8")
        return HttpResponse(url=url, status=status, headers=dict(headers or {}), body=body)

    def add(self, url: str, body: Union[str, bytes] = b"", status: int = 200, headers=None) -> "FakeTransport":
        self.routes[url] = [self.response(url, body, status, headers)]
        return self

    def add_sequence(self, url: str, replies: Sequence[Reply]) -> "FakeTransport":
        """Replies in order; the last one repeats."""
        self.routes[url] = list(replies)
        return self

    def redirect(self, url: str, location: str, status: int = 302) -> "FakeTransport":
        return self.add(url, b"", status, {"location": location})

    def fail(self, url: str, reason: str = "connection reset") -> "FakeTransport":
        self.routes[url] = [NetworkError(url, reason)]
        return self

    def add_cdx(self, base: str, target: str, body) -> "FakeTransport":
        """body is the response text or a callable taking the query parameters."""
        self.cdx[(base, target)] = body if callable(body) else (lambda params: body)
        return self

    def get(self, url, headers=None, timeout=None, allow_redirects=False) -> HttpResponse:
        self.requests.append(url)
        replies = self.routes.get(url)
        if replies:
            reply = replies.pop(0) if len(replies) > 1 else replies[0]
            if isinstance(reply, Exception):
                raise reply
            return reply
        parts = urlsplit(url)
        params = {key: values[-1] for key, values in parse_qs(parts.query).items()}
        handler = self.cdx.get((f"{parts.scheme}://{parts.netloc}{parts.path}", params.get("url", "")))
        if handler is not None:
            body = handler(params)
            if isinstance(body, HttpResponse):
                return body
            return self.response(url, body, 200, {"content-type": "text/plain"})
        return self.response(url, b"", 404)


# ---------------------------------------------------------------------------
# Builders


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def urim(timestamp: str, original: str) -> str:
    return f"https://web.archive.org/web/{timestamp}/{original}"


def cdx_row(
    timestamp: str,
    original: str,
    status: str = "200",
    digest: Optional[str] = None,
    mimetype: str = "text/html",
) -> List[str]:
    """One Wayback CDX row (WAYBACK_COLUMNS order); status '-' makes a revisit."""
    if status == "-":
        mimetype = "warc/revisit"
    parts = urlsplit(original if "://" in original else "http://" + original)
    host = (parts.hostname or "").removeprefix("www.")
    urlkey = ",".join(reversed(host.split("."))) + ")" + parts.path.rstrip("/")
    return [urlkey, timestamp, original, mimetype, status, digest or "-", "1000"]


def cdx_json(rows: Sequence[Sequence[str]], header: bool = True) -> str:
    return json.dumps(([WAYBACK_COLUMNS] if header else []) + [list(r) for r in rows])


def record(timestamp: str, original: str, status: str = "200", digest: Optional[str] = None, endpoint="wayback"):
    mimetype = "warc/revisit" if status == "-" else "text/html"
    return CdxRecord(
        timestamp=timestamp, original=original, mimetype=mimetype, statuscode=status, digest=digest,
        endpoint_name=endpoint,
    )


def page_html(document: Dict, title: str = "Instagram", canonical: Optional[str] = None) -> str:
    """A replayed page: archive banner markup around the shared-data script."""
    link = f'<link rel="canonical" href="{canonical}" />' if canonical else ""
    return (
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>"
        '<script src="//archive.org/includes/analytics.js?v=cf34f82" type="text/javascript"></script>\n'
        "<!-- End Wayback Rewrite JS Include -->\n"
        f"<meta charset=\"utf-8\">\n<title>{title}</title>\n{link}\n</head>\n<body>\n"
        "<!-- BEGIN WAYBACK TOOLBAR INSERT -->\n<div id=\"wm-ipp\"></div>\n<!-- END WAYBACK TOOLBAR INSERT -->\n"
        '<span id="react-root"></span>\n'
        f'<script type="text/javascript">window._sharedData = {json.dumps(document)};</script>\n'
        "</body>\n</html>\n"
    )


def early_document(username: str, followed_by: int = 1000, created: int = 1371245311, posts: int = 1) -> Dict:
    media = [
        {
            "link": f"http://instagram.com/p/early{username[:4]}{i}/",
            "created_time": str(created + i),
            "caption": {"text": f"post {i} #throwback"},
            "likes": {"count": 10 + i},
            "comments": {"count": i},
            "images": {
                "standard_resolution": {"url": f"http://distilleryimage{i}.s3.amazonaws.com/{username}_{i}_7.jpg"},
                "thumbnail": {"url": f"http://distilleryimage{i}.s3.amazonaws.com/{username}_{i}_5.jpg"},
            },
            "type": "image",
        }
        for i in range(posts)
    ]
    user = {
        "username": username,
        "bio": "",
        "counts": {"media": 42, "followed_by": followed_by, "follows": 7},
        "id": "20556510",
    }
    return {"entry_data": {"UserProfile": [{"user": user, "userMedia": media}]}}


def profile_page_document(username: str, followed_by: int = 1000, created: int = 1485974340, posts: int = 1) -> Dict:
    nodes = [
        {
            "code": f"BP{username[:4]}{i}x",
            "date": created + i,
            "caption": f"caption {i} @friend",
            "likes": {"count": 100 + i},
            "comments": {"count": 5 + i},
            "comments_disabled": False,
            "display_src": f"https://scontent.cdninstagram.com/t51.2885-15/e35/{username}_{i}_n.jpg",
            "thumbnail_src": f"https://scontent.cdninstagram.com/t51.2885-15/s640x640/e35/{username}_{i}_n.jpg",
            "thumbnail_resources": [],
            "is_video": False,
            "id": str(1440000000000000000 + i),
        }
        for i in range(posts)
    ]
    user = {
        "username": username,
        "biography": "",
        "external_url": None,
        "followed_by": {"count": followed_by},
        "follows": {"count": 3},
        "id": "247944034",
        "is_verified": True,
        "media": {"nodes": nodes, "count": 1403},
    }
    return {"entry_data": {"ProfilePage": [{"user": user}]}}


def graphql_document(username: str, followed_by: int = 1000, created: int = 1526385600, posts: int = 1) -> Dict:
    edges = [
        {
            "node": {
                "shortcode": f"Bi{username[:4]}{i}y",
                "taken_at_timestamp": created + i,
                "edge_media_to_caption": {"edges": [{"node": {"text": f"graph {i}"}}]},
                "edge_media_to_comment": {"count": 7 + i},
                "edge_liked_by": {"count": 900 + i},
                "display_url": f"https://scontent.cdninstagram.com/vp/e35/{username}_{i}.jpg",
                "thumbnail_resources": [
                    {"src": f"https://scontent.cdninstagram.com/vp/s150x150/{username}_{i}.jpg", "config_width": 150}
                ],
            }
        }
        for i in range(posts)
    ]
    user = {
        "username": username,
        "biography": "",
        "edge_followed_by": {"count": followed_by},
        "edge_follow": {"count": 2},
        "edge_owner_to_timeline_media": {"count": 18012, "edges": edges},
        "id": "787132",
        "is_verified": True,
    }
    return {"entry_data": {"ProfilePage": [{"graphql": {"user": user}}]}}


def monthly_timestamps() -> List[str]:
    """One account-page capture per month, November 2012 through June 2018."""
    stamps = []
    year, month = 2012, 11
    while (year, month) <= (2018, 6):
        stamps.append(f"{year:04d}{month:02d}07120000")
        year, month = (year + 1, 1) if month == 12 else (year, month + 1)
    return stamps


def account_page(timestamp: str, username: str = "natgeo", followed_by: int = 1000) -> str:
    """The page layout Instagram served at timestamp."""
    key = timestamp[:6]
    if key < "201503":
        document = early_document(username, followed_by)
    elif key < "201804":
        document = profile_page_document(username, followed_by)
    else:
        document = graphql_document(username, followed_by)
    return page_html(document, title=f"@{username} • Instagram")


LOGIN_HTML = page_html(
    {"entry_data": {"LoginAndSignupPage": [{"captcha": {"enabled": False}}]}},
    title="Login • Instagram",
    canonical="https://www.instagram.com/accounts/login/",
)

# login-page captures per day, August 2019
LOGIN_AUGUST_2019 = [
    14, 15, 13, 16, 15, 17, 16, 18, 17, 19, 18, 17, 19, 20, 18, 19, 21, 20, 19, 22,
    168, 171, 165, 170, 174, 169, 172, 175, 170, 173, 176,
]


def login_slice_cdx(counts: Sequence[int] = LOGIN_AUGUST_2019, start: date = date(2019, 8, 1)) -> str:
    rows = []
    for offset, count in enumerate(counts):
        day = start + timedelta(days=offset)
        for n in range(count):
            timestamp = f"{day:%Y%m%d}{n // 60:02d}{n % 60:02d}00"
            rows.append(cdx_row(timestamp, "https://www.instagram.com/accounts/login/", "200", f"L{day:%m%d}{n}"))
    return cdx_json(rows)


# ---------------------------------------------------------------------------
# Synthetic multi-account replay history

LEAD_HANDLE = "thisisbillgates"
FIRST_LOGIN = "20190822031500"


def corpus_months() -> List[Tuple[int, int]]:
    return [(y, m) for y in (2019, 2020, 2021) for m in range(1, 13) if (y, m) <= (2021, 3)]


def month_plan(year: int, month: int) -> List[str]:
    """Capture kinds of one account in one month, in timestamp order."""
    key = (year, month)
    if key < (2019, 8):
        return ["200", "200", "200", "200", "canonical"]
    if key == (2019, 8):
        return ["200", "200", "200", "200"]
    if key < (2020, 9):
        return ["200", "200", "login", "login", "revisit"]
    if key < (2021, 1):
        return ["200", "login", "login", "revisit_login"]
    return ["login", "login", "revisit_login"]


def login_uri(handle: str) -> str:
    return f"https://www.instagram.com/accounts/login/?next=/{handle}/"


def corpus_captures(handle: str, lead: str = LEAD_HANDLE) -> List[Tuple[List[str], str]]:
    """(CDX row, kind) of every capture of one account."""
    captures = []
    page = f"https://www.instagram.com/{handle}/"
    for year, month in corpus_months():
        last_digest = {}
        for index, kind in enumerate(month_plan(year, month)):
            timestamp = f"{year:04d}{month:02d}{index + 1:02d}120000"
            digest = f"D{handle[:6].upper()}{timestamp}"
            if kind == "200":
                row = cdx_row(timestamp, page, "200", digest)
            elif kind == "canonical":
                row = cdx_row(timestamp, f"http://instagram.com/{handle}", "301", digest)
            elif kind == "login":
                row = cdx_row(timestamp, page, "302", digest)
            elif kind == "revisit":
                row = cdx_row(timestamp, page, "-", last_digest["200"])
            else:
                row = cdx_row(timestamp, page, "-", last_digest["login"])
            last_digest[kind] = digest
            captures.append((row, kind))
        if handle == lead and (year, month) == (2019, 8):
            captures.append((cdx_row(FIRST_LOGIN, page, "302", "DFIRSTLOGIN"), "login"))
    return captures


def install_corpus(transport: FakeTransport, handles: Sequence[str], lead: str = LEAD_HANDLE) -> None:
    """Serve CDX indexes, replay redirects and the August 2019 login slice."""
    for handle in handles:
        captures = corpus_captures(handle, lead)
        transport.add_cdx(WAYBACK_CDX, f"instagram.com/{handle}/", cdx_json([row for row, _ in captures]))
        for row, kind in captures:
            timestamp, original = row[1], row[2]
            if kind == "canonical":
                target = urim(timestamp, f"https://www.instagram.com/{handle}/")
                transport.redirect(urim(timestamp, original), target, 301).add(target, "<html></html>")
            elif kind == "login":
                target = urim(timestamp, login_uri(handle))
                transport.redirect(urim(timestamp, original), target).add(target, LOGIN_HTML)
    transport.add_cdx(WAYBACK_CDX, LOGIN_TARGET, login_slice_cdx())


def corpus_classified(handles: Sequence[str], lead: str = LEAD_HANDLE) -> List[ClassifiedRecord]:
    """The classification install_corpus's replays should produce, built directly."""
    rows = []
    for handle in handles:
        login = MementoClass.redirect_to_login(login_uri(handle))
        classes = {
            "200": MementoClass.success(),
            "canonical": MementoClass.redirect_canonical(f"https://www.instagram.com/{handle}/"),
            "login": login,
            "revisit": MementoClass.revisit(MementoClass.success()),
            "revisit_login": MementoClass.revisit(login),
        }
        for row, kind in corpus_captures(handle, lead):
            memento_class = classes[kind]
            resolved = memento_class.resolution or memento_class
            rows.append(
                ClassifiedRecord(
                    record=record(row[1], row[2], row[4], row[5]),
                    memento_class=memento_class,
                    final_uri=resolved.final_uri,
                    hops=1 if resolved.final_uri else 0,
                    resolved_via="digest" if memento_class.is_revisit else ("network" if resolved.final_uri else "none"),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Fixtures


@pytest.fixture
def clock() -> FakeClock:
    return FakeClock()


@pytest.fixture
def transport() -> FakeTransport:
    return FakeTransport()


@pytest.fixture
def registry():
    return load_registry(DEFAULT_ENDPOINTS)


@pytest.fixture
def wayback(registry):
    return registry.get("wayback")


@pytest.fixture
def arquivo(registry):
    return registry.get("arquivo")


@pytest.fixture
def cache(tmp_path) -> ResponseCache:
    return ResponseCache(tmp_path / "cache")


@pytest.fixture
def fetcher(transport, cache, clock, registry) -> Fetcher:
    return Fetcher(
        AllowlistTransport(transport, registry.archive_hosts()),
        cache=cache,
        limiter=RateLimiter(1.0, clock=clock, sleep=clock.sleep),
        sleep=clock.sleep,
    )


@pytest.fixture
def cdx_client(fetcher) -> CdxClient:
    return CdxClient(fetcher)


@pytest.fixture
def resolver(fetcher, registry) -> ReplayResolver:
    return ReplayResolver(fetcher, registry)
