"""
Live smoke tests against the Wayback Machine

Skipped unless pytest runs with --run-network. They exercise the real
requests transport, the rate limiter and the on-disk cache together.
"""

import pytest

from conftest import BEYONCE_URIM
from mementolens.cache import ResponseCache
from mementolens.cdx_client import CdxClient, CdxQuery, expand_bound
from mementolens.scraper import MementoScraper
from mementolens.transport import AllowlistTransport, Fetcher, RateLimiter, RequestsTransport

pytestmark = pytest.mark.network


@pytest.fixture
def live_fetcher(tmp_path, registry):
    transport = AllowlistTransport(RequestsTransport(), registry.archive_hosts())
    return Fetcher(transport, cache=ResponseCache(tmp_path / "cache"), limiter=RateLimiter(0.5))


def test_wayback_index(live_fetcher, wayback):
    query = CdxQuery(
        endpoint=wayback,
        target="instagram.com/beyonce/",
        from_=expand_bound("201702"),
        to=expand_bound("201702", upper=True),
    )
    records = CdxClient(live_fetcher).fetch_cdx(query)
    assert records
    assert all(r.timestamp.startswith("201702") for r in records)

    network = live_fetcher.network_requests
    assert CdxClient(live_fetcher).fetch_cdx(query) == records
    assert live_fetcher.network_requests == network


def test_scrape_profile(live_fetcher, registry):
    result = MementoScraper(live_fetcher, registry).scrape(BEYONCE_URIM, probe_images=False)
    assert result.handle == "beyonce"
    assert result.user_media
