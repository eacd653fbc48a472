"""
Tests for the replay outcome classifier

URL canonicalization, login-wall detection, replay redirect resolution inside
the archive, and classification of the katyperry CDX fixture including its
revisit records.
"""

import pytest
from pydantic import ValidationError

from conftest import fixture_text, record, urim
from mementolens.cdx_client import parse_cdx_body
from mementolens.classifier import (
    MementoClass,
    ReplayKind,
    ReplayResolver,
    account_handle,
    canonicalize,
    classify,
    classify_record,
    classify_records,
    is_canonicalization_redirect,
    is_login_uri,
)
from mementolens.errors import HopLimitExceeded, ParseError, UnknownStatus

KATY_LABELS = [
    "success",
    "success",
    "revisit/success",
    "redirect_canonical",
    "success",
    "client_error",
    "server_error",
    "redirect_login",
    "revisit/redirect_login",
    "redirect_login",
]


@pytest.fixture
def katy_records(wayback):
    return parse_cdx_body(fixture_text("cdx_katyperry_wayback.json"), wayback)[0]


@pytest.fixture
def katy_replays(transport):
    canonical = urim("20150303101011", "https://www.instagram.com/katyperry/")
    transport.redirect(urim("20150303101010", "http://instagram.com/katyperry"), canonical, 301)
    transport.add(canonical, "<html>profile</html>")

    login = urim("20190822150001", "https://www.instagram.com/accounts/login/?next=/katyperry/")
    transport.redirect(urim("20190822150000", "https://www.instagram.com/katyperry/"), login)
    transport.add(login, "<html>login</html>")

    transport.redirect(
        urim("20200505050505", "https://www.instagram.com/katyperry/"),
        "/web/20200505050506/https://www.instagram.com/accounts/login/",
    )
    transport.add(urim("20200505050506", "https://www.instagram.com/accounts/login/"), "<html>login</html>")
    return transport


class TestUrlHelpers:
    @pytest.mark.parametrize(
        "uri",
        [
            "http://instagram.com/katyperry",
            "https://www.instagram.com/katyperry/",
            "HTTPS://WWW.INSTAGRAM.COM:443/katyperry//",
            "instagram.com/katyperry#top",
        ],
    )
    def test_canonical_forms_agree(self, uri):
        assert canonicalize(uri) == "instagram.com/katyperry"

    def test_canonicalize_is_idempotent(self):
        once = canonicalize("https://www.Instagram.com/a%7eb/?next=1")
        assert canonicalize(once) == once
        assert once == "instagram.com/a~b?next=1"

    def test_canonicalize_keeps_nondefault_port(self):
        assert canonicalize("http://example.com:8080/x/") == "example.com:8080/x"

    @pytest.mark.parametrize(
        "uri",
        [
            "https://www.instagram.com/accounts/login/",
            "https://www.instagram.com/accounts/login/?next=/beyonce/",
            "http://instagram.com/accounts/login",
            "https://www.instagram.com/accounts/login/ajax/",
            "https://i.instagram.com/Accounts/Login/",
        ],
    )
    def test_login_variants(self, uri):
        assert is_login_uri(uri)

    @pytest.mark.parametrize(
        "uri",
        [
            "https://www.instagram.com/accounts/loginfoo/",
            "https://www.instagram.com/accounts/emailsignup/",
            "https://www.instagram.com/beyonce/",
            "https://example.com/accounts/login/",
            "https://notinstagram.com/accounts/login/",
        ],
    )
    def test_not_login(self, uri):
        assert not is_login_uri(uri)

    @pytest.mark.parametrize("uri", ["", "not a url", "ftp://instagram.com/x", "localhost/x"])
    def test_garbage_is_a_parse_error(self, uri):
        with pytest.raises(ParseError):
            is_login_uri(uri)

    def test_account_handle(self):
        assert account_handle("https://www.instagram.com/Beyonce/") == "beyonce"
        assert account_handle("https://www.instagram.com/") == ""


class TestMementoClass:
    def test_revisit_cannot_resolve_to_revisit(self):
        with pytest.raises(ValidationError):
            MementoClass.revisit(MementoClass.revisit(MementoClass.success()))

    def test_only_revisits_carry_resolution(self):
        with pytest.raises(ValidationError):
            MementoClass(kind=ReplayKind.SUCCESS, resolution=MementoClass.success())

    @pytest.mark.parametrize(
        "cls",
        [
            MementoClass.revisit(MementoClass.redirect_to_login("https://www.instagram.com/accounts/login/")),
            MementoClass.revisit(None),
            MementoClass.client_error(404),
        ],
    )
    def test_label_is_reversible(self, cls):
        final_uri = cls.resolution.final_uri if cls.resolution else None
        assert MementoClass.from_label(cls.label, final_uri, cls.status) == cls


class TestResolver:
    def test_follows_relative_location(self, katy_replays, resolver):
        resolution = resolver.resolve_redirect(urim("20200505050505", "https://www.instagram.com/katyperry/"))
        assert resolution.final_uri == "https://www.instagram.com/accounts/login/"
        assert resolution.hops == 1
        assert resolution.final_status == 200

    def test_off_archive_location_is_never_requested(self, transport, resolver):
        start = urim("20190822150000", "https://www.instagram.com/beyonce/")
        transport.redirect(start, "https://www.instagram.com/accounts/login/")
        resolution = resolver.resolve_redirect(start)
        assert resolution.final_uri == "https://www.instagram.com/accounts/login/"
        assert resolution.hops == 1
        assert transport.hosts == {"web.archive.org"}

    def test_hop_limit(self, transport, fetcher, registry):
        for n in range(4):
            transport.redirect(
                urim(f"2019082215000{n}", "https://www.instagram.com/beyonce/"),
                urim(f"2019082215000{n + 1}", "https://www.instagram.com/beyonce/"),
            )
        resolver = ReplayResolver(fetcher, registry, hop_limit=2)
        start = urim("20190822150000", "https://www.instagram.com/beyonce/")
        with pytest.raises(HopLimitExceeded):
            resolver.resolve_redirect(start)

        chained = classify_record(record("20190822150000", "https://www.instagram.com/beyonce/", "302"), resolver)
        assert chained.memento_class.kind is ReplayKind.REDIRECT_OTHER
        assert chained.memento_class.unresolved

    def test_leaving_the_archive_counts_against_the_hop_limit(self, transport, fetcher, registry):
        page = "https://www.instagram.com/beyonce/"
        first, second = urim("20190822150000", page), urim("20190822150001", page)
        transport.redirect(first, second).redirect(second, "https://www.instagram.com/accounts/login/")
        with pytest.raises(HopLimitExceeded):
            ReplayResolver(fetcher, registry, hop_limit=1).resolve_redirect(first)
        assert ReplayResolver(fetcher, registry, hop_limit=2).resolve_redirect(first).hops == 2
        assert transport.hosts == {"web.archive.org"}



class TestClassify:
    def test_katyperry_fixture(self, katy_records, katy_replays, resolver):
        classified = classify_records(katy_records, resolver)
        assert [c.memento_class.label for c in classified] == KATY_LABELS
        by_ts = {c.timestamp: c for c in classified}
        assert by_ts["20130922140105"].resolved_via == "digest"
        assert by_ts["20150303101010"].final_uri == "https://www.instagram.com/katyperry/"
        assert by_ts["20150303101010"].hops == 1
        assert by_ts["20170707070707"].memento_class.status == 404
        assert by_ts["20190901120000"].final_uri == "https://www.instagram.com/accounts/login/?next=/katyperry/"
        assert katy_replays.hosts == {"web.archive.org"}

    def test_input_order_does_not_matter(self, katy_records, katy_replays, resolver):
        forward = classify_records(katy_records, resolver)
        backward = classify_records(list(reversed(katy_records)), resolver, workers=4)
        assert [c.row() for c in backward] == [c.row() for c in forward]

    def test_redirect_without_resolver_is_unresolved(self):
        cls = classify(record("20190822150000", "https://www.instagram.com/beyonce/", "302"), None)
        assert cls.kind is ReplayKind.REDIRECT_OTHER
        assert cls.unresolved

    def test_redirect_to_other_page(self, transport, resolver):
        start = urim("20160101000000", "https://www.instagram.com/beyonce/")
        target = urim("20160101000001", "https://www.instagram.com/explore/")
        transport.redirect(start, target).add(target, "")
        cls = classify(record("20160101000000", "https://www.instagram.com/beyonce/", "302"), resolver)
        assert cls.kind is ReplayKind.REDIRECT_OTHER
        assert cls.final_uri == "https://www.instagram.com/explore/"

    def test_revisit_falls_back_to_replay(self, transport, resolver):
        page = "https://www.instagram.com/beyonce/"
        transport.add(urim("20170101000000", page), "<html></html>")
        transport.add(urim("20170102000000", page), "", 404)
        ok = classify_record(record("20170101000000", page, "-", "NOMATCH"), resolver)
        gone = classify_record(record("20170102000000", page, "-"), resolver)
        assert ok.memento_class.label == "revisit/success"
        assert ok.resolved_via == "network"
        assert gone.memento_class.label == "revisit/client_error"

    def test_revisit_replayed_from_a_nearby_memento_is_success(self, transport, resolver):
        page = "https://www.instagram.com/beyonce/"
        nearby = urim("20170101000007", page)
        transport.redirect(urim("20170101000000", page), nearby).add(nearby, "<html></html>")
        revisit = classify_record(record("20170101000000", page, "-", "NOMATCH"), resolver)
        assert revisit.memento_class.label == "revisit/success"
        assert revisit.hops == 1
        assert revisit.resolved_via == "network"

    def test_revisit_replayed_elsewhere_stays_a_redirect(self, transport, resolver):
        page = "https://www.instagram.com/beyonce/"
        explore = urim("20170101000007", "https://www.instagram.com/explore/")
        transport.redirect(urim("20170101000000", page), explore).add(explore, "<html></html>")
        revisit = classify_record(record("20170101000000", page, "-", "NOMATCH"), resolver)
        assert revisit.memento_class.label == "revisit/redirect_other"


    def test_unresolvable_revisit_is_a_value(self, transport, resolver):
        page = "https://www.instagram.com/beyonce/"
        transport.fail(urim("20170101000000", page))
        assert classify(record("20170101000000", page, "-", "X"), resolver).label == "revisit/unresolved"
        assert classify(record("20170101000000", page, "-", "X"), None).label == "revisit/unresolved"

    def test_digest_match_prefers_most_recent(self, resolver):
        page = "https://www.instagram.com/beyonce/"
        earlier = classify_record(record("20170101000000", page, "200", "D"), None)
        later = classify_record(record("20170201000000", page, "404", "D"), None)
        revisit = classify_record(record("20170301000000", page, "-", "D"), None, [earlier, later])
        assert revisit.memento_class.label == "revisit/client_error"

    @pytest.mark.parametrize("status", ["102", "600", "999"])
    def test_unknown_status(self, status):
        with pytest.raises(UnknownStatus):
            classify(record("20170101000000", "https://www.instagram.com/x/", status), None)

    def test_batch_skips_unknown_status(self):
        page = "https://www.instagram.com/x/"
        classified = classify_records([record("20170101000000", page, "200"), record("20170102000000", page, "600")], None)
        assert [c.timestamp for c in classified] == ["20170101000000"]


@pytest.mark.parametrize(
    "original, final, expected",
    [
        ("http://instagram.com/katyperry", "https://www.instagram.com/katyperry/", True),
        ("https://www.instagram.com/katyperry", "https://instagram.com/katyperry/", True),
        ("https://www.instagram.com/katyperry/", "https://www.instagram.com/katy_perry/", False),
        ("https://www.instagram.com/katyperry/", "https://www.instagram.com/accounts/login/?next=/katyperry/", False),
        ("https://www.instagram.com/katyperry/", "not a url", False),
    ],
)
def test_canonicalization_redirect(original, final, expected):
    assert is_canonicalization_redirect(record("20150303101010", original, "301"), final) is expected
