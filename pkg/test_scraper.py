"""
Tests for the memento scraper

Fixture pages cover the three page-format eras (2013 UserProfile, 2017
ProfilePage, 2018 GraphQL) plus the 2019 login page. Every scraped value is
audited back to its byte offset in the page source.
"""

import json

import pytest

from conftest import (
    BEYONCE_PREFIX,
    BEYONCE_URIM,
    account_page,
    fixture_text,
    graphql_document,
    monthly_timestamps,
    page_html,
    profile_page_document,
    urim,
)
from mementolens.errors import (
    EmptyDocument,
    FetchError,
    LoginPageContent,
    MalformedEmbeddedData,
    SchemaViolation,
    UnsupportedFormat,
)
from mementolens.scraper import (
    MementoScraper,
    ScrapeResult,
    archive_url,
    audit_provenance,
    collect_shortcodes,
    decode_page,
    detect_era,
    extract_embedded_json,
    extract_tags,
    is_login_page,
    normalize,
    output_name,
    trend_series,
)

KATY_URIM = urim("20130615083012", "http://instagram.com/katyperry/")
NATGEO_URIM = urim("20180515120000", "https://www.instagram.com/natgeo/")
LOGIN_URIM = urim("20190822031500", "https://www.instagram.com/accounts/login/")


@pytest.fixture
def scraper(fetcher, registry):
    return MementoScraper(fetcher, registry, workers=2)


@pytest.fixture
def pages(transport):
    transport.add(BEYONCE_URIM, fixture_text("beyonce_20170214033011.html"))
    transport.add(KATY_URIM, fixture_text("katyperry_20130615083012.html"))
    transport.add(NATGEO_URIM, fixture_text("natgeo_20180515120000.html"))
    transport.add(LOGIN_URIM, fixture_text("login_20190822031500.html"))
    return transport


@pytest.fixture
def beyonce(scraper, pages):
    return scraper.scrape(BEYONCE_URIM, probe_images=False)


class TestProfilePageEra:
    def test_profile(self, beyonce):
        assert beyonce.era == "profile-page-user"
        assert beyonce.timestamp == "20170214033011"
        user = beyonce.profile_user
        assert user.username == "beyonce"
        assert user.bio == "#LEMONADE"
        assert user.full_name == "Beyoncé"
        assert user.website == BEYONCE_PREFIX + "http://www.beyonce.com/"
        assert (user.count.media, user.count.followed_by, user.count.follows) == (1403, 94709950, 0)
        assert user.id == "247944034"
        assert user.is_verified is True
        assert user.profile_picture.uri.startswith(BEYONCE_PREFIX + "https://scontent-sea1-1.cdninstagram.com/")
        assert user.profile_picture.role == "display"

    def test_posts(self, beyonce):
        first, second = beyonce.user_media
        assert first.short_code == "BP-rXUGBPJa"
        assert first.likes_count == 10400019
        assert first.comments_count == 504384
        assert first.comments_disabled is False
        assert first.created_time_iso == "2017-02-01T18:39:00Z"
        assert "grateful  that" in first.caption
        assert [i.label for i in first.images] == ["display", "thumbnail", "variant_150", "variant_240"]
        assert [i.role for i in first.images] == ["display", "thumbnail", "other-variant", "other-variant"]
        assert all(i.uri.startswith(BEYONCE_PREFIX) for i in first.images)
        assert first.extra == {"id": "1440779648928903770", "is_video": False}
        assert second.short_code == "BQPbCrRjCG3"
        assert [i.label for i in second.images] == ["display", "thumbnail"]

    def test_document_layout(self, beyonce):
        doc = json.loads(beyonce.to_json())
        assert list(doc) == ["urim", "timestamp", "era", "scraped_at", "profileUser", "userMedia"]
        assert doc["profileUser"]["isVerified"] is True
        assert doc["profileUser"]["profile_picture"] == {"uri": beyonce.profile_user.profile_picture.uri}
        post = doc["userMedia"][0]
        assert list(post)[:5] == ["comments_disabled", "comments", "caption", "short_code", "likes"]
        assert post["created_time"] == 1485974340
        assert post["images"]["variant_240"]["url"].endswith("s240x240/e35/16465013_1625467001093055_3757710872030478336_n.jpg")
        assert "Beyoncé" in beyonce.to_json()

    def test_document_reads_back(self, beyonce):
        assert ScrapeResult.from_document(json.loads(beyonce.to_json())) == beyonce

    def test_read_back_rejects_inconsistent_iso(self, beyonce):
        doc = beyonce.to_document()
        doc["userMedia"][0]["created_time_iso"] = "2017-02-02T00:00:00Z"
        with pytest.raises(SchemaViolation):
            ScrapeResult.from_document(doc)

    def test_every_value_traces_to_source(self, beyonce):
        audit = audit_provenance(beyonce, fixture_text("beyonce_20170214033011.html"))
        assert audit.ok, audit.untraceable
        assert "profileUser.count.followed_by" in audit.traced
        assert "userMedia.1.caption.text" in audit.traced

    def test_fabricated_value_is_untraceable(self, beyonce):
        tampered = beyonce.model_copy(deep=True)
        tampered.profile_user.count.followed_by = 12345678
        audit = audit_provenance(tampered, fixture_text("beyonce_20170214033011.html"))
        assert audit.untraceable == ["profileUser.count.followed_by"]

    def test_output_name(self, beyonce, registry):
        assert output_name(beyonce, registry) == "beyonce_20170214033011.json"


class TestOtherEras:
    def test_early_user_profile(self, scraper, pages):
        result = scraper.scrape(KATY_URIM, probe_images=False)
        assert result.era == "early-user-profile"
        user = result.profile_user
        assert user.bio == "WITNESS 👁 #KP4"
        assert user.count.followed_by == 2844811
        assert user.is_verified is None
        assert "isVerified" not in user.to_document()
        (post,) = result.user_media
        assert post.short_code == "aiOPpBnLuS"
        assert post.created_time == 1371245311
        assert post.comments_disabled is None
        assert [(i.label, i.role) for i in post.images] == [
            ("standard_resolution", "display"),
            ("low_resolution", "other-variant"),
            ("thumbnail", "thumbnail"),
        ]
        assert post.extra == {"id": "481122111222333444_20556510", "type": "image", "filter": "Normal"}
        assert audit_provenance(result, fixture_text("katyperry_20130615083012.html")).ok

    def test_graphql(self, scraper, pages):
        result = scraper.scrape(NATGEO_URIM, probe_images=False)
        assert result.era == "profile-page-graphql"
        assert result.profile_user.count.follows == 134
        (post,) = result.user_media
        assert post.short_code == "BiyBvNsF9-D"
        assert post.caption.startswith("Photo by @paulnicklen")
        assert post.likes_count == 652011
        assert [i.label for i in post.images] == ["display", "thumbnail", "variant_150"]
        assert "accessibility_caption" not in post.extra
        assert audit_provenance(result, fixture_text("natgeo_20180515120000.html")).ok

    def test_empty_variant_src_is_skipped(self):
        document = graphql_document("natgeo")
        user = document["entry_data"]["ProfilePage"][0]["graphql"]["user"]
        node = user["edge_owner_to_timeline_media"]["edges"][0]["node"]
        node["thumbnail_resources"] += [
            {"src": "", "config_width": 240},
            {"src": "   ", "config_width": 480},
            {"src": "https://scontent.cdninstagram.com/vp/s320x320/natgeo_0.jpg", "config_width": 320},
        ]
        html = page_html(document)
        _, (post,) = normalize(extract_embedded_json(html), detect_era(html, "20180515120000"))
        assert None not in post.images
        labels = [i.label for i in post.images]
        assert "variant_240" not in labels
        assert "variant_480" not in labels
        assert labels[-2:] == ["variant_150", "variant_320"]


    @pytest.mark.parametrize("timestamp", monthly_timestamps())
    def test_monthly_pages(self, timestamp):
        html = account_page(timestamp, "natgeo", followed_by=4242)
        if timestamp < "20150300000000":
            expected = "early-user-profile"
        elif timestamp < "20180400000000":
            expected = "profile-page-user"
        else:
            expected = "profile-page-graphql"
        era = detect_era(html, timestamp)
        assert era.id == expected
        profile, posts = normalize(extract_embedded_json(html), era)
        assert profile.username == "natgeo"
        assert profile.count.followed_by == 4242
        assert len(posts) == 1


class TestPageSource:
    def test_login_page_is_refused(self, scraper, pages):
        with pytest.raises(LoginPageContent):
            scraper.scrape(LOGIN_URIM)
        assert is_login_page(fixture_text("login_20190822031500.html"))
        assert not is_login_page(fixture_text("beyonce_20170214033011.html"))

    def test_redirect_to_login_is_refused(self, scraper, transport):
        start = urim("20190901000000", "https://www.instagram.com/beyonce/")
        transport.redirect(start, LOGIN_URIM)
        with pytest.raises(LoginPageContent):
            scraper.fetch_page(start)

    def test_missing_memento(self, scraper, transport):
        with pytest.raises(FetchError):
            scraper.scrape(urim("20170101000000", "https://www.instagram.com/nobody/"))

    def test_not_an_archive_uri(self, scraper):
        with pytest.raises(FetchError):
            scraper.scrape("https://www.instagram.com/beyonce/")

    def test_no_embedded_block(self):
        with pytest.raises(EmptyDocument):
            extract_embedded_json("<html><script>var x = 1;</script></html>")

    def test_malformed_block_reports_byte_offset(self):
        html = '<html><title>é</title><script>window._sharedData = {"x": ,};</script></html>'
        with pytest.raises(MalformedEmbeddedData) as excinfo:
            extract_embedded_json(html)
        assert excinfo.value.offset == len(html[: html.index(",")].encode("utf-8"))

    def test_unknown_layout(self):
        html = page_html({"entry_data": {"FeedPage": [{}]}})
        with pytest.raises(UnsupportedFormat) as excinfo:
            detect_era(html, "20160101000000")
        assert excinfo.value.attempted == ["profile-page-user", "early-user-profile", "profile-page-graphql"]

    def test_outside_supported_window(self):
        with pytest.raises(UnsupportedFormat):
            detect_era(account_page("20180607120000"), "20190101000000")

    def test_impossible_count(self):
        html = page_html(profile_page_document("beyonce", followed_by=-5))
        era = detect_era(html, "20170101000000")
        with pytest.raises(SchemaViolation) as excinfo:
            normalize(extract_embedded_json(html), era)
        assert excinfo.value.path == "entry_data.ProfilePage.0.user.followed_by.count"

    def test_lone_surrogate_is_replaced_with_warning(self):
        document = profile_page_document("beyonce")
        document["entry_data"]["ProfilePage"][0]["user"]["biography"] = "\ud800x"
        html = page_html(document)
        warnings = []
        profile, _ = normalize(extract_embedded_json(html), detect_era(html, "20170101000000"), warnings=warnings)
        assert "�" in profile.bio
        assert profile.bio.endswith("x")
        assert warnings and warnings[0].startswith("entry_data.ProfilePage.0.user.biography")

    def test_undecodable_bytes_are_reported(self):
        text, warnings = decode_page(b"ok \xff\xfe")
        assert text.startswith("ok ")
        assert warnings == ["2 undecodable byte sequence(s) replaced with U+FFFD"]

    @pytest.mark.parametrize(
        "url, expected",
        [
            ("http://www.beyonce.com/", BEYONCE_PREFIX + "http://www.beyonce.com/"),
            ("//scontent.cdninstagram.com/a.jpg", BEYONCE_PREFIX + "https://scontent.cdninstagram.com/a.jpg"),
            ("/static/bundles/a.js", "https://web.archive.org/static/bundles/a.js"),
            (BEYONCE_PREFIX + "http://x.com/", BEYONCE_PREFIX + "http://x.com/"),
        ],
    )
    def test_archive_url(self, url, expected):
        assert archive_url(url, BEYONCE_PREFIX) == expected

    def test_archive_url_without_prefix(self):
        assert archive_url("//x.com/a.jpg", None) == "https://x.com/a.jpg"


class TestImageProbes:
    def test_status_per_image(self, scraper, pages, transport):
        result = scraper.scrape(BEYONCE_URIM, probe_images=False)
        display, thumbnail, small, _ = result.user_media[0].images
        transport.add(display.uri, b"\xff\xd8")
        moved = urim("20170214033012", "https://scontent-sea1-1.cdninstagram.com/moved.jpg")
        transport.redirect(thumbnail.uri, moved).add(moved, b"\xff\xd8")
        transport.fail(small.uri)

        scraper.probe_images(result.images())
        display, thumbnail, small, large = result.user_media[0].images
        assert display.status_code == 200
        assert thumbnail.status_code == 200
        assert small.status_code is None and small.probe_error
        assert large.status_code == 404
        assert result.profile_user.profile_picture.status_code == 404
        assert json.loads(result.to_json())["userMedia"][0]["images"]["display"]["status_code"] == 200

    def test_probing_stays_in_the_archive(self, scraper, pages, transport):
        scraper.scrape(BEYONCE_URIM, probe_images=True)
        assert transport.hosts == {"web.archive.org"}


class TestDownstream:
    def test_shortcodes_first_seen(self, beyonce):
        later = beyonce.model_copy(update={"timestamp": "20170301000000"})
        sightings = collect_shortcodes([later, beyonce])
        assert [s.short_code for s in sightings] == ["BP-rXUGBPJa", "BQPbCrRjCG3"]
        assert {s.first_seen for s in sightings} == {"20170214033011"}
        assert sightings[0].post_url == "https://www.instagram.com/p/BP-rXUGBPJa/"

    def test_trend_gaps_are_none(self, beyonce):
        gap = beyonce.model_copy(deep=True, update={"timestamp": "20170101000000"})
        gap.profile_user.count.followed_by = None
        points = trend_series([beyonce, gap])
        assert [(p.timestamp, p.value) for p in points] == [("20170101000000", None), ("20170214033011", 94709950)]
        with pytest.raises(ValueError):
            trend_series([beyonce], "likes")

    def test_tags(self, beyonce):
        tags = {(t.kind, t.tag): t for t in extract_tags([beyonce])}
        assert set(tags) == {("hashtag", "lemonade"), ("mention", "blueivy")}
        assert tags[("hashtag", "lemonade")].mementos == 1
