"""
Replayability Module

Aggregates classified mementos into calendar buckets, computes the
percentage of replayable mementos

    (200s + revisits to 200s) / (200s + revisits + 3xx to login + 4xx + 5xx)

and locates the onset of login-wall redirects from the daily count of
mementos of the login page itself.
"""

import logging
from collections import Counter
from datetime import date, timedelta
from fractions import Fraction
from typing import Dict, Iterable, List, Literal, NamedTuple, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from mementolens.cdx_client import CdxClient, CdxQuery, CdxRecord, expand_bound
from mementolens.classifier import ClassifiedRecord, MementoClass, ReplayKind, account_handle
from mementolens.endpoints import ArchiveEndpoint, parse_timestamp
from mementolens.errors import NoLoginRedirects

logger = logging.getLogger(__name__)

Granularity = Literal["year", "month", "day"]
GRANULARITY_WIDTH = {"year": 4, "month": 6, "day": 8}
DEFAULT_LOGIN_TARGET = "www.instagram.com/accounts/login"


class ReplayabilityStats(BaseModel):
    """
    Counters of one time bucket.

    n_revisit counts every revisit; n_revisit_success, n_revisit_login and
    n_revisit_canonical break down the ones that resolved. Canonicalization
    and other redirects are reported in excluded_redirects and stay out of
    the percentage.
    """

    model_config = ConfigDict(frozen=True)

    n_success: int = Field(default=0, ge=0)
    n_revisit: int = Field(default=0, ge=0)
    n_revisit_success: int = Field(default=0, ge=0)
    n_revisit_login: int = Field(default=0, ge=0)
    n_revisit_canonical: int = Field(default=0, ge=0)
    n_login_redirect: int = Field(default=0, ge=0)
    n_client_error: int = Field(default=0, ge=0)
    n_server_error: int = Field(default=0, ge=0)
    excluded_redirects: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_revisit_breakdown(self) -> "ReplayabilityStats":
        if self.n_revisit_success + self.n_revisit_login + self.n_revisit_canonical > self.n_revisit:
            raise ValueError("revisit breakdown exceeds n_revisit")
        return self

    def __add__(self, other: "ReplayabilityStats") -> "ReplayabilityStats":
        if not isinstance(other, ReplayabilityStats):
            return NotImplemented
        return ReplayabilityStats(
            **{name: getattr(self, name) + getattr(other, name) for name in type(self).model_fields}
        )

    @property
    def numerator(self) -> int:
        return self.n_success + self.n_revisit_success

    @property
    def denominator(self) -> int:
        return self.n_success + self.n_revisit + self.n_login_redirect + self.n_client_error + self.n_server_error

    @property
    def total(self) -> int:
        """Every record counted in this bucket, excluded redirects included."""
        return self.denominator + self.excluded_redirects

    @classmethod
    def from_classes(cls, classes: Iterable[MementoClass]) -> "ReplayabilityStats":
        counts: Counter = Counter()
        for memento_class in classes:
            kind = memento_class.kind
            if kind is ReplayKind.REVISIT:
                counts["n_revisit"] += 1
                resolved = memento_class.resolution.kind if memento_class.resolution else None
                if resolved is ReplayKind.SUCCESS:
                    counts["n_revisit_success"] += 1
                elif resolved is ReplayKind.REDIRECT_LOGIN:
                    counts["n_revisit_login"] += 1
                elif resolved is ReplayKind.REDIRECT_CANONICAL:
                    counts["n_revisit_canonical"] += 1
            else:
                counts[_COUNTER_FOR_KIND[kind]] += 1
        return cls(**counts)


_COUNTER_FOR_KIND = {
    ReplayKind.SUCCESS: "n_success",
    ReplayKind.REDIRECT_LOGIN: "n_login_redirect",
    ReplayKind.REDIRECT_CANONICAL: "excluded_redirects",
    ReplayKind.REDIRECT_OTHER: "excluded_redirects",
    ReplayKind.CLIENT_ERROR: "n_client_error",
    ReplayKind.SERVER_ERROR: "n_server_error",
}


def replayable_fraction(
    stats: ReplayabilityStats, exclude_canonical_revisits: bool = False
) -> Optional[Fraction]:
    """
    Exact replayable share of a bucket, or None when nothing is in scope.

    Args:
        stats: bucket counters
        exclude_canonical_revisits: drop revisits that resolved to a
            canonicalization redirect from the denominator (alternate reading)
    """
    denominator = stats.denominator
    if exclude_canonical_revisits:
        denominator -= stats.n_revisit_canonical
    if denominator == 0:
        return None
    return Fraction(stats.numerator, denominator)


def percentage_replayable(stats: ReplayabilityStats) -> Optional[float]:
    """
    Percentage of replayable mementos in [0, 100], None when undefined.

    Example:
        >>> percentage_replayable(ReplayabilityStats(n_success=3, n_revisit=2,
        ...     n_revisit_success=1, n_login_redirect=4, n_client_error=1))
        40.0
    """
    fraction = replayable_fraction(stats)
    if fraction is None:
        return None
    return float(fraction * 100)


class TimeBucket(BaseModel):
    """One calendar period (YYYY, YYYY-MM or YYYY-MM-DD, UTC) and its counters."""

    period: str
    stats: ReplayabilityStats

    @property
    def pct(self) -> Optional[float]:
        return percentage_replayable(self.stats)


def period_of(timestamp: str, granularity: Granularity = "month") -> str:
    """Calendar label of a 14-digit timestamp, e.g. '2019-08' for month."""
    moment = parse_timestamp(timestamp)
    if granularity == "year":
        return f"{moment.year:04d}"
    if granularity == "month":
        return f"{moment.year:04d}-{moment.month:02d}"
    if granularity == "day":
        return moment.date().isoformat()
    raise ValueError(f"unknown granularity {granularity!r}")


def bucketize(records: Iterable[ClassifiedRecord], granularity: Granularity = "month") -> List[TimeBucket]:
    """
    Group classified records by calendar period.

    Each record lands in exactly one bucket; buckets are sorted by period
    and only periods holding at least one record appear.
    """
    grouped: Dict[str, List[MementoClass]] = {}
    for classified in records:
        grouped.setdefault(period_of(classified.timestamp, granularity), []).append(classified.memento_class)
    return [
        TimeBucket(period=period, stats=ReplayabilityStats.from_classes(classes))
        for period, classes in sorted(grouped.items())
    ]


def merge_series(*series: Sequence[TimeBucket]) -> List[TimeBucket]:
    """Combine bucket series (e.g. one per account) period by period."""
    merged: Dict[str, ReplayabilityStats] = {}
    for buckets in series:
        for bucket in buckets:
            merged[bucket.period] = merged.get(bucket.period, ReplayabilityStats()) + bucket.stats
    return [TimeBucket(period=period, stats=stats) for period, stats in sorted(merged.items())]


def plot_points(buckets: Sequence[TimeBucket]) -> List[Dict[str, Optional[float]]]:
    """[{period, pct}] for charting; undefined buckets carry pct None."""
    return [{"period": b.period, "pct": b.pct} for b in buckets]


# ---------------------------------------------------------------------------
# Login-page series and onset


class DailyCount(NamedTuple):
    day: date
    count: int


class DailyJump(BaseModel):
    date_from: date
    date_to: date
    count_from: int
    count_to: int

    @property
    def increase(self) -> int:
        return self.count_to - self.count_from


class FirstLoginRedirect(BaseModel):
    handle: str
    timestamp: str
    dataset: Optional[str] = None


class OnsetReport(BaseModel):
    """
    When login-wall redirects began.

    Attributes:
        first_login_redirect: earliest RedirectToLogin memento across accounts
        max_daily_jump: largest day-over-day increase of login-page mementos
        series: daily login-page memento counts
        first_by_dataset: earliest RedirectToLogin per dataset tag; untagged
            records only count towards first_login_redirect
        first_by_handle: earliest RedirectToLogin timestamp per account
        login_redirects_by_handle: RedirectToLogin count per account
    """

    first_login_redirect: Optional[FirstLoginRedirect] = None
    max_daily_jump: Optional[DailyJump] = None
    series: List[DailyCount] = Field(default_factory=list)
    first_by_dataset: Dict[str, FirstLoginRedirect] = Field(default_factory=dict)
    first_by_handle: Dict[str, str] = Field(default_factory=dict)
    login_redirects_by_handle: Dict[str, int] = Field(default_factory=dict)

    def to_json(self) -> Dict:
        return {
            "first_login_redirect": self.first_login_redirect.model_dump() if self.first_login_redirect else None,
            "max_daily_jump": self.max_daily_jump.model_dump(mode="json") if self.max_daily_jump else None,
            "series": [{"date": d.isoformat(), "count": c} for d, c in self.series],
            "first_by_dataset": {name: first.model_dump() for name, first in sorted(self.first_by_dataset.items())},
            "first_by_handle": dict(sorted(self.first_by_handle.items())),
            "login_redirects_by_handle": dict(sorted(self.login_redirects_by_handle.items())),
        }

    @classmethod
    def from_json(cls, data: Dict) -> "OnsetReport":
        return cls(
            first_login_redirect=data.get("first_login_redirect"),
            max_daily_jump=data.get("max_daily_jump"),
            series=[DailyCount(date.fromisoformat(p["date"]), p["count"]) for p in data.get("series", [])],
            first_by_dataset=data.get("first_by_dataset", {}),
            first_by_handle=data.get("first_by_handle", {}),
            login_redirects_by_handle=data.get("login_redirects_by_handle", {}),
        )


DayLike = Union[date, str]


def _as_day(value: DayLike) -> date:
    """Accepts a date, 'YYYY-MM-DD', 'YYYYMMDD' or a 14-digit timestamp."""
    if isinstance(value, date):
        return value
    digits = value.replace("-", "")
    if len(digits) not in (8, 14) or not digits.isdigit():
        raise ValueError(f"not a day: {value!r}")
    return parse_timestamp(digits[:8] + "000000").date()


def daily_counts(timestamps: Iterable[str], start: DayLike, end: DayLike) -> List[DailyCount]:
    """
    Count timestamps per UTC day over [start, end], zero-filling absent days.

    Timestamps outside the range are ignored; end before start gives [].
    """
    first, last = _as_day(start), _as_day(end)
    if last < first:
        return []
    days = pd.date_range(first, last, freq="D")
    stamps = pd.to_datetime(pd.Series(list(timestamps), dtype="object"), format="%Y%m%d%H%M%S")
    counts = stamps.dt.normalize().value_counts().reindex(days, fill_value=0)
    return [DailyCount(day.date(), int(count)) for day, count in counts.items()]


def login_page_series(
    client: CdxClient,
    endpoint: ArchiveEndpoint,
    start: DayLike,
    end: DayLike,
    target: str = DEFAULT_LOGIN_TARGET,
) -> List[DailyCount]:
    """
    Daily count of mementos of the login page itself over [start, end].

    Raises:
        NetworkError / RateLimited / MalformedResponse: from the CDX client
    """
    first, last = _as_day(start), _as_day(end)
    if last < first:
        return []
    query = CdxQuery(
        endpoint=endpoint,
        target=target,
        from_=expand_bound(first.strftime("%Y%m%d")),
        to=expand_bound(last.strftime("%Y%m%d"), upper=True),
    )
    records: List[CdxRecord] = client.fetch_cdx(query)
    logger.info("login page: %d mementos between %s and %s", len(records), first, last)
    return daily_counts((r.timestamp for r in records), first, last)


def max_daily_jump(series: Sequence[DailyCount]) -> Optional[DailyJump]:
    """
    Largest increase between consecutive days; earliest pair wins ties.

    Example:
        >>> s = [DailyCount(date(2019, 8, d), c) for d, c in zip(range(1, 5), [1, 1, 50, 51])]
        >>> max_daily_jump(s).date_to
        datetime.date(2019, 8, 3)
    """
    best: Optional[DailyJump] = None
    for (day_from, count_from), (day_to, count_to) in zip(series, series[1:]):
        if day_to - day_from != timedelta(days=1):
            continue
        if best is None or count_to - count_from > best.increase:
            best = DailyJump(date_from=day_from, date_to=day_to, count_from=count_from, count_to=count_to)
    return best


def detect_onset(
    records: Iterable[ClassifiedRecord],
    series: Sequence[DailyCount],
    strict: bool = False,
) -> OnsetReport:
    """
    First login-wall redirect overall and per dataset, plus the login-page jump.

    Args:
        records: classified records of every account in scope; records
            tagged with a dataset also feed first_by_dataset
        series: daily login-page counts (see login_page_series)
        strict: raise NoLoginRedirects instead of returning a report whose
            first_login_redirect is None

    Raises:
        NoLoginRedirects: strict and no RedirectToLogin record exists; the
            exception carries the report
    """
    first_by_handle: Dict[str, str] = {}
    first_by_dataset: Dict[str, FirstLoginRedirect] = {}
    per_handle: Counter = Counter()
    first: Optional[FirstLoginRedirect] = None
    for classified in records:
        if classified.memento_class.kind is not ReplayKind.REDIRECT_LOGIN:
            continue
        handle = account_handle(classified.record.original)
        timestamp = classified.timestamp
        candidate = FirstLoginRedirect(handle=handle, timestamp=timestamp, dataset=classified.dataset)
        per_handle[handle] += 1
        if handle not in first_by_handle or timestamp < first_by_handle[handle]:
            first_by_handle[handle] = timestamp
        if classified.dataset is not None:
            earliest = first_by_dataset.get(classified.dataset)
            if earliest is None or timestamp < earliest.timestamp:
                first_by_dataset[classified.dataset] = candidate
        if first is None or timestamp < first.timestamp:
            first = candidate

    report = OnsetReport(
        first_login_redirect=first,
        max_daily_jump=max_daily_jump(series),
        series=list(series),
        first_by_dataset=first_by_dataset,
        first_by_handle=first_by_handle,
        login_redirects_by_handle=dict(per_handle),
    )
    if first is None:
        logger.warning("no redirect to the login page among the classified records")
        if strict:
            raise NoLoginRedirects(report)
    else:
        logger.info("first login redirect: %s at %s", first.handle, first.timestamp)
        for name, earliest in sorted(first_by_dataset.items()):
            logger.info("first login redirect in %s: %s at %s", name, earliest.handle, earliest.timestamp)
    return report
