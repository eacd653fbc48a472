"""
Report Module

Datasets of account handles, the run manifest, and the run directory that
every subcommand reads from and writes to:

    runs/{run-id}/
        manifest.json
        cdx/{handle}.json
        classified.csv
        replayability.csv, replayability.json
        login_series.csv, onset.json
        scrapes/{handle}_{timestamp}.json
        verdicts.csv
        shortcodes.csv, trends.csv, tags.csv

Output is deterministic: identical inputs give identical bytes (fixed column
order, sorted JSON keys, percentages fixed at two decimals in CSV and full
precision in JSON).
"""

import csv
import io
import json
import logging
import os
import re
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Sequence

from pydantic import BaseModel, Field, field_validator, model_validator

from mementolens import __version__
from mementolens.cdx_client import CdxRecord
from mementolens.classifier import ClassifiedRecord, MementoClass
from mementolens.errors import DuplicateHandle, MissingRun, ParseError, StorageError
from mementolens.probe import ProbeVerdict
from mementolens.replayability import (
    DailyCount,
    OnsetReport,
    ReplayabilityStats,
    TimeBucket,
    plot_points,
    replayable_fraction,
)
from mementolens.scraper import ScrapeResult, ShortcodeSighting, TagSighting, TrendPoint

logger = logging.getLogger(__name__)

HANDLE_RE = re.compile(r"^[a-z0-9._]{1,30}$")
DATASET_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]{0,63}$")
HEADER_RE = re.compile(r"^#\s*(name|source)\s*:\s*(.*)$", re.IGNORECASE)

CLASSIFIED_COLUMNS = [
    "endpoint", "timestamp", "original", "status", "class", "final_uri", "hops", "resolved_via",
    "mimetype", "digest", "dataset",
]
SERIES_COLUMNS = [
    "period", "n_success", "n_revisit", "n_revisit_success", "n_login_redirect", "n_client_error",
    "n_server_error", "excluded_redirects", "n_revisit_login", "n_revisit_canonical", "pct_replayable",
]
VERDICT_COLUMNS = [
    "url", "archived", "first_memento", "last_memento", "live_status", "checked_at", "endpoint", "memento_count",
]
LOGIN_SERIES_COLUMNS = ["date", "count"]
SHORTCODE_COLUMNS = ["handle", "short_code", "first_seen", "post_url"]
TREND_COLUMNS = ["handle", "timestamp", "followed_by", "media", "follows"]
TAG_COLUMNS = ["handle", "kind", "tag", "first_seen", "mementos"]


# ---------------------------------------------------------------------------
# Datasets


class Dataset(BaseModel):
    """A named list of account handles (e.g. top25)."""

    name: str = Field(min_length=1)
    handles: List[str]
    source_note: str = ""

    @field_validator("name")
    @classmethod
    def check_name(cls, name: str) -> str:
        if not DATASET_NAME_RE.match(name):
            raise ValueError(f"invalid dataset name {name!r}")
        return name

    @field_validator("handles")
    @classmethod
    def check_handles(cls, handles: List[str]) -> List[str]:
        if not handles:
            raise ValueError("dataset has no handles")
        if len(set(handles)) != len(handles):
            raise ValueError("dataset handles must be unique")
        for handle in handles:
            if handle != handle.lower() or not HANDLE_RE.match(handle):
                raise ValueError(f"invalid handle {handle!r}")
        return handles


def normalize_handle(raw: str) -> str:
    """'@KatyPerry ' -> 'katyperry'."""
    return raw.strip().lstrip("@").lower()


def load_dataset(path: Path) -> Dataset:
    """
    Read a dataset file: one handle per line, '#' comments, optional
    '# name:' and '# source:' header lines.

    Raises:
        MissingRun: the file does not exist
        ParseError: a line is not a valid handle (carries the line number)
        DuplicateHandle: a handle appears twice after normalization
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as e:
        raise MissingRun(f"dataset file not found: {path}") from e

    name, source = path.stem, ""
    handles: List[str] = []
    seen: Dict[str, int] = {}
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            header = HEADER_RE.match(stripped)
            if header and header.group(1).lower() == "name":
                name = header.group(2).strip() or name
            elif header:
                source = header.group(2).strip()
            continue
        handle = normalize_handle(stripped)
        if not HANDLE_RE.match(handle):
            raise ParseError(f"not an account handle: {stripped!r}", line=number)
        if handle in seen:
            raise DuplicateHandle(handle, number)
        seen[handle] = number
        handles.append(handle)
    if not handles:
        raise ParseError(f"dataset {path} lists no handles")
    if not DATASET_NAME_RE.match(name):
        raise ParseError(f"invalid dataset name {name!r} in {path}")
    return Dataset(name=name, handles=handles, source_note=source)


# ---------------------------------------------------------------------------
# Run manifest


class StageCounts(BaseModel):
    fetched: int = Field(default=0, ge=0)
    classified: int = Field(default=0, ge=0)
    scraped: int = Field(default=0, ge=0)
    probed: int = Field(default=0, ge=0)


class RunManifest(BaseModel):
    """Reproducibility record written with every run."""

    tool_version: str = __version__
    run_id: str
    dataset: Optional[str] = None
    datasets: Dict[str, List[str]] = Field(default_factory=dict)
    endpoints: List[str] = Field(default_factory=list)
    query_from: Optional[str] = None
    query_to: Optional[str] = None
    cache_state: Literal["warm", "cold", "mixed", "unknown"] = "unknown"
    started_at: str
    finished_at: Optional[str] = None
    counts: StageCounts = Field(default_factory=StageCounts)
    failures: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_counts(self) -> "RunManifest":
        if self.counts.classified > self.counts.fetched:
            raise ValueError(
                f"classified ({self.counts.classified}) exceeds fetched ({self.counts.fetched})"
            )
        return self


def cache_state(from_cache_flags: Iterable[bool]) -> str:
    flags = list(from_cache_flags)
    if not flags:
        return "unknown"
    if all(flags):
        return "warm"
    return "cold" if not any(flags) else "mixed"


# ---------------------------------------------------------------------------
# Serialization helpers


def format_pct(stats: ReplayabilityStats) -> Optional[Decimal]:
    """Percentage rounded to two decimals from the exact fraction; None when undefined."""
    fraction = replayable_fraction(stats)
    if fraction is None:
        return None
    value = Decimal(fraction.numerator * 100) / Decimal(fraction.denominator)
    return value.quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN)


def _atomic_write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text, encoding="utf-8", newline="")
        os.replace(tmp, path)
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e


def render_csv(columns: Sequence[str], rows: Iterable[Dict[str, Any]]) -> str:
    """Comma-separated, strings quoted, numbers bare, header always present."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if row.get(c) is None else row.get(c) for c in columns])
    return buffer.getvalue()


def render_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Dict[str, Any]]) -> Path:
    _atomic_write(Path(path), render_csv(columns, rows))
    return Path(path)


def write_json(path: Path, payload: Any) -> Path:
    _atomic_write(Path(path), render_json(payload))
    return Path(path)


def read_csv(path: Path) -> List[Dict[str, str]]:
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            return list(csv.DictReader(handle))
    except FileNotFoundError as e:
        raise MissingRun(f"missing report file: {path}") from e
    except OSError as e:
        raise StorageError(f"cannot read {path}: {e}") from e


def read_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise MissingRun(f"missing report file: {path}") from e
    except (OSError, json.JSONDecodeError) as e:
        raise StorageError(f"cannot read {path}: {e}") from e


# rows <-> domain objects


def series_rows(buckets: Sequence[TimeBucket]) -> List[Dict[str, Any]]:
    rows = []
    for bucket in buckets:
        row: Dict[str, Any] = {"period": bucket.period, **bucket.stats.model_dump()}
        row["pct_replayable"] = format_pct(bucket.stats)
        rows.append(row)
    return rows


def buckets_from_rows(rows: Iterable[Dict[str, str]]) -> List[TimeBucket]:
    counters = [c for c in SERIES_COLUMNS if c not in ("period", "pct_replayable")]
    return [
        TimeBucket(period=row["period"], stats=ReplayabilityStats(**{c: int(row[c] or 0) for c in counters}))
        for row in rows
    ]


def classified_row(classified: ClassifiedRecord) -> Dict[str, Any]:
    row = classified.row()
    row["mimetype"] = classified.record.mimetype
    row["digest"] = classified.record.digest or ""
    return row


def classified_from_row(row: Dict[str, str]) -> ClassifiedRecord:
    status = row["status"]
    record = CdxRecord(
        timestamp=row["timestamp"],
        original=row["original"],
        mimetype=row.get("mimetype", ""),
        statuscode=status,
        digest=row.get("digest") or None,
        endpoint_name=row["endpoint"],
    )
    memento_class = MementoClass.from_label(
        row["class"], final_uri=row.get("final_uri") or None, status=int(status) if status.isdigit() else None
    )
    return ClassifiedRecord(
        record=record,
        memento_class=memento_class,
        final_uri=row.get("final_uri") or None,
        hops=int(row.get("hops") or 0),
        resolved_via=row.get("resolved_via") or "none",
        dataset=row.get("dataset") or None,
    )


def write_report(
    payload: Any, path: Path, fmt: Literal["csv", "json"] = "csv"
) -> Path:
    """
    Write a series, onset report, verdict list or scrape result.

    Args:
        payload: list of TimeBucket, OnsetReport, list of ProbeVerdict, or ScrapeResult
        path: destination file
        fmt: csv or json (onset reports and scrape results are JSON only)

    Raises:
        StorageError: the file could not be written
        ValueError: unsupported payload/format combination
    """
    path = Path(path)
    if isinstance(payload, ScrapeResult):
        _atomic_write(path, payload.to_json())
        return path
    if isinstance(payload, OnsetReport):
        return write_json(path, payload.to_json())
    items = list(payload)
    if all(isinstance(i, TimeBucket) for i in items):
        if fmt == "csv":
            return write_csv(path, SERIES_COLUMNS, series_rows(items))
        return write_json(path, plot_points(items))
    if all(isinstance(i, ProbeVerdict) for i in items):
        if fmt == "csv":
            return write_csv(path, VERDICT_COLUMNS, (v.row() for v in items))
        return write_json(path, [v.model_dump() for v in items])
    raise ValueError(f"cannot write {type(payload).__name__} as {fmt}")


# ---------------------------------------------------------------------------
# Run directory


class RunStore:
    """
    Reads and writes one run directory.

    Example:
        >>> store = RunStore(Path("runs"), "top25-wayback")
        >>> store.write_classified(rows)
        >>> store.read_classified() == rows
        True
    """

    def __init__(self, root: Path, run_id: str):
        if not run_id or "/" in run_id or run_id.startswith("."):
            raise ValueError(f"invalid run id {run_id!r}")
        self.root = Path(root)
        self.run_id = run_id
        self.path = self.root / run_id

    def exists(self) -> bool:
        return self.path.is_dir()

    def require(self) -> "RunStore":
        if not self.exists():
            raise MissingRun(f"no run {self.run_id!r} under {self.root}")
        return self

    def file(self, name: str) -> Path:
        return self.path / name

    # manifest

    def write_manifest(self, manifest: RunManifest) -> Path:
        return write_json(self.file("manifest.json"), manifest.model_dump(mode="json"))

    def read_manifest(self) -> RunManifest:
        return RunManifest(**read_json(self.require().file("manifest.json")))

    # CDX records per handle

    def write_cdx(
        self,
        handle: str,
        target: str,
        records: Sequence[CdxRecord],
        fetched_at: Optional[str],
        dataset: Optional[str] = None,
    ) -> Path:
        payload = {
            "handle": handle,
            "dataset": dataset,
            "target": target,
            "fetched_at": fetched_at,
            "records": [r.model_dump() for r in records],
        }
        return write_json(self.file(f"cdx/{handle}.json"), payload)

    def cdx_handles(self) -> List[str]:
        directory = self.require().file("cdx")
        return sorted(p.stem for p in directory.glob("*.json")) if directory.is_dir() else []

    def read_cdx(self, handle: str) -> List[CdxRecord]:
        payload = read_json(self.require().file(f"cdx/{handle}.json"))
        return [CdxRecord(**r) for r in payload["records"]]

    def cdx_dataset(self, handle: str) -> Optional[str]:
        """Dataset the handle was fetched for (None for untagged files)."""
        return read_json(self.require().file(f"cdx/{handle}.json")).get("dataset")

    # classification

    def write_classified(self, records: Sequence[ClassifiedRecord]) -> Path:
        ordered = sorted(records, key=lambda c: (c.record.endpoint_name, c.record.original, c.timestamp))
        return write_csv(self.file("classified.csv"), CLASSIFIED_COLUMNS, (classified_row(c) for c in ordered))

    def has_classified(self) -> bool:
        return self.file("classified.csv").is_file()

    def read_classified(self) -> List[ClassifiedRecord]:
        return [classified_from_row(row) for row in read_csv(self.require().file("classified.csv"))]

    # replayability

    def write_series(self, buckets: Sequence[TimeBucket], dataset: Optional[str] = None) -> List[Path]:
        """replayability.csv/.json, or replayability_{dataset}.csv/.json for one dataset."""
        stem = f"replayability_{dataset}" if dataset else "replayability"
        return [
            write_report(buckets, self.file(f"{stem}.csv"), "csv"),
            write_report(buckets, self.file(f"{stem}.json"), "json"),
        ]

    def read_series(self, dataset: Optional[str] = None) -> List[TimeBucket]:
        stem = f"replayability_{dataset}" if dataset else "replayability"
        return buckets_from_rows(read_csv(self.require().file(f"{stem}.csv")))

    def write_login_series(self, series: Sequence[DailyCount]) -> Path:
        rows = ({"date": d.isoformat(), "count": c} for d, c in series)
        return write_csv(self.file("login_series.csv"), LOGIN_SERIES_COLUMNS, rows)

    def write_onset(self, report: OnsetReport) -> Path:
        return write_report(report, self.file("onset.json"), "json")

    def read_onset(self) -> OnsetReport:
        return OnsetReport.from_json(read_json(self.require().file("onset.json")))

    # scrapes

    def write_scrape(self, result: ScrapeResult, name: str) -> Path:
        return write_report(result, self.file(f"scrapes/{name}"), "json")

    def read_scrapes(self) -> List[ScrapeResult]:
        directory = self.require().file("scrapes")
        if not directory.is_dir():
            return []
        return [ScrapeResult.from_document(read_json(p)) for p in sorted(directory.glob("*.json"))]

    # probes

    def write_verdicts(self, verdicts: Sequence[ProbeVerdict]) -> Path:
        return write_csv(self.file("verdicts.csv"), VERDICT_COLUMNS, (v.row() for v in verdicts))

    def read_verdicts(self) -> List[ProbeVerdict]:
        return [ProbeVerdict.from_row(row) for row in read_csv(self.require().file("verdicts.csv"))]

    # downstream scrape reports

    def write_shortcodes(self, by_handle: Dict[str, Sequence[ShortcodeSighting]]) -> Path:
        rows = (
            {"handle": handle, **s.model_dump()}
            for handle in sorted(by_handle)
            for s in by_handle[handle]
        )
        return write_csv(self.file("shortcodes.csv"), SHORTCODE_COLUMNS, rows)

    def write_trends(self, by_handle: Dict[str, Dict[str, Sequence[TrendPoint]]]) -> Path:
        rows = []
        for handle in sorted(by_handle):
            metrics = by_handle[handle]
            timestamps = [p.timestamp for p in metrics.get("followed_by", [])]
            for index, timestamp in enumerate(timestamps):
                row: Dict[str, Any] = {"handle": handle, "timestamp": timestamp}
                for metric in ("followed_by", "media", "follows"):
                    points = metrics.get(metric, [])
                    row[metric] = points[index].value if index < len(points) else None
                rows.append(row)
        return write_csv(self.file("trends.csv"), TREND_COLUMNS, rows)

    def write_tags(self, by_handle: Dict[str, Sequence[TagSighting]]) -> Path:
        rows = (
            {"handle": handle, **t.model_dump()}
            for handle in sorted(by_handle)
            for t in by_handle[handle]
        )
        return write_csv(self.file("tags.csv"), TAG_COLUMNS, rows)
