"""
mementolens command line.

Usage:
    mementolens fetch --dataset data/top25.txt --endpoint wayback
    mementolens fetch --dataset data/disinfo12.txt --dataset data/health-authorities.txt --dataset data/top25.txt
    mementolens classify top25-wayback
    mementolens analyze top25-wayback --granularity month
    mementolens onset top25-wayback --from 20190801 --to 20190831
    mementolens scrape https://web.archive.org/web/20170214033011/https://www.instagram.com/beyonce/
    mementolens scrape --batch urims.txt --no-probe
    mementolens probe urls.txt
    mementolens report scrapes

Exit codes: 0 success, 2 partial failure (failed items are listed on
stderr), 64 usage error.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import click
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from mementolens import __version__
from mementolens.cache import ResponseCache, isoformat_utc, utc_now
from mementolens.cdx_client import CdxClient, CdxQuery, CdxResult, expand_bound
from mementolens.classifier import ClassifiedRecord, ReplayResolver, canonicalize, classify_records
from mementolens.config import PACKAGE_ROOT, Config, load_config
from mementolens.endpoints import ArchiveEndpoint, load_registry
from mementolens.errors import ConfigError, MementoLensError, MissingRun, ParseError
from mementolens.probe import ArchiveProbe
from mementolens.replayability import (
    DailyCount,
    ReplayabilityStats,
    bucketize,
    detect_onset,
    login_page_series,
    percentage_replayable,
)
from mementolens.report import Dataset, RunManifest, RunStore, cache_state, load_dataset
from mementolens.scraper import MementoScraper, collect_shortcodes, extract_tags, output_name, trend_series
from mementolens.transport import AllowlistTransport, Fetcher, RateLimiter, RequestsTransport, Transport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 2
EXIT_USAGE = 64

DEFAULT_DATASET = PACKAGE_ROOT / "data" / "top25.txt"

app = typer.Typer(
    name="mementolens",
    help="Replayability analysis and metadata scraping for archived Instagram account pages.",
    no_args_is_help=True,
    add_completion=False,
)
console = Console(stderr=True)


class Granularity(str, Enum):
    year = "year"
    month = "month"
    day = "day"


class Runtime:
    """Everything a subcommand needs, built once from the effective Config."""

    def __init__(
        self,
        config: Config,
        transport: Optional[Transport] = None,
        live_transport: Optional[Transport] = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.config = config
        self.registry = load_registry(config.endpoints_path)
        # archive traffic only; live probing gets its own transport
        self.transport = AllowlistTransport(transport or RequestsTransport(), self.registry.archive_hosts())
        self.live_transport = live_transport
        self.cache = ResponseCache(config.cache_dir, refresh=config.refresh)
        self.limiter = RateLimiter(config.rate_limit, clock=clock, sleep=sleep)
        self.sleep = sleep
        self.clock = clock
        self.fetcher = Fetcher(
            self.transport,
            cache=self.cache,
            limiter=self.limiter,
            retry_attempts=config.retry_attempts,
            backoff_base=config.backoff_base,
            timeout=config.timeout,
            user_agent=config.user_agent,
            sleep=sleep,
        )
        self.cdx_client = CdxClient(self.fetcher)
        self.resolver = ReplayResolver(self.fetcher, self.registry, config.hop_limit)

    def endpoint(self, name: str) -> ArchiveEndpoint:
        try:
            return self.registry.get(name)
        except ConfigError as e:
            raise click.UsageError(str(e)) from e

    def store(self, run_id: str) -> RunStore:
        try:
            return RunStore(self.config.output_dir, run_id)
        except ValueError as e:
            raise click.UsageError(str(e)) from e

    def scraper(self) -> MementoScraper:
        return MementoScraper(self.fetcher, self.registry, hop_limit=self.config.hop_limit, workers=self.config.workers)

    def probe(self, live: bool) -> ArchiveProbe:
        live_transport = self.live_transport or (RequestsTransport() if live else None)
        return ArchiveProbe(
            self.cdx_client,
            live_transport=live_transport,
            live_enabled=live,
            live_limiter=RateLimiter(self.config.rate_limit, clock=self.clock, sleep=self.sleep),
            timeout=self.config.timeout,
            user_agent=self.config.user_agent,
        )


def _runtime(ctx: typer.Context) -> Runtime:
    return ctx.obj["runtime"]


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False, show_time=False)],
        force=True,
    )


def _run_pool(func: Callable[[Any], Any], items: Sequence[Any], workers: int) -> List[Any]:
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def _report_failures(failures: Sequence[str]) -> None:
    if not failures:
        return
    console.print(f"[yellow]{len(failures)} item(s) failed:[/yellow]")
    for failure in failures:
        console.print(f"  - {failure}")


def _read_lines(path: Path) -> List[str]:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise click.UsageError(f"file not found: {path}") from e
    return [line.strip() for line in text.splitlines() if line.strip() and not line.strip().startswith("#")]


def _update_manifest(store: RunStore, started: str, outputs: Sequence[Path], **changes: Any) -> RunManifest:
    """Merge stage results into the run's manifest (created when absent)."""
    counts_update = changes.pop("counts", {})
    failures = changes.pop("failures", [])
    try:
        manifest = store.read_manifest()
    except MissingRun:
        manifest = RunManifest(run_id=store.run_id, started_at=started)
    counts = manifest.counts.model_copy(update=counts_update)
    if counts.classified > counts.fetched:
        counts = counts.model_copy(update={"fetched": counts.classified})
    names = sorted(set(manifest.outputs) | {p.relative_to(store.path).as_posix() for p in outputs})
    manifest = RunManifest(
        **{
            **manifest.model_dump(),
            **changes,
            "counts": counts.model_dump(),
            "outputs": names,
            "failures": list(failures),
            "finished_at": isoformat_utc(utc_now()),
        }
    )
    store.write_manifest(manifest)
    return manifest


def _check_bound(value: Optional[str], upper: bool = False) -> Optional[str]:
    try:
        return expand_bound(value, upper=upper)
    except ValueError as e:
        raise click.UsageError(str(e)) from e


@app.callback()
def main_callback(
    ctx: typer.Context,
    config_file: Optional[Path] = typer.Option(None, "--config", help="TOML config file"),
    cache_dir: Optional[Path] = typer.Option(None, "--cache-dir", help="Response cache directory"),
    rate: Optional[float] = typer.Option(None, "--rate", help="Requests per second per archive host"),
    retries: Optional[int] = typer.Option(None, "--retries", help="Attempts per request"),
    hop_limit: Optional[int] = typer.Option(None, "--hop-limit", help="Maximum replay redirects followed"),
    output_dir: Optional[Path] = typer.Option(None, "--output", help="Directory holding run directories"),
    endpoints_path: Optional[Path] = typer.Option(None, "--endpoints", help="Endpoint registry JSON"),
    workers: Optional[int] = typer.Option(None, "--workers", help="Worker pool size"),
    refresh: bool = typer.Option(False, "--refresh", help="Ignore cached responses and refetch"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Warnings and errors only"),
):
    """Shared options; every subcommand uses the same cache and rate limits."""
    _configure_logging(verbose, quiet)
    hooks: Dict[str, Any] = ctx.obj if isinstance(ctx.obj, dict) else {}
    overrides = {
        "cache_dir": cache_dir,
        "rate_limit": rate,
        "retry_attempts": retries,
        "hop_limit": hop_limit,
        "output_dir": output_dir,
        "endpoints_path": endpoints_path,
        "workers": workers,
        "refresh": refresh or None,
    }
    try:
        config = load_config(config_file, overrides, environ=hooks.get("environ"))
        runtime = Runtime(
            config,
            transport=hooks.get("transport"),
            live_transport=hooks.get("live_transport"),
            sleep=hooks.get("sleep") or time.sleep,
            clock=hooks.get("clock") or time.monotonic,
        )
    except ConfigError as e:
        raise click.UsageError(str(e)) from e
    ctx.obj = {**hooks, "runtime": runtime}
    ctx.call_on_close(runtime.cache.close)


def _load_datasets(paths: Sequence[Path]) -> List[Dataset]:
    """Dataset files of one fetch; a handle may belong to only one of them."""
    datasets: List[Dataset] = []
    owner: Dict[str, str] = {}
    for path in paths:
        try:
            ds = load_dataset(path)
        except MementoLensError as e:
            raise click.UsageError(str(e)) from e
        if any(d.name == ds.name for d in datasets):
            raise click.UsageError(f"dataset {ds.name!r} given twice")
        for handle in ds.handles:
            if handle in owner:
                raise click.UsageError(f"handle {handle!r} is in both {owner[handle]} and {ds.name}")
            owner[handle] = ds.name
        datasets.append(ds)
    return datasets


@app.command()
def fetch(
    ctx: typer.Context,
    dataset: Optional[List[Path]] = typer.Option(
        None, "--dataset", help="Dataset file of account handles; repeat for several (default: data/top25.txt)"
    ),
    endpoint: str = typer.Option("wayback", "--endpoint", help="Endpoint name from the registry"),
    from_: Optional[str] = typer.Option(None, "--from", help="Lower timestamp bound (YYYY[MM[DD...]])"),
    to: Optional[str] = typer.Option(None, "--to", help="Upper timestamp bound (YYYY[MM[DD...]])"),
    page_limit: Optional[int] = typer.Option(None, "--page-limit", help="Records per CDX page"),
    run_id: Optional[str] = typer.Option(None, "--run", help="Run id (default: {dataset}[+{dataset}...]-{endpoint})"),
):
    """Harvest the memento index of every account page in one or more datasets."""
    runtime = _runtime(ctx)
    started_at = isoformat_utc(utc_now())
    archive = runtime.endpoint(endpoint)
    datasets = _load_datasets(dataset or [DEFAULT_DATASET])
    label = "+".join(d.name for d in datasets)
    lower, upper = _check_bound(from_), _check_bound(to, upper=True)
    store = runtime.store(run_id or f"{label}-{archive.name}")
    members = [(d.name, handle) for d in datasets for handle in d.handles]

    def harvest(member: Tuple[str, str]) -> Tuple[str, Optional[CdxResult], Optional[str]]:
        name, handle = member
        target = runtime.config.account_url(handle)
        try:
            query = CdxQuery(endpoint=archive, target=target, from_=lower, to=upper, page_limit=page_limit)
            result = runtime.cdx_client.fetch_result(query)
            store.write_cdx(handle, target, result.records, result.fetched_at, dataset=name)
            return handle, result, None
        except MementoLensError as e:
            logger.warning("%s: %s", handle, e)
            return handle, None, f"{handle}: {e}"

    outcomes = _run_pool(harvest, members, runtime.config.workers)
    results = [r for _, r, _ in outcomes if r is not None]
    failures = [f for _, _, f in outcomes if f]
    fetched = sum(len(r.records) for r in results)
    _update_manifest(
        store,
        started_at,
        [store.file(f"cdx/{h}.json") for h, r, _ in outcomes if r is not None],
        dataset=label,
        datasets={d.name: list(d.handles) for d in datasets},
        endpoints=[archive.name],
        query_from=lower,
        query_to=upper,
        cache_state=cache_state(r.from_cache for r in results),
        started_at=started_at,
        counts={"fetched": fetched, "classified": 0},
        failures=failures,
    )
    console.print(f"[green]{fetched}[/green] records for {len(results)}/{len(members)} handles -> {store.path}")
    _report_failures(failures)
    if failures:
        raise typer.Exit(code=EXIT_PARTIAL)


def _classify_run(runtime: Runtime, store: RunStore, started_at: str) -> Tuple[List[ClassifiedRecord], List[str]]:
    store.require()
    handles = store.cdx_handles()

    def classify_handle(handle: str) -> Tuple[List[ClassifiedRecord], Optional[str]]:
        try:
            records = store.read_cdx(handle)
            dataset = store.cdx_dataset(handle)
            rows = classify_records(records, runtime.resolver, workers=1)
            return [c.model_copy(update={"dataset": dataset}) for c in rows], None
        except MementoLensError as e:
            logger.warning("%s: %s", handle, e)
            return [], f"{handle}: {e}"


    outcomes = _run_pool(classify_handle, handles, runtime.config.workers)
    classified = [c for rows, _ in outcomes for c in rows]
    failures = [f for _, f in outcomes if f]
    path = store.write_classified(classified)
    _update_manifest(store, started_at, [path], counts={"classified": len(classified)}, failures=failures)
    return classified, failures


@app.command()
def classify(ctx: typer.Context, run_id: str = typer.Argument(..., help="Run id written by fetch")):
    """Classify every fetched memento's replay outcome into classified.csv."""
    runtime = _runtime(ctx)
    classified, failures = _classify_run(runtime, runtime.store(run_id), isoformat_utc(utc_now()))
    console.print(f"[green]{len(classified)}[/green] mementos classified")
    _report_failures(failures)
    if failures:
        raise typer.Exit(code=EXIT_PARTIAL)


def _run_endpoint(runtime: Runtime, store: RunStore, name: Optional[str]) -> ArchiveEndpoint:
    if name:
        return runtime.endpoint(name)
    try:
        endpoints = store.read_manifest().endpoints
    except MissingRun:
        endpoints = []
    return runtime.endpoint(endpoints[0] if endpoints else "wayback")


def _onset(
    runtime: Runtime,
    store: RunStore,
    classified: List[ClassifiedRecord],
    archive: ArchiveEndpoint,
    window: Optional[Tuple[str, str]],
) -> Tuple[List[Path], Optional[str]]:
    """Write onset.json and login_series.csv; returns (paths, failure)."""
    failure = None
    series: List[DailyCount] = []
    if window is None:
        first = detect_onset(classified, []).first_login_redirect
        if first is not None:
            month = first.timestamp[:6]
            window = (month + "01", expand_bound(month, upper=True)[:8])
    if window is not None:
        try:
            series = login_page_series(runtime.cdx_client, archive, window[0], window[1], runtime.config.login_target)
        except MementoLensError as e:
            logger.warning("login page series: %s", e)
            failure = f"login page series: {e}"
    report = detect_onset(classified, series)
    paths = [store.write_onset(report), store.write_login_series(series)]
    if report.first_login_redirect:
        console.print(
            f"first login redirect: {report.first_login_redirect.handle} at {report.first_login_redirect.timestamp}"
        )
    for name, earliest in sorted(report.first_by_dataset.items()):
        console.print(f"  {name}: {earliest.handle} at {earliest.timestamp}")
    if report.max_daily_jump:
        jump = report.max_daily_jump
        console.print(f"max daily jump: {jump.date_from} -> {jump.date_to} ({jump.count_from} -> {jump.count_to})")
    return paths, failure


@app.command()
def analyze(
    ctx: typer.Context,
    run_id: str = typer.Argument(..., help="Run id written by fetch"),
    granularity: Granularity = typer.Option(Granularity.month, "--granularity", help="Bucket size"),
    endpoint: Optional[str] = typer.Option(None, "--endpoint", help="Archive for the login-page series"),
    dataset: Optional[List[str]] = typer.Option(
        None, "--dataset", help="Only mementos of this dataset of the run; repeat for several"
    ),
):
    """Replayability series plus login-wall onset for a fetched run, overall and per dataset."""
    runtime = _runtime(ctx)
    started_at = isoformat_utc(utc_now())
    store = runtime.store(run_id).require()
    failures: List[str] = []
    if store.has_classified():
        classified = store.read_classified()
    else:
        classified, failures = _classify_run(runtime, store, started_at)
    if dataset:
        unknown = sorted(set(dataset) - {c.dataset for c in classified})
        if unknown:
            raise click.UsageError(f"run {run_id!r} has no dataset {', '.join(unknown)}")
        classified = [c for c in classified if c.dataset in dataset]

    buckets = bucketize(classified, granularity.value)
    paths = store.write_series(buckets)
    names = sorted({c.dataset for c in classified if c.dataset})
    per_dataset: Dict[str, List[ClassifiedRecord]] = {
        name: [c for c in classified if c.dataset == name] for name in names
    }
    if len(names) > 1:
        for name, members in per_dataset.items():
            paths += store.write_series(bucketize(members, granularity.value), dataset=name)
    onset_paths, failure = _onset(runtime, store, classified, _run_endpoint(runtime, store, endpoint), None)
    if failure:
        failures.append(failure)
    _update_manifest(store, started_at, paths + onset_paths, failures=failures)

    table = Table(title=f"{run_id}: percentage replayable ({granularity.value})")
    table.add_column("period")
    table.add_column("mementos", justify="right")
    table.add_column("replayable %", justify="right")
    for bucket in buckets:
        pct = percentage_replayable(bucket.stats)
        table.add_row(bucket.period, str(bucket.stats.total), "" if pct is None else f"{pct:.2f}")
    console.print(table)
    if len(names) > 1:
        summary = Table(title=f"{run_id}: percentage replayable per dataset")
        summary.add_column("dataset")
        summary.add_column("mementos", justify="right")
        summary.add_column("replayable %", justify="right")
        for name, members in per_dataset.items():
            pct = percentage_replayable(ReplayabilityStats.from_classes(c.memento_class for c in members))
            summary.add_row(name, str(len(members)), "" if pct is None else f"{pct:.2f}")
        console.print(summary)
    _report_failures(failures)
    if failures:
        raise typer.Exit(code=EXIT_PARTIAL)



@app.command()
def onset(
    ctx: typer.Context,
    run_id: str = typer.Argument(..., help="Run id written by fetch"),
    from_: str = typer.Option(..., "--from", help="First day of the login-page window (YYYYMMDD)"),
    to: str = typer.Option(..., "--to", help="Last day of the login-page window (YYYYMMDD)"),
    endpoint: Optional[str] = typer.Option(None, "--endpoint", help="Archive for the login-page series"),
):
    """Login-wall onset over an explicit window of login-page mementos."""
    runtime = _runtime(ctx)
    started_at = isoformat_utc(utc_now())
    store = runtime.store(run_id).require()
    lower, upper = _check_bound(from_), _check_bound(to, upper=True)
    failures: List[str] = []
    if store.has_classified():
        classified = store.read_classified()
    else:
        classified, failures = _classify_run(runtime, store, started_at)
    paths, failure = _onset(runtime, store, classified, _run_endpoint(runtime, store, endpoint), (lower[:8], upper[:8]))
    if failure:
        failures.append(failure)
    _update_manifest(store, started_at, paths, failures=failures)
    _report_failures(failures)
    if failures:
        raise typer.Exit(code=EXIT_PARTIAL)


@app.command()
def scrape(
    ctx: typer.Context,
    urim: Optional[str] = typer.Argument(None, help="URI-M of an account page"),
    batch: Optional[Path] = typer.Option(None, "--batch", help="File with one URI-M per line"),
    probe: Optional[bool] = typer.Option(None, "--probe/--no-probe", help="GET every image resource"),
    run_id: str = typer.Option("scrapes", "--run", help="Run directory for the JSON documents"),
):
    """Scrape account-page mementos into profileUser/userMedia JSON documents."""
    runtime = _runtime(ctx)
    if (urim is None) == (batch is None):
        raise click.UsageError("give either a URI-M or --batch FILE")
    urims = [urim] if urim else _read_lines(batch)
    probe_images = runtime.config.probe_images if probe is None else probe
    started_at = isoformat_utc(utc_now())
    store = runtime.store(run_id)
    scraper = runtime.scraper()

    def scrape_one(target: str) -> Tuple[Optional[Path], Optional[str]]:
        try:
            result = scraper.scrape(target, probe_images=probe_images)
            return store.write_scrape(result, output_name(result, runtime.registry)), None
        except MementoLensError as e:
            logger.warning("%s: %s", target, e)
            return None, f"{target}: {type(e).__name__}: {e}"

    outcomes = _run_pool(scrape_one, urims, runtime.config.workers)
    written = [p for p, _ in outcomes if p]
    failures = [f for _, f in outcomes if f]
    if written or store.exists():
        _update_manifest(store, started_at, written, counts={"scraped": len(written)}, failures=failures)
    for path in written:
        console.print(f"wrote {path}")
    _report_failures(failures)
    if failures:
        raise typer.Exit(code=EXIT_PARTIAL)


@app.command()
def probe(
    ctx: typer.Context,
    urls_file: Path = typer.Argument(..., help="File with one URL per line"),
    endpoint: str = typer.Option("wayback", "--endpoint", help="Archive to check"),
    live: bool = typer.Option(False, "--live", help="Also GET each URL on the live web"),
    acknowledged: bool = typer.Option(
        False, "--i-understand-live-probing", help="Required with --live: requests will reach live hosts"
    ),
    run_id: str = typer.Option("probes", "--run", help="Run directory for verdicts.csv"),
):
    """Archived (and optionally live) verdicts for a list of URLs."""
    runtime = _runtime(ctx)
    if live and not acknowledged:
        raise click.UsageError("--live contacts live hosts; add --i-understand-live-probing to proceed")
    archive = runtime.endpoint(endpoint)
    urls: List[str] = []
    failures: List[str] = []
    for url in _read_lines(urls_file):
        try:
            canonicalize(url)
            urls.append(url)
        except ParseError as e:
            failures.append(f"{url}: {e}")
    started_at = isoformat_utc(utc_now())
    store = runtime.store(run_id)
    verdicts = runtime.probe(live).probe_all(urls, archive, live=live, workers=runtime.config.workers)
    path = store.write_verdicts(verdicts)
    failures += [f"{v.url}: archive lookup failed ({v.archive_error})" for v in verdicts if v.archived is None]
    _update_manifest(
        store, started_at, [path], endpoints=[archive.name], counts={"probed": len(verdicts)}, failures=failures
    )
    console.print(f"{len(verdicts)} verdict(s) -> {path}")
    _report_failures(failures)
    if failures:
        raise typer.Exit(code=EXIT_PARTIAL)


@app.command()
def report(ctx: typer.Context, run_id: str = typer.Argument("scrapes", help="Run holding scrapes/")):
    """Shortcode, trend and tag tables from a run's scrape documents."""
    runtime = _runtime(ctx)
    started_at = isoformat_utc(utc_now())
    store = runtime.store(run_id).require()
    results = store.read_scrapes()
    by_handle: Dict[str, list] = {}
    for result in results:
        by_handle.setdefault(result.handle, []).append(result)
    paths = [
        store.write_shortcodes({h: collect_shortcodes(rs) for h, rs in by_handle.items()}),
        store.write_trends(
            {h: {m: trend_series(rs, m) for m in ("followed_by", "media", "follows")} for h, rs in by_handle.items()}
        ),
        store.write_tags({h: extract_tags(rs) for h, rs in by_handle.items()}),
    ]
    _update_manifest(store, started_at, paths)
    console.print(f"{len(results)} scrape document(s) from {len(by_handle)} account(s) summarized")


@app.command()
def version():
    """Print the mementolens version."""
    typer.echo(__version__)


def main(
    argv: Optional[Sequence[str]] = None,
    transport: Optional[Transport] = None,
    live_transport: Optional[Transport] = None,
    sleep: Optional[Callable[[float], None]] = None,
    clock: Optional[Callable[[], float]] = None,
    environ: Optional[Dict[str, str]] = None,
) -> int:
    """
    Run the CLI and return its exit code.

    The keyword hooks replace the network transports, sleep and clock, and
    the environment; tests use them to run every subcommand hermetically.
    """
    command = typer.main.get_command(app)
    hooks = {"transport": transport, "live_transport": live_transport, "sleep": sleep, "clock": clock, "environ": environ}
    try:
        result = command.main(
            args=list(argv) if argv is not None else None,
            prog_name="mementolens",
            standalone_mode=False,
            obj=hooks,
        )
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except MissingRun as e:
        console.print(f"[red]{e}[/red]")
        return EXIT_USAGE
    except click.Abort:
        return 1
    except MementoLensError as e:
        console.print(f"[red]{type(e).__name__}: {e}[/red]")
        return 1
    return result if isinstance(result, int) else EXIT_OK


def run() -> None:
    raise SystemExit(main())
