"""Command-line entry point wiring the modules into workflows.

Exit codes: 0 success, 2 extraction produced an empty TTP (skip-only
result), 1 error.  With --json every command writes a machine-readable
result to stdout and JSON diagnostics to stderr, all carrying a stable
schema_version field.
"""

from __future__ import annotations

import json
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import graph as graph_mod
from .config import CliConfig, load_config
from .errors import EmptyCorpus, NoOverlap, TtpkitError
from .extract import extract as run_extract
from .ingest import Ecosystem, ingest_package
from .llm import HttpProvider, MockProvider
from .metrics import score_corpus
from .reports import (
    Confidence,
    GroundTruthRecord,
    ReportFetcher,
    classify_report,
    extract_records,
    fetch_and_extract,
    read_ground_truth,
    write_ground_truth,
)
from .store import TtpDocument, VectorIndex
from .typosquat import detect_typosquat, load_popular_names
from .vectors import render_abstract

JSON_SCHEMA_VERSION = 1
ARCHIVE_GLOBS = ("*.tar.gz", "*.tgz", "*.zip", "*.whl")


def _emit(ctx_obj, payload: dict) -> None:
    if ctx_obj["json"]:
        payload = {"schema_version": JSON_SCHEMA_VERSION, **payload}
        click.echo(json.dumps(payload, indent=2, ensure_ascii=False))


def _diag(ctx_obj, kind: str, message: str) -> None:
    if ctx_obj["json"]:
        click.echo(
            json.dumps(
                {"schema_version": JSON_SCHEMA_VERSION, "error": kind, "message": message}
            ),
            err=True,
        )
    else:
        click.echo(f"error ({kind}): {message}", err=True)


def make_provider(config: CliConfig):
    if config.mock_mode:
        if config.transcripts is not None:
            return MockProvider.from_fixture(config.transcripts)
        return MockProvider(default_response="no attack vectors")
    return HttpProvider(config.provider)


def _load_docs_dir(dir_path: Path) -> list[TtpDocument]:
    docs = []
    for path in sorted(dir_path.glob("*.json")):
        if path.name.endswith(".transcripts.json"):
            continue
        docs.append(TtpDocument.from_json(json.loads(path.read_text(encoding="utf-8"))))
    if not docs:
        raise EmptyCorpus(f"no TTP documents under {dir_path}")
    return docs


@click.group()
@click.option("--config", "config_file", type=click.Path(exists=True), default=None,
              help="JSON config file.")
@click.option("--mock/--live", "mock_mode", default=None,
              help="Use the offline mock provider (default) or a live endpoint.")
@click.option("--transcripts", type=click.Path(exists=True), default=None,
              help="Mock transcript fixture (replay/rules JSON).")
@click.option("--index-dir", type=click.Path(), default=None)
@click.option("--json", "json_out", is_flag=True, default=False,
              help="Machine-readable stdout/stderr.")
@click.pass_context
def main(ctx, config_file, mock_mode, transcripts, index_dir, json_out):
    """Extract, score, analyze and serve TTPs of malicious packages."""
    ctx.ensure_object(dict)
    try:
        config = load_config(
            config_file,
            mock_mode=mock_mode,
            transcripts=transcripts,
            index_dir=index_dir,
        )
    except TtpkitError as exc:
        click.echo(f"error ({exc.kind}): {exc}", err=True)
        ctx.exit(1)
    ctx.obj.update({"config": config, "json": json_out})


def _extract_one(config: CliConfig, archive: Path, ecosystem: str, single_shot: bool, provider=None):
    provider = provider or make_provider(config)
    with tempfile.TemporaryDirectory(prefix="ttpkit-") as workdir:
        artifact = ingest_package(
            archive,
            workdir,
            Ecosystem(ecosystem),
            oversimplified_max=config.oversimplified_max,
            oversized_min=config.oversized_min,
        )
        signal = None
        if config.typosquat_corpus.exists():
            corpus = load_popular_names(config.typosquat_corpus)
            signal = detect_typosquat(
                artifact.name, corpus, config.typosquat_max_distance
            )
        result = run_extract(
            artifact, provider, typosquat_signal=signal, single_shot=single_shot
        )
        return artifact, result


@main.command()
@click.argument("archive", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="Output document path.")
@click.option("--single-shot", is_flag=True, default=False,
              help="One monolithic prompt instead of per-subtask calls.")
@click.option("--dump-artifact", type=click.Path(), default=None,
              help="Also write the ingested artifact as JSON.")
@click.option("--ecosystem", type=click.Choice([e.value for e in Ecosystem]),
              default="pypi")
@click.pass_context
def extract(ctx, archive, out, single_shot, dump_artifact, ecosystem):
    """Extract a TTP document from one package archive."""
    config: CliConfig = ctx.obj["config"]
    try:
        artifact, result = _extract_one(config, Path(archive), ecosystem, single_shot)
    except TtpkitError as exc:
        _diag(ctx.obj, exc.kind, str(exc))
        ctx.exit(1)
    if dump_artifact:
        Path(dump_artifact).write_text(
            json.dumps(artifact.to_json(), indent=2, ensure_ascii=False), encoding="utf-8"
        )
    doc = TtpDocument.from_extraction(result)
    out_path = Path(out) if out else Path(f"{artifact.name}-{artifact.version}.ttp.json")
    out_path.write_text(
        json.dumps(doc.to_json(), indent=2, ensure_ascii=False), encoding="utf-8"
    )
    sidecar = out_path.with_name(out_path.stem + ".transcripts.json")
    sidecar.write_text(
        json.dumps(result.to_json()["subtask_transcripts"], indent=2, ensure_ascii=False),
        encoding="utf-8",
    )
    _emit(
        ctx.obj,
        {
            "document": str(out_path),
            "abstract_ttp": render_abstract(result.ttp),
            "skipped": sorted(s.value for s in result.skipped),
        },
    )
    if not ctx.obj["json"]:
        click.echo(f"{artifact.name} {render_abstract(result.ttp)}")
        for skip in sorted(s.value for s in result.skipped):
            click.echo(f"note: {skip}")
    if result.ttp.is_empty():
        ctx.exit(2)


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--out-dir", type=click.Path(), default="ttp-docs")
@click.option("--jobs", type=int, default=None,
              help="Parallel workers (default: CPU count).")
@click.option("--ecosystem", type=click.Choice([e.value for e in Ecosystem]),
              default="pypi")
@click.pass_context
def batch(ctx, directory, out_dir, jobs, ecosystem):
    """Extract every archive in a directory; failures are isolated."""
    config: CliConfig = ctx.obj["config"]
    archives = sorted(
        {p for pattern in ARCHIVE_GLOBS for p in Path(directory).glob(pattern)}
    )
    if not archives:
        _diag(ctx.obj, "EmptyCorpus", f"no package archives under {directory}")
        ctx.exit(1)
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    provider = make_provider(config)

    def work(archive: Path):
        return _extract_one(config, archive, ecosystem, False, provider=provider)

    import os

    ok, skipped_only, failed = [], [], []
    with ThreadPoolExecutor(max_workers=jobs or os.cpu_count() or 2) as pool:
        for archive, outcome in zip(archives, pool.map(_safe(work), archives)):
            if isinstance(outcome, Exception):
                failed.append((archive.name, outcome))
                continue
            artifact, result = outcome
            doc = TtpDocument.from_extraction(result)
            doc_path = out_root / f"{artifact.name}-{artifact.version}.ttp.json"
            doc_path.write_text(
                json.dumps(doc.to_json(), indent=2, ensure_ascii=False), encoding="utf-8"
            )
            (skipped_only if result.ttp.is_empty() else ok).append(archive.name)

    summary = {"ok": len(ok), "skipped": len(skipped_only), "failed": len(failed)}
    _emit(ctx.obj, {"summary": summary, "out_dir": str(out_root)})
    if not ctx.obj["json"]:
        click.echo(f"{summary['ok']} ok / {summary['skipped']} skipped / {summary['failed']} failed")
        for name, exc in failed:
            kind = exc.kind if isinstance(exc, TtpkitError) else type(exc).__name__
            click.echo(f"failed {name}: {kind}: {exc}", err=True)
    if not ok and not skipped_only:
        ctx.exit(1)


def _safe(fn):
    def run(arg):
        try:
            return fn(arg)
        except Exception as exc:  # per-package isolation
            return exc

    return run


@main.command()
@click.option("--generated", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--truth", type=click.Path(exists=True, dir_okay=False), required=True)
@click.pass_context
def score(ctx, generated, truth):
    """Score generated documents against a ground-truth JSONL file."""
    from urllib.parse import urlparse

    ctx_obj = ctx.obj
    try:
        docs = _load_docs_dir(Path(generated))
    except TtpkitError as exc:
        _diag(ctx_obj, exc.kind, str(exc))
        ctx.exit(1)
    truth_records = [r for r in read_ground_truth(truth) if r.ttp is not None]
    by_identity = {}
    for doc in docs:
        by_identity[(doc.package_name.lower(), doc.version)] = doc
        by_identity.setdefault((doc.package_name.lower(), ""), doc)
    pairs, labels, rows = [], [], []
    for record in truth_records:
        doc = by_identity.get((record.package_name.lower(), record.version))
        if doc is None:
            continue
        pairs.append((doc.sequence(), record.ttp))
        labels.append(urlparse(record.source_url).netloc or "unknown")
        rows.append((record.package_name, record.version or doc.version))
    if not pairs:
        _diag(ctx_obj, "NoOverlap", "no (package, version) overlap between generated and truth")
        ctx.exit(1)
    result = score_corpus(pairs, labels)
    _emit(ctx_obj, result.to_json())
    if not ctx_obj["json"]:
        width = max(len(f"{n} {v}") for n, v in rows)
        click.echo(f"{'package'.ljust(width)}  {'CR':>6}  {'SA':>6}")
        for (name, version), report in zip(rows, result.reports):
            click.echo(f"{f'{name} {version}'.ljust(width)}  {report.cr:6.2f}  {report.sa:6.2f}")
        for group, (cr, sa) in sorted(result.by_group.items()):
            click.echo(f"[{group}] CR {cr:.2f} SA {sa:.2f}")
        click.echo(f"mean CR {result.mean_cr:.2f} mean SA {result.mean_sa:.2f}")


@main.command("graph")
@click.argument("docs_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--dot", "fmt", flag_value="dot")
@click.option("--csv", "fmt", flag_value="csv")
@click.option("--cdf", "fmt", flag_value="cdf")
@click.option("--rank", type=int, default=None, help="Print the top-K ranked TTPs.")
@click.option("--deceptive-only", is_flag=True, default=False)
@click.option("--execution-only", is_flag=True, default=False)
@click.pass_context
def graph_cmd(ctx, docs_dir, fmt, rank, deceptive_only, execution_only):
    """Transition-graph analytics over a directory of TTP documents."""
    from .vectors import Category

    try:
        docs = _load_docs_dir(Path(docs_dir))
        sequences = [
            (d.sequence(), (d.package_name, d.version, d.ecosystem))
            for d in docs
            if not d.sequence().is_empty()
        ]
        if not sequences:
            raise EmptyCorpus("every document has an empty TTP")
        corpus = [seq for seq, _ in sequences]
        built = graph_mod.build_graph(corpus)
        if rank is not None:
            ranked = graph_mod.dedup_and_rank(sequences)[:rank]
            _emit(ctx.obj, {"ranking": [r.to_json() for r in ranked]})
            if not ctx.obj["json"]:
                for r in ranked:
                    click.echo(f"{r.count:6d}  {r.abstract_form}")
            return
        category = (
            Category.DECEPTIVE
            if deceptive_only
            else Category.EXECUTION_ATTACK
            if execution_only
            else None
        )
        if fmt == "dot":
            click.echo(graph_mod.to_dot(built, category=category), nl=False)
        elif fmt == "csv":
            click.echo(graph_mod.to_csv(built), nl=False)
        elif fmt == "cdf":
            click.echo(graph_mod.length_stats(corpus).to_csv(), nl=False)
        else:
            _emit(ctx.obj, built.to_json())
            if not ctx.obj["json"]:
                click.echo(json.dumps(built.to_json(), indent=2))
    except TtpkitError as exc:
        _diag(ctx.obj, exc.kind, str(exc))
        ctx.exit(1)


@main.command()
@click.argument("docs_dir", type=click.Path(exists=True, file_okay=False))
@click.pass_context
def index(ctx, docs_dir):
    """Embed TTP documents and persist the vector index."""
    config: CliConfig = ctx.obj["config"]
    provider = make_provider(config)
    try:
        docs = _load_docs_dir(Path(docs_dir))
        vector_index = VectorIndex(provider)
        for doc in docs:
            vector_index.index_document(doc)
        vector_index.persist(config.index_dir)
    except TtpkitError as exc:
        _diag(ctx.obj, exc.kind, str(exc))
        ctx.exit(1)
    _emit(ctx.obj, {"indexed": len(vector_index), "index_dir": str(config.index_dir)})
    if not ctx.obj["json"]:
        click.echo(f"indexed {len(vector_index)} documents into {config.index_dir}")


def build_service_state(config: CliConfig):
    """Assemble the serving state from a persisted index (shared with tests)."""
    import os

    from .service import ServiceState

    provider = make_provider(config)
    vector_index = VectorIndex.load(config.index_dir, provider)
    corpus = [
        doc.sequence() for doc in vector_index.documents if not doc.sequence().is_empty()
    ]
    return ServiceState(
        index=vector_index,
        provider=provider,
        corpus=corpus or None,
        is_mock=config.mock_mode,
        cors_origin=config.cors_origin,
        auth_token=os.environ.get("TTPKIT_SERVICE_TOKEN"),
    )


@main.command()
@click.option("--listen", default=None, help="host:port (default 127.0.0.1:8571).")
@click.pass_context
def serve(ctx, listen):
    """Serve the QA API over the persisted index."""
    import uvicorn

    from .service import create_app

    config: CliConfig = ctx.obj["config"]
    try:
        state = build_service_state(config)
    except TtpkitError as exc:
        _diag(ctx.obj, exc.kind, str(exc))
        ctx.exit(1)
    host, port = config.listen_host, config.listen_port
    if listen:
        host, _, port_text = listen.partition(":")
        port = int(port_text or port)
    uvicorn.run(create_app(state), host=host, port=port, log_level="warning")


@main.command("report-scan")
@click.argument("url_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(), default="ground-truth.jsonl")
@click.pass_context
def report_scan(ctx, url_file, out):
    """Mine security reports listed one URL per line into ground truth."""
    config: CliConfig = ctx.obj["config"]
    provider = make_provider(config)
    fetcher = ReportFetcher()
    urls = [u.strip() for u in Path(url_file).read_text(encoding="utf-8").splitlines()
            if u.strip() and not u.startswith("#")]
    collected, failures = [], []
    for url in urls:
        try:
            content = fetch_and_extract(url, fetcher)
            if not classify_report(content, provider):
                continue
            collected.extend(extract_records(content, url, provider))
        except TtpkitError as exc:
            failures.append((url, exc.kind))
    if collected:
        from .reports import append_ground_truth

        append_ground_truth(out, collected)
    _emit(
        ctx.obj,
        {
            "urls": len(urls),
            "records": len(collected),
            "failures": [{"url": u, "error": k} for u, k in failures],
            "out": str(out),
        },
    )
    if not ctx.obj["json"]:
        click.echo(f"{len(collected)} record(s) from {len(urls)} URL(s); "
                   f"{len(failures)} failure(s)")


@main.command()
@click.argument("truth_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def review(ctx, truth_file):
    """Human review pass: verify or reject each LLM-extracted record."""
    records = read_ground_truth(truth_file)
    kept: list[GroundTruthRecord] = []
    for record in records:
        if record.confidence is Confidence.HUMAN_VERIFIED:
            kept.append(record)
            continue
        click.echo(f"package: {record.package_name}")
        click.echo(f"actions: {record.actions_text}")
        click.echo(f"source:  {record.source_url}")
        choice = click.prompt(
            "verify (v) / reject (r) / skip (s)",
            type=click.Choice(["v", "r", "s"]),
            default="s",
        )
        if choice == "v":
            kept.append(
                GroundTruthRecord(
                    package_name=record.package_name,
                    actions_text=record.actions_text,
                    source_url=record.source_url,
                    ttp=record.ttp,
                    version=record.version,
                    confidence=Confidence.HUMAN_VERIFIED,
                )
            )
        elif choice == "s":
            kept.append(record)
        # rejected records are dropped
    write_ground_truth(truth_file, kept)
    _emit(ctx.obj, {"kept": len(kept), "reviewed": len(records)})
    if not ctx.obj["json"]:
        click.echo(f"kept {len(kept)} of {len(records)} record(s)")


if __name__ == "__main__":
    main()
