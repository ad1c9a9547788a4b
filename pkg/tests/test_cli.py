import json

import pytest
from click.testing import CliRunner

from ttpkit.cli import main
from ttpkit.demo import (
    COLORAM_ABSTRACT,
    build_coloram_archive,
    build_emptycode_archive,
    build_nometa_archive,
    demo_documents,
    write_transcripts_fixture,
)


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def transcripts(tmp_path):
    return write_transcripts_fixture(tmp_path / "transcripts.json")


def invoke(runner, args, **kwargs):
    return runner.invoke(main, args, catch_exceptions=False, **kwargs)


def test_extract_coloram(runner, tmp_path, transcripts):
    archive = build_coloram_archive(tmp_path)
    out = tmp_path / "coloram.ttp.json"
    result = invoke(
        runner,
        ["--mock", "--transcripts", str(transcripts),
         "extract", str(archive), "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    doc = json.loads(out.read_text())
    from ttpkit.store import TtpDocument
    from ttpkit.vectors import render_abstract

    sequence = TtpDocument.from_json(doc).sequence()
    assert render_abstract(sequence) == COLORAM_ABSTRACT
    # concrete values ride along in the stored chains
    assert sequence.execution[-1].detail == "http://20.224.2.213//inject/ctE6toLDoHBbJApj"
    sidecar = tmp_path / "coloram.ttp.transcripts.json"
    assert sidecar.exists()
    assert len(json.loads(sidecar.read_text())) == 3


def test_extract_emits_json(runner, tmp_path, transcripts):
    archive = build_coloram_archive(tmp_path)
    out = tmp_path / "doc.json"
    result = invoke(
        runner,
        ["--json", "--mock", "--transcripts", str(transcripts),
         "extract", str(archive), "--out", str(out)],
    )
    body = json.loads(result.output)
    assert body["schema_version"] == 1
    assert body["abstract_ttp"] == COLORAM_ABSTRACT


def test_extract_metadata_less_exit_zero_with_note(runner, tmp_path, transcripts):
    archive = build_nometa_archive(tmp_path)
    out = tmp_path / "doc.json"
    result = invoke(
        runner,
        ["--mock", "--transcripts", str(transcripts),
         "extract", str(archive), "--out", str(out)],
    )
    assert result.exit_code == 0
    assert "DeceptiveSkippedNoMetadata" in result.output
    doc = json.loads(out.read_text())
    assert doc["deceptive_ttp"] == ""
    assert doc["execution_ttp"] != ""


def test_extract_all_skipped_exit_two(runner, tmp_path):
    # default mock answers "no attack vectors" everywhere: empty TTP
    archive = build_nometa_archive(tmp_path)
    out = tmp_path / "doc.json"
    result = invoke(runner, ["--mock", "extract", str(archive), "--out", str(out)])
    assert result.exit_code == 2
    assert json.loads(out.read_text())["deceptive_ttp"] == ""


def test_extract_corrupt_archive_exit_one(runner, tmp_path):
    bad = tmp_path / "bad-1.0.tar.gz"
    bad.write_bytes(b"\x1f\x8bnot really gzip")
    result = invoke(runner, ["--json", "--mock", "extract", str(bad)])
    assert result.exit_code == 1
    diag = json.loads(result.output.strip().splitlines()[-1])
    assert diag["error"] == "CorruptArchive"
    assert diag["schema_version"] == 1


def test_extract_dump_artifact(runner, tmp_path, transcripts):
    archive = build_coloram_archive(tmp_path)
    dump = tmp_path / "artifact.json"
    invoke(
        runner,
        ["--mock", "--transcripts", str(transcripts),
         "extract", str(archive), "--out", str(tmp_path / "d.json"),
         "--dump-artifact", str(dump)],
    )
    artifact = json.loads(dump.read_text())
    assert artifact["name"] == "coloram"
    assert artifact["size_class"] == "normal"


def test_batch_isolates_failures(runner, tmp_path, transcripts):
    build_coloram_archive(tmp_path)
    build_emptycode_archive(tmp_path)
    (tmp_path / "broken-1.0.tar.gz").write_bytes(b"\x1f\x8bgarbage")
    out_dir = tmp_path / "docs"
    result = invoke(
        runner,
        ["--json", "--mock", "--transcripts", str(transcripts),
         "batch", str(tmp_path), "--out-dir", str(out_dir)],
    )
    assert result.exit_code == 0
    summary = json.loads(result.output)["summary"]
    assert summary == {"ok": 2, "skipped": 0, "failed": 1}
    assert summary["ok"] + summary["skipped"] + summary["failed"] == 3


def test_batch_empty_dir(runner, tmp_path):
    empty = tmp_path / "nothing"
    empty.mkdir()
    result = invoke(runner, ["--mock", "batch", str(empty)])
    assert result.exit_code == 1


def test_batch_deterministic_documents(runner, tmp_path, transcripts):
    build_coloram_archive(tmp_path / "in")
    outputs = []
    for run in ("a", "b"):
        out_dir = tmp_path / run
        invoke(
            runner,
            ["--mock", "--transcripts", str(transcripts),
             "batch", str(tmp_path / "in"), "--out-dir", str(out_dir)],
        )
        outputs.append((out_dir / "coloram-0.2.7.ttp.json").read_bytes())
    assert outputs[0] == outputs[1]


def _write_docs(tmp_path):
    docs_dir = tmp_path / "docs"
    docs_dir.mkdir(exist_ok=True)
    for doc in demo_documents():
        path = docs_dir / f"{doc.package_name}.json"
        path.write_text(json.dumps(doc.to_json(), ensure_ascii=False))
    return docs_dir


def test_score_worked_example(runner, tmp_path):
    docs_dir = tmp_path / "docs"
    docs_dir.mkdir()
    generated = {
        "package_name": "example",
        "version": "1.0",
        "ecosystem": "pypi",
        "deceptive_ttp": "{typosquatting→imitated-url→fake-contact}",
        "execution_ttp": "{pre-install→install→cmd→evasion→data}",
        "analysis": "",
    }
    (docs_dir / "example.json").write_text(json.dumps(generated))
    truth = tmp_path / "truth.jsonl"
    truth.write_text(
        json.dumps(
            {
                "package": "example",
                "version": "1.0",
                "ttp": "{install→evasion→conceal→data}",
                "source_url": "https://blog.example.com/post",
            }
        )
        + "\n"
    )
    result = invoke(
        runner,
        ["--json", "--mock", "score", "--generated", str(docs_dir), "--truth", str(truth)],
    )
    assert result.exit_code == 0
    body = json.loads(result.output)
    assert body["pairs"][0]["sa"] == 0.75
    assert "blog.example.com" in body["by_group"]


def test_score_identical_perfect(runner, tmp_path):
    docs_dir = _write_docs(tmp_path)
    truth = tmp_path / "truth.jsonl"
    truth.write_text(
        json.dumps(
            {
                "package": "coloram",
                "version": "0.2.7",
                "ttp": "{typosquatting→imitated-version→fake-description"
                       "→fake-contact→cmd→evasion→url-ip-port}",
                "source_url": "https://x.test/r",
            }
        )
        + "\n"
    )
    result = invoke(
        runner,
        ["--json", "--mock", "score", "--generated", str(docs_dir), "--truth", str(truth)],
    )
    body = json.loads(result.output)
    assert body["mean_cr"] == 1.0
    assert body["mean_sa"] == 1.0


def test_score_no_overlap(runner, tmp_path):
    docs_dir = _write_docs(tmp_path)
    truth = tmp_path / "truth.jsonl"
    truth.write_text(
        json.dumps({"package": "unknown", "version": "9", "ttp": "{cmd}",
                    "source_url": "https://x.test"}) + "\n"
    )
    result = invoke(
        runner,
        ["--json", "--mock", "score", "--generated", str(docs_dir), "--truth", str(truth)],
    )
    assert result.exit_code == 1
    assert json.loads(result.output.strip().splitlines()[-1])["error"] == "NoOverlap"


def test_graph_rank(runner, tmp_path):
    docs_dir = _write_docs(tmp_path)
    result = invoke(runner, ["--json", "--mock", "graph", str(docs_dir), "--rank", "3"])
    ranking = json.loads(result.output)["ranking"]
    assert len(ranking) == 3
    assert ranking[0]["count"] >= ranking[-1]["count"]


def test_graph_dot_and_csv(runner, tmp_path):
    docs_dir = _write_docs(tmp_path)
    dot = invoke(runner, ["--mock", "graph", str(docs_dir), "--dot"])
    assert dot.output.startswith("digraph")
    csv = invoke(runner, ["--mock", "graph", str(docs_dir), "--csv"])
    assert csv.output.splitlines()[0] == "from,to,count,weight"
    cdf = invoke(runner, ["--mock", "graph", str(docs_dir), "--cdf"])
    assert cdf.output.splitlines()[0] == "length,fraction_below"


def test_index_then_serve_then_ask(runner, tmp_path, transcripts):
    docs_dir = _write_docs(tmp_path)
    index_dir = tmp_path / "index"
    result = invoke(
        runner,
        ["--mock", "--index-dir", str(index_dir), "index", str(docs_dir)],
    )
    assert result.exit_code == 0
    assert (index_dir / "manifest.json").exists()

    from fastapi.testclient import TestClient

    from ttpkit.cli import build_service_state
    from ttpkit.config import load_config
    from ttpkit.service import create_app

    config = load_config(None, env={}, mock_mode=True, index_dir=str(index_dir))
    state = build_service_state(config)
    client = TestClient(create_app(state))
    response = client.post("/ask", json={"question": "what does coloram do"})
    assert response.status_code == 200
    assert response.json()["citations"]
    assert client.get("/healthz").json()["provider"] == "mock"


def test_report_scan_local_fixture(runner, tmp_path, transcripts):
    page = tmp_path / "report.html"
    page.write_text(
        "<html><body><nav>MENU</nav><article><p>The malicious package coloram "
        "imitates colorama and runs base64 payloads stealing data.</p></article>"
        "</body></html>"
    )
    url_file = tmp_path / "urls.txt"
    url_file.write_text(str(page) + "\n")
    out = tmp_path / "truth.jsonl"
    result = invoke(
        runner,
        ["--json", "--mock", "--transcripts", str(transcripts),
         "report-scan", str(url_file), "--out", str(out)],
    )
    assert result.exit_code == 0
    body = json.loads(result.output)
    assert body["records"] == 1
    line = json.loads(out.read_text().splitlines()[0])
    assert line["package"] == "coloram"
    assert line["confidence"] == "LlmOnly"


def test_review_accept_flips_confidence(runner, tmp_path):
    truth = tmp_path / "truth.jsonl"
    truth.write_text(
        json.dumps(
            {"package": "coloram", "version": "", "ttp": "{typosquatting→cmd}",
             "actions": "bad stuff", "source_url": "https://x.test",
             "confidence": "LlmOnly"}
        )
        + "\n"
    )
    result = invoke(runner, ["--mock", "review", str(truth)], input="v\n")
    assert result.exit_code == 0
    line = json.loads(truth.read_text().splitlines()[0])
    assert line["confidence"] == "HumanVerified"


def test_review_reject_drops_record(runner, tmp_path):
    truth = tmp_path / "truth.jsonl"
    truth.write_text(
        json.dumps(
            {"package": "junk", "version": "", "ttp": "", "actions": "noise",
             "source_url": "https://x.test", "confidence": "LlmOnly"}
        )
        + "\n"
    )
    invoke(runner, ["--mock", "review", str(truth)], input="r\n")
    assert truth.read_text().strip() == ""
