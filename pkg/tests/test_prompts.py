import re

import pytest

from ttpkit.demo import build_coloram_archive
from ttpkit.errors import BudgetTooSmall
from ttpkit.ingest import PackageArtifact, SourceFile, ingest_package
from ttpkit.prompts import (
    ContextCatalog,
    METADATA_ABSENT_MARKER,
    REPORT_SCHEMA,
    TemplateId,
    estimate_tokens,
    load_template,
    render_chat_prompt,
    render_executor_prompt,
    render_report_prompt,
    render_unzip_prompt,
)
from ttpkit.store import TtpDocument
from ttpkit.vectors import VectorKind


@pytest.fixture(scope="module")
def coloram_artifact(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("coloram")
    return ingest_package(build_coloram_archive(tmp), tmp / "work")


def test_templates_declare_their_placeholders():
    for template_id in TemplateId:
        template = load_template(template_id)
        for name in template.required_placeholders:
            assert "{%s}" % name in template.body


def test_catalog_covers_vocabulary():
    catalog = ContextCatalog.default()
    assert len(catalog.entries) == len(list(VectorKind))
    rendered = catalog.render()
    for kind in VectorKind:
        assert kind.value in rendered


def test_catalog_rejects_missing_entries():
    incomplete = ContextCatalog.default().entries[:-1]
    with pytest.raises(ValueError):
        ContextCatalog(tuple(incomplete))


def test_executor_prompt_structure(coloram_artifact):
    prompt = render_executor_prompt(coloram_artifact)
    for step in (
        "Step 1: Input Information",
        "Step 2: Detection of Deceptive Attack Vectors",
        "Step 3: Detection of Execution Attack Vectors",
        "Step 4: Output the Names of Attack Vectors and the TTPs",
    ):
        assert step in prompt
    assert "→" in prompt
    assert "Let's think step by step" in prompt
    for kind in VectorKind:
        assert kind.value in prompt
    assert "Name: coloram" in prompt  # metadata raw text included
    assert "### File: setup.py" in prompt
    assert "### File: coloram/__init__.py" in prompt


def test_executor_prompt_absent_metadata():
    artifact = PackageArtifact(
        identity=("nometa", "1.0", "pypi"),
        metadata=None,
        sources=(SourceFile.from_content("runner.py", "import os\n"),),
    )
    prompt = render_executor_prompt(artifact)
    assert METADATA_ABSENT_MARKER in prompt
    assert "Step 2: Skipped" in prompt
    assert "Detection of Deceptive Attack Vectors" not in prompt


def test_executor_prompt_budget_too_small(coloram_artifact):
    with pytest.raises(BudgetTooSmall):
        render_executor_prompt(coloram_artifact, budget=10)


def test_executor_prompt_truncates_tail_first(coloram_artifact):
    full = render_executor_prompt(coloram_artifact)
    one_file = PackageArtifact(
        coloram_artifact.identity, coloram_artifact.metadata, coloram_artifact.sources[:1]
    )
    # slack covers the omission notice, which rides inside both
    # file-content substitutions
    budget = estimate_tokens(render_executor_prompt(one_file)) + 80
    truncated = render_executor_prompt(coloram_artifact, budget=budget)
    assert estimate_tokens(truncated) <= budget
    assert "### File: coloram/__init__.py" in truncated
    assert "### File: setup.py" not in truncated
    assert "truncated to fit the prompt budget" in truncated
    assert "setup.py" in truncated  # named in the omission notice
    assert len(truncated) < len(full)


def test_executor_prompt_file_content_substituted_twice(coloram_artifact):
    prompt = render_executor_prompt(coloram_artifact)
    assert prompt.count("Name: coloram") == 2


def test_prompt_rendering_is_deterministic(coloram_artifact):
    assert render_executor_prompt(coloram_artifact) == render_executor_prompt(
        coloram_artifact
    )


PLACEHOLDER = re.compile(
    r"\{(file_content|context|step_2|question|database|raw_path|unzip_path|"
    r"URL_excel|schema|catalog|metadata|registry_note|file_order|sources|content)\}"
)


def test_no_unresolved_placeholders(coloram_artifact):
    doc = TtpDocument(package_name="coloram", analysis="does bad things")
    rendered = [
        render_executor_prompt(coloram_artifact),
        render_chat_prompt("what is coloram", [doc]),
        render_report_prompt(["https://example.com/report"]),
        render_unzip_prompt("/raw", "/unzipped"),
    ]
    for prompt in rendered:
        assert not PLACEHOLDER.search(prompt)


def test_chat_prompt_embeds_documents():
    doc = TtpDocument(
        package_name="coloram",
        version="0.2.7",
        analysis="steals data via a hardcoded URL",
    )
    prompt = render_chat_prompt("what does colorama do", [doc])
    assert "steals data via a hardcoded URL" in prompt
    assert "what does colorama do" in prompt


def test_chat_prompt_empty_docs():
    prompt = render_chat_prompt("anything indexed?", [])
    assert "insufficient" in prompt
    assert "Insufficient Information" in prompt  # guideline 3 always present


def test_chat_prompt_two_docs():
    docs = [
        TtpDocument(package_name="coloram", analysis="a"),
        TtpDocument(package_name="loglib-modules", analysis="b"),
    ]
    prompt = render_chat_prompt("compare them", docs)
    assert "coloram" in prompt
    assert "loglib-modules" in prompt


def test_report_prompt_schema_and_urls():
    prompt = render_report_prompt(["https://example.com/a"], REPORT_SCHEMA)
    assert "malicious_package_name" in prompt
    assert "malicious_package_actions" in prompt
    assert prompt.count("https://example.com/a") == 1


def test_report_prompt_empty_batch_still_valid():
    prompt = render_report_prompt([])
    assert "no URLs provided" in prompt


def test_report_prompt_requires_schema():
    with pytest.raises(ValueError):
        render_report_prompt(["https://example.com"], schema=[])


def test_unzip_prompt():
    prompt = render_unzip_prompt("/data/raw", "/data/unzipped")
    assert "/data/raw" in prompt
    assert "/data/unzipped" in prompt
    assert "UTF-8" in prompt
