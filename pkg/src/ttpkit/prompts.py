"""Prompt assembly for the extraction pipeline, report mining and chat.

Templates live as plain-text files under ``ttpkit/templates/`` so prompt
iteration never touches code.  Placeholders use ``{name}``; substitution
is single-pass, so braces inside substituted content are left alone.
Rendering is deterministic: identical inputs give byte-identical prompts.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .errors import BudgetTooSmall
from .ingest import PackageArtifact
from .vectors import Category, VectorKind

CHARS_PER_TOKEN = 4

# stable first-line markers, used to key mock-provider rules in tests
EXECUTOR_MARKER = "context-based analysis to identify potential security threats"
INPUT_MARKER = "mapping out a Python package before inspection"
DECEPTIVE_MARKER = "detecting deceptive attack vectors in package metadata"
EXECUTION_MARKER = "simulating the execution of package source code"
CLASSIFY_MARKER = "triaging security write-ups"
EXTRACT_MARKER = "extracting malicious package records"
CHAT_MARKER = "Malware Package Behavior Analysis Engineer"

METADATA_ABSENT_MARKER = "metadata: ABSENT"

REPORT_SCHEMA = ["malicious_package_name", "malicious_package_actions"]


class TemplateId(str, Enum):
    EXECUTOR = "executor"
    UNZIP_AGENT = "unzip_agent"
    REPORT_AGENT = "report_agent"
    CHAT = "chat"


_REQUIRED: dict[TemplateId, frozenset[str]] = {
    TemplateId.EXECUTOR: frozenset({"file_content", "context"}),
    TemplateId.UNZIP_AGENT: frozenset({"raw_path", "unzip_path"}),
    TemplateId.REPORT_AGENT: frozenset({"URL_excel", "schema"}),
    TemplateId.CHAT: frozenset({"question", "database"}),
}


@dataclass(frozen=True)
class PromptTemplate:
    id: TemplateId
    body: str
    required_placeholders: frozenset[str]

    def __post_init__(self):
        for name in self.required_placeholders:
            if "{%s}" % name not in self.body:
                raise ValueError(f"template {self.id.value} lacks placeholder {{{name}}}")


def _read_template_text(name: str) -> str:
    return (
        resources.files("ttpkit").joinpath("templates", f"{name}.txt").read_text("utf-8")
    )


def load_template(template_id: TemplateId) -> PromptTemplate:
    return PromptTemplate(
        template_id, _read_template_text(template_id.value), _REQUIRED[template_id]
    )


def fill(body: str, values: Mapping[str, str]) -> str:
    """Single-pass placeholder substitution; unknown names are left as-is."""
    pattern = re.compile(r"\{(" + "|".join(re.escape(k) for k in values) + r")\}")
    return pattern.sub(lambda m: values[m.group(1)], body)


def estimate_tokens(text: str) -> int:
    return (len(text) + CHARS_PER_TOKEN - 1) // CHARS_PER_TOKEN


# -- context catalog -------------------------------------------------------

_DEFAULT_DESCRIPTIONS: dict[VectorKind, str] = {
    VectorKind.TYPOSQUATTING: "a similar package name to imitate a legitimate package",
    VectorKind.IMITATED_VERSION: "uses a common version number as a legitimate version",
    VectorKind.FAKE_DESCRIPTION: "a common description imitating a legitimate package description",
    VectorKind.MALICIOUS_DEPENDENCY: "uses a different malware library as its dependency",
    VectorKind.IMITATED_URL: "imitates a legitimate URL for its homepage",
    VectorKind.FAKE_CONTACT: "a contact to imitate authors in a legitimate package",
    VectorKind.PRE_INSTALL: "a pre-install script running commands",
    VectorKind.INSTALL: "an install script running commands",
    VectorKind.POST_INSTALL: "a post-install script running commands",
    VectorKind.CMD: "execution command: setup, exec, getoutput, call, check_output, run, eval, popen",
    VectorKind.EVASION: "obscuring function: base64, zlib.decompress",
    VectorKind.CONCEAL: "concealing information: exec, reveal, decode",
    VectorKind.DATA: "sensitive data",
    VectorKind.FILE_DIR: "file/directory-related operation",
    VectorKind.PERMISSION: "changing permission of file, dir",
    VectorKind.READ_WRITE: "read/write operation",
    VectorKind.URL_IP_PORT: "malicious URL, IP address, port",
    VectorKind.SEND_RECEIVE: "sending or receive data",
    VectorKind.MALICIOUS_URL: "a malicious URL embedded in the package",
}

_CATALOG_ORDER: tuple[VectorKind, ...] = tuple(_DEFAULT_DESCRIPTIONS)


@dataclass(frozen=True)
class ContextCatalog:
    """One (term, description) entry per vocabulary kind, fixed order."""

    entries: tuple[tuple[VectorKind, str], ...]

    def __post_init__(self):
        kinds = [k for k, _ in self.entries]
        if sorted(kinds, key=lambda k: k.value) != sorted(VectorKind, key=lambda k: k.value):
            raise ValueError("catalog must contain exactly one entry per vector kind")
        if any(not d.strip() for _, d in self.entries):
            raise ValueError("catalog descriptions must be non-empty")

    @classmethod
    def default(cls) -> "ContextCatalog":
        return cls(tuple((k, _DEFAULT_DESCRIPTIONS[k]) for k in _CATALOG_ORDER))

    def render(self, categories: Iterable[Category] | None = None) -> str:
        wanted = set(categories) if categories is not None else None
        lines = [
            f"{kind.value}: {description}"
            for kind, description in self.entries
            if wanted is None or kind.category in wanted
        ]
        return "\n".join(lines)


# -- pipeline prompt builders ----------------------------------------------

def file_catalog_text(artifact: PackageArtifact) -> str:
    if not artifact.sources:
        return "(no source files: empty code)"
    lines = [f"{s.relative_path} ({s.loc} loc)" for s in artifact.sources]
    if artifact.total_loc == 0:
        lines.append("(empty code: 0 loc in total)")
    return "\n".join(lines)


def _metadata_block(artifact: PackageArtifact) -> str:
    if artifact.metadata is None:
        return METADATA_ABSENT_MARKER
    return "## Package metadata\n" + artifact.metadata.raw_text


def _source_block(path: str, content: str) -> str:
    return f"### File: {path}\n{content}"


def render_executor_prompt(
    artifact: PackageArtifact,
    catalog: ContextCatalog | None = None,
    budget: int = 128_000,
) -> str:
    """Single-shot prompt: metadata + sources + full catalog + 4-step guide.

    When the estimate exceeds ``budget`` tokens, whole source files are
    dropped from the end of the collection order and a truncation notice
    is appended.  Raises :class:`BudgetTooSmall` when even the file-free
    prompt does not fit.
    """
    if artifact.metadata is None and not artifact.sources:
        raise ValueError("artifact has neither metadata nor sources")
    catalog = catalog or ContextCatalog.default()
    template = load_template(TemplateId.EXECUTOR)
    if artifact.metadata is None:
        step_2 = (
            "Step 2: Skipped. The package metadata is absent "
            "(marker below: metadata: ABSENT); no deceptive attack vectors "
            "can be identified from metadata."
        )
    else:
        step_2 = _read_template_text("executor_step2").strip()
    body = fill(template.body, {"step_2": step_2})

    def assemble(blocks: list[str], notice: str) -> str:
        file_content = "\n\n".join([_metadata_block(artifact)] + blocks) + notice
        return fill(body, {"file_content": file_content, "context": catalog.render()})

    def omission_notice(dropped: list[str]) -> str:
        if not dropped:
            return ""
        listed = ", ".join(dropped[:5])
        if len(dropped) > 5:
            listed += f", and {len(dropped) - 5} more"
        return (
            "\n\n[NOTE: truncated to fit the prompt budget; "
            f"{len(dropped)} source file(s) omitted: {listed}]"
        )

    # keep the longest file prefix (tail-first truncation) that fits,
    # notice included
    blocks = [_source_block(s.relative_path, s.content) for s in artifact.sources]
    paths = [s.relative_path for s in artifact.sources]
    for keep in range(len(blocks), -1, -1):
        notice = omission_notice(paths[keep:])
        prompt = assemble(blocks[:keep], notice)
        if estimate_tokens(prompt) <= budget:
            return prompt
    raise BudgetTooSmall(
        f"prompt needs {estimate_tokens(assemble([], ''))} tokens before any "
        f"source file is added; budget is {budget}"
    )


def render_input_prompt(catalog_text: str) -> str:
    return fill(_read_template_text("input_subtask"), {"catalog": catalog_text})


def render_deceptive_prompt(
    metadata_text: str,
    catalog: ContextCatalog,
    registry_note: str = "",
) -> str:
    note = f"\nRegistry check: {registry_note}\n" if registry_note else ""
    return fill(
        _read_template_text("deceptive_subtask"),
        {
            "context": catalog.render({Category.DECEPTIVE}),
            "metadata": metadata_text,
            "registry_note": note,
        },
    )


def render_execution_prompt(
    sources_block: str,
    file_order: Sequence[str],
    catalog: ContextCatalog,
) -> str:
    return fill(
        _read_template_text("execution_subtask"),
        {
            "context": catalog.render({Category.EXECUTION_ATTACK, Category.NEUTRAL}),
            "file_order": "\n".join(file_order) if file_order else "(none)",
            "sources": sources_block,
        },
    )


def render_chat_prompt(question: str, docs: Sequence) -> str:
    """Chat prompt with retrieved documents embedded as the database block.

    ``docs`` are objects exposing ``to_json()`` (or plain dicts).  An empty
    retrieval renders an explicit empty-database marker, which together
    with guideline 3 instructs the insufficient-information behavior.
    """
    if not question.strip():
        raise ValueError("question must be non-empty")
    if docs:
        database = "\n".join(
            json.dumps(d.to_json() if hasattr(d, "to_json") else d, ensure_ascii=False)
            for d in docs
        )
    else:
        database = "(no relevant documents were retrieved; the information is insufficient)"
    template = load_template(TemplateId.CHAT)
    return fill(template.body, {"question": question, "database": database})


def render_report_prompt(
    url_batch: Sequence[str], schema: Sequence[str] | None = None
) -> str:
    schema = list(schema) if schema is not None else list(REPORT_SCHEMA)
    if not schema:
        raise ValueError("schema must be non-empty")
    template = load_template(TemplateId.REPORT_AGENT)
    urls = "\n".join(url_batch) if url_batch else "(no URLs provided)"
    return fill(
        template.body,
        {"URL_excel": urls, "schema": json.dumps(schema, ensure_ascii=False)},
    )


def render_classify_prompt(content: str) -> str:
    return fill(_read_template_text("report_classify"), {"content": content})


def render_extract_prompt(
    content: str, source_url: str, schema: Sequence[str] | None = None
) -> str:
    schema = list(schema) if schema is not None else list(REPORT_SCHEMA)
    return fill(
        _read_template_text("report_extract"),
        {
            "schema": json.dumps(schema, ensure_ascii=False),
            "source_url": source_url,
            "content": content,
        },
    )


def render_unzip_prompt(raw_path: str, unzip_path: str) -> str:
    template = load_template(TemplateId.UNZIP_AGENT)
    return fill(template.body, {"raw_path": raw_path, "unzip_path": unzip_path})
