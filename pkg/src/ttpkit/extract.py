"""Four-subtask extraction pipeline: input, deceptive, execution, output.

Each subtask is one chat call except the output subtask, which is purely
local.  Precondition failures (missing metadata, empty or oversized code)
become skip flags on the result instead of aborting, so the degenerate
packages that defeat extraction still produce an auditable record.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import CodeTooLarge, EmptyCode, MissingMetadata, UnknownVector
from .ingest import PackageArtifact, SizeClass
from .llm import ChatMessage
from .prompts import (
    ContextCatalog,
    file_catalog_text,
    render_deceptive_prompt,
    render_executor_prompt,
    render_execution_prompt,
    render_input_prompt,
)
from .typosquat import TyposquatFinding
from .vectors import AttackVector, Category, TtpSequence, normalize_vector_name, parse_ttp_string

log = logging.getLogger(__name__)


class SkipReason(str, Enum):
    DECEPTIVE_SKIPPED_NO_METADATA = "DeceptiveSkippedNoMetadata"
    EXECUTION_SKIPPED_EMPTY_CODE = "ExecutionSkippedEmptyCode"
    EXECUTION_SKIPPED_OVERSIZED = "ExecutionSkippedOversized"


@dataclass(frozen=True)
class ExtractionResult:
    identity: tuple[str, str, str]
    ttp: TtpSequence
    analysis_text: str
    subtask_transcripts: tuple[tuple[str, str, str], ...]  # (subtask, prompt digest, response)
    skipped: frozenset[SkipReason] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "skipped", frozenset(self.skipped))
        if SkipReason.DECEPTIVE_SKIPPED_NO_METADATA in self.skipped:
            assert not self.ttp.deceptive, "deceptive chain must be empty when skipped"
        if self.skipped & {
            SkipReason.EXECUTION_SKIPPED_EMPTY_CODE,
            SkipReason.EXECUTION_SKIPPED_OVERSIZED,
        }:
            assert not self.ttp.execution, "execution chain must be empty when skipped"

    def to_json(self) -> dict:
        return {
            "identity": list(self.identity),
            "ttp": self.ttp.to_json(),
            "analysis_text": self.analysis_text,
            "skipped": sorted(s.value for s in self.skipped),
            "subtask_transcripts": [
                {"subtask": s, "prompt_digest": d, "response": r}
                for s, d, r in self.subtask_transcripts
            ],
        }


@dataclass(frozen=True)
class InputSubtaskResult:
    catalog_text: str
    file_order: tuple[str, ...]
    fallback_used: bool
    response: str = ""


def _digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def _complete(provider, prompt: str) -> str:
    return provider.complete([ChatMessage("user", prompt)])


def run_input_subtask(artifact: PackageArtifact, provider) -> InputSubtaskResult:
    """Catalog the files and ask the model for their execution order.

    Unusable model output falls back to the lexicographic collection
    order; zero source files short-circuit without any chat call.
    """
    catalog = file_catalog_text(artifact)
    paths = [s.relative_path for s in artifact.sources]
    if artifact.total_loc == 0:
        return InputSubtaskResult(catalog, tuple(paths), False)
    prompt = render_input_prompt(catalog)
    response = _complete(provider, prompt)
    proposed = []
    known = set(paths)
    for line in response.splitlines():
        candidate = line.strip().lstrip("-*0123456789. ").strip()
        if candidate in known and candidate not in proposed:
            proposed.append(candidate)
    if proposed:
        ordered = proposed + [p for p in paths if p not in proposed]
        return InputSubtaskResult(catalog, tuple(ordered), False, response)
    log.warning("input subtask returned no usable file order; using lexicographic")
    return InputSubtaskResult(catalog, tuple(paths), True, response)


_NO_VECTORS = re.compile(r"^no attack vectors?\b", re.I)


def parse_vector_lines(text: str, allowed: set[Category]) -> list[AttackVector]:
    """Fold "name: value" response lines onto the vocabulary.

    Unknown names and category mismatches are logged and dropped, never
    fatal: a missing TTP is an observed outcome, not an abort.
    """
    vectors: list[AttackVector] = []
    for raw_line in text.splitlines():
        line = raw_line.strip().lstrip("-*• \t").strip()
        if not line or _NO_VECTORS.match(line):
            continue
        name, _, detail = line.partition(":")
        try:
            kind = normalize_vector_name(name)
        except UnknownVector:
            log.warning("dropping unrecognized vector line: %r", raw_line)
            continue
        if kind.category not in allowed:
            log.warning("dropping out-of-tactic vector %s in %r", kind.value, raw_line)
            continue
        detail_text = detail.strip().strip("'\"").strip() or None
        vectors.append(AttackVector(kind, detail_text))
    return vectors


def run_deceptive_subtask(
    artifact: PackageArtifact,
    catalog_text: str,
    context: ContextCatalog,
    provider,
    typosquat_signal: TyposquatFinding | None = None,
) -> tuple[list[AttackVector], str, str]:
    """Detect metadata-based lures; returns (vectors, prompt, response)."""
    if artifact.metadata is None:
        raise MissingMetadata(f"{artifact.name} has no package metadata")
    metadata_text = artifact.metadata.raw_text
    if catalog_text:
        metadata_text += "\n\nPackage file catalog:\n" + catalog_text
    note = ""
    if typosquat_signal is not None:
        note = (
            f"the name {typosquat_signal.candidate!r} is similar to the "
            f"legitimate package {typosquat_signal.matched_legitimate!r} "
            f"({typosquat_signal.method.value})"
        )
    prompt = render_deceptive_prompt(metadata_text, context, note)
    response = _complete(provider, prompt)
    vectors = parse_vector_lines(response, {Category.DECEPTIVE})
    if typosquat_signal is not None:
        forced = AttackVector(
            normalize_vector_name("typosquatting"), typosquat_signal.matched_legitimate
        )
        vectors = [forced] + [v for v in vectors if v.kind is not forced.kind]
    return vectors, prompt, response


def run_execution_subtask(
    artifact: PackageArtifact,
    file_order: tuple[str, ...],
    context: ContextCatalog,
    provider,
) -> tuple[list[AttackVector], str, str]:
    """Simulated-execution analysis of the sources in the proposed order."""
    if artifact.total_loc == 0:
        raise EmptyCode(f"{artifact.name} contains zero lines of code")
    if artifact.size_class is SizeClass.OVERSIZED:
        raise CodeTooLarge(
            f"{artifact.name} has {artifact.total_loc} loc, above the oversized threshold"
        )
    by_path = {s.relative_path: s for s in artifact.sources}
    ordered = [by_path[p] for p in file_order if p in by_path]
    sources_block = "\n\n".join(
        f"### File: {s.relative_path}\n{s.content}" for s in ordered
    )
    prompt = render_execution_prompt(sources_block, file_order, context)
    response = _complete(provider, prompt)
    vectors = parse_vector_lines(
        response, {Category.EXECUTION_ATTACK, Category.NEUTRAL}
    )
    return vectors, prompt, response


def run_output_subtask(
    deceptive: list[AttackVector], execution: list[AttackVector]
) -> TtpSequence:
    """Assemble the final chain; deduplication only, no chat call."""
    return TtpSequence.from_vectors(list(deceptive) + list(execution))


_CHAIN = re.compile(r"\{[^{}]+\}")


def _chain_from_free_text(text: str) -> TtpSequence | None:
    # last parseable brace-wrapped chain wins: the output step comes last
    for candidate in reversed(_CHAIN.findall(text)):
        try:
            return parse_ttp_string(candidate)
        except Exception:
            continue
    return None


def extract(
    artifact: PackageArtifact,
    provider,
    context: ContextCatalog | None = None,
    typosquat_signal: TyposquatFinding | None = None,
    single_shot: bool = False,
) -> ExtractionResult:
    """Run the full pipeline over one ingested package.

    Exactly three chat calls on the happy path (input, deceptive,
    execution); skips reduce that count.  ``single_shot`` reproduces the
    monolithic all-steps prompt in one call instead.
    """
    context = context or ContextCatalog.default()
    skipped: set[SkipReason] = set()
    transcripts: list[tuple[str, str, str]] = []
    sections: list[str] = []

    if single_shot:
        return _extract_single_shot(artifact, provider, context, skipped, transcripts)

    input_res = run_input_subtask(artifact, provider)
    transcripts.append(("input", _digest(input_res.catalog_text), input_res.response))
    sections.append("## Input subtask\n" + input_res.catalog_text)
    if input_res.fallback_used:
        sections.append("(file order fell back to lexicographic)")

    deceptive: list[AttackVector] = []
    if artifact.metadata is None:
        skipped.add(SkipReason.DECEPTIVE_SKIPPED_NO_METADATA)
        sections.append("## Deceptive subtask\nskipped: package metadata is absent")
    else:
        vectors, prompt, response = run_deceptive_subtask(
            artifact, input_res.catalog_text, context, provider, typosquat_signal
        )
        deceptive = vectors
        transcripts.append(("deceptive", _digest(prompt), response))
        sections.append("## Deceptive subtask\n" + response)

    execution: list[AttackVector] = []
    try:
        vectors, prompt, response = run_execution_subtask(
            artifact, input_res.file_order, context, provider
        )
        execution = vectors
        transcripts.append(("execution", _digest(prompt), response))
        sections.append("## Execution subtask\n" + response)
    except EmptyCode:
        skipped.add(SkipReason.EXECUTION_SKIPPED_EMPTY_CODE)
        sections.append("## Execution subtask\nskipped: code is empty")
    except CodeTooLarge:
        skipped.add(SkipReason.EXECUTION_SKIPPED_OVERSIZED)
        sections.append(
            f"## Execution subtask\nskipped: {artifact.total_loc} loc exceeds the "
            "oversized threshold"
        )

    ttp = run_output_subtask(deceptive, execution)
    sections.append("## Output subtask\n" + _render_summary(ttp))
    return ExtractionResult(
        identity=artifact.identity,
        ttp=ttp,
        analysis_text="\n\n".join(sections),
        subtask_transcripts=tuple(transcripts),
        skipped=frozenset(skipped),
    )


def _extract_single_shot(artifact, provider, context, skipped, transcripts):
    from .vectors import render_abstract

    if artifact.metadata is None:
        skipped.add(SkipReason.DECEPTIVE_SKIPPED_NO_METADATA)
    if artifact.total_loc == 0:
        skipped.add(SkipReason.EXECUTION_SKIPPED_EMPTY_CODE)
    elif artifact.size_class is SizeClass.OVERSIZED:
        skipped.add(SkipReason.EXECUTION_SKIPPED_OVERSIZED)

    if artifact.metadata is None and artifact.total_loc == 0:
        # nothing to analyze; do not spend a call
        return ExtractionResult(
            artifact.identity, TtpSequence(), "nothing to analyze", (), frozenset(skipped)
        )
    prompt = render_executor_prompt(artifact, context)
    response = _complete(provider, prompt)
    transcripts.append(("single-shot", _digest(prompt), response))
    ttp = _chain_from_free_text(response) or TtpSequence()
    deceptive = () if SkipReason.DECEPTIVE_SKIPPED_NO_METADATA in skipped else ttp.deceptive
    execution = (
        ()
        if skipped
        & {SkipReason.EXECUTION_SKIPPED_EMPTY_CODE, SkipReason.EXECUTION_SKIPPED_OVERSIZED}
        else ttp.execution
    )
    ttp = TtpSequence(deceptive, execution)
    return ExtractionResult(
        artifact.identity,
        ttp,
        response + "\n\n## Output subtask\n" + render_abstract(ttp),
        tuple(transcripts),
        frozenset(skipped),
    )


def _render_summary(ttp: TtpSequence) -> str:
    from .vectors import render_abstract, render_detailed

    if ttp.is_empty():
        return "no attack vectors identified"
    return f"abstract: {render_abstract(ttp)}\ndetailed: {render_detailed(ttp)}"
