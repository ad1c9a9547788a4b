import pytest

from ttpkit.demo import (
    COLORAM_ABSTRACT,
    build_coloram_archive,
    build_emptycode_archive,
    build_nometa_archive,
    build_oversized_archive,
    demo_provider,
)
from ttpkit.errors import CodeTooLarge, EmptyCode, MissingMetadata
from ttpkit.extract import (
    ExtractionResult,
    SkipReason,
    extract,
    parse_vector_lines,
    run_deceptive_subtask,
    run_execution_subtask,
    run_input_subtask,
    run_output_subtask,
)
from ttpkit.ingest import ingest_package
from ttpkit.llm import MockProvider
from ttpkit.prompts import ContextCatalog
from ttpkit.typosquat import MatchMethod, TyposquatFinding
from ttpkit.vectors import (
    AttackVector,
    Category,
    TtpSequence,
    VectorKind,
    render_abstract,
    render_detailed,
)


@pytest.fixture()
def coloram(tmp_path):
    return ingest_package(build_coloram_archive(tmp_path), tmp_path / "w")


@pytest.fixture()
def nometa(tmp_path):
    return ingest_package(build_nometa_archive(tmp_path), tmp_path / "w")


@pytest.fixture()
def emptycode(tmp_path):
    return ingest_package(build_emptycode_archive(tmp_path), tmp_path / "w")


def test_input_subtask_catalog(coloram):
    provider = demo_provider()
    result = run_input_subtask(coloram, provider)
    assert "setup.py" in result.catalog_text
    assert "coloram/__init__.py" in result.catalog_text
    assert result.file_order == ("setup.py", "coloram/__init__.py")
    assert not result.fallback_used
    assert provider.calls == 1


def test_input_subtask_no_sources_no_call(emptycode):
    provider = demo_provider()
    result = run_input_subtask(emptycode, provider)
    assert provider.calls == 0
    assert "empty code" in result.catalog_text


def test_input_subtask_garbage_falls_back(coloram):
    provider = MockProvider(default_response="I cannot determine the order, sorry.")
    result = run_input_subtask(coloram, provider)
    assert result.fallback_used
    assert result.file_order == ("coloram/__init__.py", "setup.py")


def test_parse_vector_lines_mixed():
    text = (
        "- typosquatting: Colorama\n"
        "* imitated-version: '0.2.7'\n"
        "frobnicate: nothing\n"
        "cmd: exec()\n"
        "\n"
    )
    deceptive = parse_vector_lines(text, {Category.DECEPTIVE})
    assert [v.kind for v in deceptive] == [
        VectorKind.TYPOSQUATTING,
        VectorKind.IMITATED_VERSION,
    ]
    assert deceptive[0].detail == "Colorama"
    assert deceptive[1].detail == "0.2.7"


def test_parse_vector_lines_no_vectors():
    assert parse_vector_lines("No attack vectors found.", {Category.DECEPTIVE}) == []


def test_deceptive_subtask(coloram):
    vectors, prompt, response = run_deceptive_subtask(
        coloram, "setup.py (9 loc)", ContextCatalog.default(), demo_provider()
    )
    assert [v.kind for v in vectors] == [
        VectorKind.TYPOSQUATTING,
        VectorKind.IMITATED_VERSION,
        VectorKind.FAKE_DESCRIPTION,
        VectorKind.FAKE_CONTACT,
    ]
    assert "Name: coloram" in prompt


def test_deceptive_subtask_requires_metadata(nometa):
    with pytest.raises(MissingMetadata):
        run_deceptive_subtask(nometa, "", ContextCatalog.default(), demo_provider())


def test_deceptive_subtask_no_vectors(coloram):
    provider = MockProvider(default_response="no attack vectors")
    vectors, _, _ = run_deceptive_subtask(
        coloram, "", ContextCatalog.default(), provider
    )
    assert vectors == []


def test_deceptive_subtask_forced_typosquat(coloram):
    provider = MockProvider(default_response="no attack vectors")
    finding = TyposquatFinding("coloram", "colorama", 1, MatchMethod.EDIT_DISTANCE)
    vectors, prompt, _ = run_deceptive_subtask(
        coloram, "", ContextCatalog.default(), provider, typosquat_signal=finding
    )
    assert vectors[0].kind is VectorKind.TYPOSQUATTING
    assert vectors[0].detail == "colorama"
    assert "colorama" in prompt  # the registry note reaches the model


def test_execution_subtask(coloram):
    vectors, prompt, _ = run_execution_subtask(
        coloram, ("setup.py", "coloram/__init__.py"), ContextCatalog.default(), demo_provider()
    )
    assert [v.kind for v in vectors] == [
        VectorKind.CMD,
        VectorKind.EVASION,
        VectorKind.URL_IP_PORT,
    ]
    # sources appear in the proposed execution order
    assert prompt.index("### File: setup.py") < prompt.index("### File: coloram/__init__.py")


def test_execution_subtask_empty_code(emptycode):
    with pytest.raises(EmptyCode):
        run_execution_subtask(emptycode, (), ContextCatalog.default(), demo_provider())


def test_execution_subtask_oversized(tmp_path):
    artifact = ingest_package(build_oversized_archive(tmp_path), tmp_path / "w")
    assert artifact.total_loc == 16_507
    with pytest.raises(CodeTooLarge):
        run_execution_subtask(
            artifact,
            tuple(s.relative_path for s in artifact.sources),
            ContextCatalog.default(),
            demo_provider(),
        )


def test_output_subtask_builds_sequence():
    deceptive = [AttackVector(VectorKind.TYPOSQUATTING, "a")]
    execution = [AttackVector(VectorKind.CMD), AttackVector(VectorKind.EVASION)]
    seq = run_output_subtask(deceptive, execution)
    assert render_abstract(seq) == "{typosquatting→cmd→evasion}"


def test_output_subtask_dedups_deceptive():
    deceptive = [
        AttackVector(VectorKind.TYPOSQUATTING, "first"),
        AttackVector(VectorKind.TYPOSQUATTING, "second"),
    ]
    seq = run_output_subtask(deceptive, [])
    assert len(seq.deceptive) == 1
    assert seq.deceptive[0].detail == "first"


def test_output_subtask_empty():
    assert run_output_subtask([], []).is_empty()


def test_extract_coloram_full_pipeline(coloram):
    provider = demo_provider()
    result = extract(coloram, provider)
    assert render_abstract(result.ttp) == COLORAM_ABSTRACT
    assert provider.calls == 3  # input, deceptive, execution
    assert result.skipped == frozenset()
    assert len(result.subtask_transcripts) == 3
    detailed = render_detailed(result.ttp)
    for needle in ("0.2.7", "exec()", "base64", "20.224.2.213"):
        assert needle in detailed


def test_extract_metadata_less_still_runs_execution(nometa):
    provider = demo_provider()
    result = extract(nometa, provider)
    assert SkipReason.DECEPTIVE_SKIPPED_NO_METADATA in result.skipped
    assert result.ttp.deceptive == ()
    assert result.ttp.execution  # execution side still produced vectors
    assert provider.calls == 2  # input + execution only


def test_extract_empty_code_still_runs_deceptive(emptycode):
    provider = demo_provider()
    result = extract(emptycode, provider)
    assert SkipReason.EXECUTION_SKIPPED_EMPTY_CODE in result.skipped
    assert result.ttp.execution == ()
    assert result.ttp.deceptive  # deceptive side still produced vectors
    assert provider.calls == 1  # deceptive only; no input call for empty code


def test_extract_oversized_skips_execution(tmp_path):
    artifact = ingest_package(build_oversized_archive(tmp_path), tmp_path / "w")
    result = extract(artifact, demo_provider())
    assert SkipReason.EXECUTION_SKIPPED_OVERSIZED in result.skipped
    assert result.ttp.execution == ()


def test_extract_deterministic(coloram):
    first = extract(coloram, demo_provider())
    second = extract(coloram, demo_provider())
    assert first == second
    assert first.to_json() == second.to_json()


def test_extract_single_shot(coloram):
    provider = demo_provider()
    result = extract(coloram, provider, single_shot=True)
    assert provider.calls == 1
    assert render_abstract(result.ttp) == COLORAM_ABSTRACT


def test_extraction_result_invariants():
    with pytest.raises(AssertionError):
        ExtractionResult(
            ("x", "1", "pypi"),
            TtpSequence((AttackVector(VectorKind.TYPOSQUATTING),), ()),
            "",
            (),
            frozenset({SkipReason.DECEPTIVE_SKIPPED_NO_METADATA}),
        )
