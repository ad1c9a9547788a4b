"""Attack-vector vocabulary, TTP sequences and the arrow-chain text format.

The vocabulary is closed: six deceptive vectors extracted from package
metadata, four execution attack vectors, and nine neutral actions that
become malicious only as part of a chain.  Free-text names coming out of
an LLM are folded onto this vocabulary through a synonym table.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyChain, OrderViolation, UnknownVector


class Category(str, Enum):
    DECEPTIVE = "deceptive"
    EXECUTION_ATTACK = "execution-attack"
    NEUTRAL = "neutral"


class VectorKind(str, Enum):
    # deceptive: metadata-based lures
    TYPOSQUATTING = "typosquatting"
    IMITATED_VERSION = "imitated-version"
    FAKE_DESCRIPTION = "fake-description"
    IMITATED_URL = "imitated-url"
    MALICIOUS_DEPENDENCY = "malicious-dependency"
    FAKE_CONTACT = "fake-contact"
    # execution attack vectors
    EVASION = "evasion"
    CONCEAL = "conceal"
    CMD = "cmd"
    MALICIOUS_URL = "malicious-url"
    # neutral actions (process / file / network)
    PRE_INSTALL = "pre-install"
    INSTALL = "install"
    POST_INSTALL = "post-install"
    DATA = "data"
    FILE_DIR = "file-dir"
    PERMISSION = "permission"
    READ_WRITE = "read-write"
    URL_IP_PORT = "url-ip-port"
    SEND_RECEIVE = "send-receive"

    @property
    def category(self) -> Category:
        return _CATEGORY[self]


_DECEPTIVE = {
    VectorKind.TYPOSQUATTING,
    VectorKind.IMITATED_VERSION,
    VectorKind.FAKE_DESCRIPTION,
    VectorKind.IMITATED_URL,
    VectorKind.MALICIOUS_DEPENDENCY,
    VectorKind.FAKE_CONTACT,
}
_EXECUTION_ATTACK = {
    VectorKind.EVASION,
    VectorKind.CONCEAL,
    VectorKind.CMD,
    VectorKind.MALICIOUS_URL,
}

_CATEGORY = {
    kind: (
        Category.DECEPTIVE
        if kind in _DECEPTIVE
        else Category.EXECUTION_ATTACK
        if kind in _EXECUTION_ATTACK
        else Category.NEUTRAL
    )
    for kind in VectorKind
}


def _fold(raw: str) -> str:
    """Lowercase and collapse punctuation/whitespace runs to single dashes."""
    return re.sub(r"[^a-z0-9]+", "-", raw.lower()).strip("-")


# Synonyms observed in LLM output, report prose and ranking-table
# abbreviations.  Keys are pre-folded; canonical ids fold to themselves.
_SYNONYMS: dict[str, VectorKind] = {
    "ts": VectorKind.TYPOSQUATTING,
    "typo-squatting": VectorKind.TYPOSQUATTING,
    "iv": VectorKind.IMITATED_VERSION,
    "imitated-version-number": VectorKind.IMITATED_VERSION,
    "fake-version": VectorKind.IMITATED_VERSION,
    "fd": VectorKind.FAKE_DESCRIPTION,
    "fake-desc": VectorKind.FAKE_DESCRIPTION,
    "iu": VectorKind.IMITATED_URL,
    "imitated-homepage": VectorKind.IMITATED_URL,
    "fake-url": VectorKind.IMITATED_URL,
    "md": VectorKind.MALICIOUS_DEPENDENCY,
    "malicious-dependence": VectorKind.MALICIOUS_DEPENDENCY,
    "malicious-dependencies": VectorKind.MALICIOUS_DEPENDENCY,
    "fc": VectorKind.FAKE_CONTACT,
    "fake-author": VectorKind.FAKE_CONTACT,
    "fake-email": VectorKind.FAKE_CONTACT,
    "eva": VectorKind.EVASION,
    "obfuscation": VectorKind.EVASION,
    "con": VectorKind.CONCEAL,
    "concealing": VectorKind.CONCEAL,
    "code-execution": VectorKind.CMD,
    "exec": VectorKind.CMD,
    "eval": VectorKind.CMD,
    "command": VectorKind.CMD,
    "command-execution": VectorKind.CMD,
    "setup": VectorKind.CMD,
    "mal-url": VectorKind.MALICIOUS_URL,
    "pre": VectorKind.PRE_INSTALL,
    "preinstall": VectorKind.PRE_INSTALL,
    "post": VectorKind.POST_INSTALL,
    "postinstall": VectorKind.POST_INSTALL,
    "setup": VectorKind.INSTALL,
    "sensitive-data": VectorKind.DATA,
    "file": VectorKind.FILE_DIR,
    "dir": VectorKind.FILE_DIR,
    "directory": VectorKind.FILE_DIR,
    "file-directory": VectorKind.FILE_DIR,
    "permissions": VectorKind.PERMISSION,
    "chmod": VectorKind.PERMISSION,
    "read": VectorKind.READ_WRITE,
    "write": VectorKind.READ_WRITE,
    "remote": VectorKind.URL_IP_PORT,
    "url": VectorKind.URL_IP_PORT,
    "ip": VectorKind.URL_IP_PORT,
    "port": VectorKind.URL_IP_PORT,
    # common misspelling kept verbatim from field data
    "send-recieve": VectorKind.SEND_RECEIVE,
    "send": VectorKind.SEND_RECEIVE,
    "receive": VectorKind.SEND_RECEIVE,
    "recieve": VectorKind.SEND_RECEIVE,
    "network": VectorKind.SEND_RECEIVE,
}

_LOOKUP: dict[str, VectorKind] = {_fold(k.value): k for k in VectorKind}
_LOOKUP.update(_SYNONYMS)


def normalize_vector_name(raw: str) -> VectorKind:
    """Map a free-text vector name onto the closed vocabulary.

    Matching is case- and punctuation-insensitive ("URL/IP/port",
    "url-ip-port" and "Remote" all resolve to the same kind).  Raises
    :class:`UnknownVector` when nothing matches.
    """
    if not raw or not raw.strip():
        raise UnknownVector(raw)
    key = _fold(raw)
    try:
        return _LOOKUP[key]
    except KeyError:
        raise UnknownVector(raw) from None


@dataclass(frozen=True)
class AttackVector:
    kind: VectorKind
    detail: str | None = None

    def __post_init__(self):
        if self.detail is not None:
            trimmed = self.detail.strip()
            if not trimmed:
                raise ValueError("detail must be non-empty after trimming")
            object.__setattr__(self, "detail", trimmed)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.detail is not None:
            out["detail"] = self.detail
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "AttackVector":
        return cls(normalize_vector_name(obj["kind"]), obj.get("detail"))


@dataclass(frozen=True)
class TtpSequence:
    """Ordered attack-vector chain: deceptive prefix, execution suffix.

    Deceptive kinds are distinct (the prefix is drawn from a six-element
    set, so its length never exceeds 6); the execution part may repeat
    neutral actions.
    """

    deceptive: tuple[AttackVector, ...] = field(default_factory=tuple)
    execution: tuple[AttackVector, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "deceptive", tuple(self.deceptive))
        object.__setattr__(self, "execution", tuple(self.execution))
        seen = set()
        for av in self.deceptive:
            if av.kind.category is not Category.DECEPTIVE:
                raise OrderViolation(
                    f"{av.kind.value} is not a deceptive vector but sits in the prefix"
                )
            if av.kind in seen:
                raise ValueError(f"duplicate deceptive kind {av.kind.value}")
            seen.add(av.kind)
        for av in self.execution:
            if av.kind.category is Category.DECEPTIVE:
                raise OrderViolation(
                    f"deceptive vector {av.kind.value} sits in the execution suffix"
                )
        assert len(self.deceptive) <= 6

    def __iter__(self):
        yield from self.deceptive
        yield from self.execution

    def __len__(self) -> int:
        return len(self.deceptive) + len(self.execution)

    def kinds(self) -> list[VectorKind]:
        """Flattened kind list, deceptive before execution, duplicates kept."""
        return [av.kind for av in self]

    def is_empty(self) -> bool:
        return not self.deceptive and not self.execution

    def to_json(self) -> dict:
        return {
            "deceptive": [av.to_json() for av in self.deceptive],
            "execution": [av.to_json() for av in self.execution],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TtpSequence":
        return cls(
            tuple(AttackVector.from_json(v) for v in obj.get("deceptive", [])),
            tuple(AttackVector.from_json(v) for v in obj.get("execution", [])),
        )

    @classmethod
    def from_vectors(cls, vectors: list[AttackVector]) -> "TtpSequence":
        """Stable-partition a mixed vector list into a valid sequence.

        Deceptive duplicates are dropped keeping the first occurrence;
        relative order inside each part is preserved.
        """
        deceptive: list[AttackVector] = []
        execution: list[AttackVector] = []
        seen: set[VectorKind] = set()
        for av in vectors:
            if av.kind.category is Category.DECEPTIVE:
                if av.kind not in seen:
                    deceptive.append(av)
                    seen.add(av.kind)
            else:
                execution.append(av)
        return cls(tuple(deceptive), tuple(execution))


_ARROW = re.compile(r"→|->")
# trailing parenthesized or quoted payload: kind('x'), kind (x), kind 'x', kind "x"
_DETAIL = re.compile(
    r"""^(?P<name>[^('"]+?)\s*(?:\(\s*(?P<paren>.*?)\s*\)|(?P<q>['"])(?P<quoted>.*)(?P=q))\s*$""",
    re.S,
)


def _parse_segment(segment: str) -> AttackVector:
    text = segment.strip()
    m = _DETAIL.match(text)
    detail = None
    if m:
        text = m.group("name").strip()
        detail = m.group("paren") if m.group("paren") is not None else m.group("quoted")
        detail = detail.strip().strip("'\"").strip() or None
    return AttackVector(normalize_vector_name(text), detail)


def parse_ttp_string(text: str, strict: bool = False) -> TtpSequence:
    """Parse an arrow-chain ("A→B→C" or "A->B->C", optionally brace-wrapped).

    In repair mode (the default, meant for noisy LLM output) a deceptive
    kind appearing after the first execution/neutral kind is moved back
    into the prefix by stable partition.  In strict mode (ground-truth
    files) the same situation raises :class:`OrderViolation`.
    """
    body = text.strip()
    if body.startswith("{") and body.endswith("}"):
        body = body[1:-1]
    segments = [s for s in (seg.strip() for seg in _ARROW.split(body)) if s]
    if not segments:
        raise EmptyChain(f"no attack vectors in {text!r}")
    vectors = [_parse_segment(seg) for seg in segments]
    if strict:
        execution_started = False
        for av in vectors:
            if av.kind.category is not Category.DECEPTIVE:
                execution_started = True
            elif execution_started:
                raise OrderViolation(
                    f"deceptive vector {av.kind.value} appears after an execution vector"
                )
    return TtpSequence.from_vectors(vectors)


def render_abstract(seq: TtpSequence) -> str:
    """Brace-wrapped chain of canonical kind names."""
    return "{" + "→".join(av.kind.value for av in seq) + "}"


def render_detailed(seq: TtpSequence) -> str:
    """Like :func:`render_abstract` but elements carrying a concrete value
    print that value in single quotes instead of the kind name."""
    parts = [
        f"'{av.detail}'" if av.detail is not None else av.kind.value for av in seq
    ]
    return "{" + "→".join(parts) + "}"


def render_annotated(seq: TtpSequence) -> str:
    """Chain that keeps both names and concrete values: ``kind('value')``.

    Unlike the detailed form this round-trips through
    :func:`parse_ttp_string`, so it is the storage format for documents.
    """
    parts = [
        f"{av.kind.value}('{av.detail}')" if av.detail is not None else av.kind.value
        for av in seq
    ]
    return "{" + "→".join(parts) + "}"
