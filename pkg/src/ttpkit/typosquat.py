"""Typosquatting detection against a corpus of popular legitimate names.

The check is deterministic (edit distance, containment with a separator
boundary, dash/underscore swaps) rather than model-driven, and its
finding is fed into the deceptive subtask as a confirmed signal.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import IoFailure, TransportFailure

DEFAULT_MAX_DISTANCE = 2
_SEPARATORS = "-_."


class MatchMethod(str, Enum):
    EDIT_DISTANCE = "EditDistance"
    CONTAINMENT = "Containment"
    SEPARATOR_SWAP = "SeparatorSwap"


@dataclass(frozen=True)
class TyposquatFinding:
    candidate: str
    matched_legitimate: str
    edit_distance: int
    method: MatchMethod

    def __post_init__(self):
        if self.candidate == self.matched_legitimate:
            raise ValueError("a package is not its own squat")
        if self.method is MatchMethod.EDIT_DISTANCE and self.edit_distance < 1:
            raise ValueError("edit-distance findings need distance >= 1")


def levenshtein(a: str, b: str) -> int:
    """Two-row dynamic-programming edit distance."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(
                min(
                    previous[j] + 1,  # delete
                    current[j - 1] + 1,  # insert
                    previous[j - 1] + (ca != cb),  # substitute
                )
            )
        previous = current
    return previous[-1]


def load_popular_names(
    source: str | Path,
    cache_path: str | Path | None = None,
    ttl_seconds: float = 86_400.0,
    fetcher=None,
    clock=time.time,
) -> frozenset[str]:
    """Load the legitimate-name corpus from a file or a registry index URL.

    File format is one name per line; names are lowercased and
    deduplicated.  URL sources are fetched (simple-index HTML or plain
    lines) and cached with a timestamp so reloads inside the TTL make no
    network call.
    """
    text = None
    source_str = str(source)
    if source_str.startswith(("http://", "https://")):
        cache = Path(cache_path) if cache_path else None
        if cache and cache.exists():
            age = clock() - cache.stat().st_mtime
            if age < ttl_seconds:
                text = cache.read_text(encoding="utf-8")
        if text is None:
            if fetcher is None:
                import requests

                def fetcher(url):
                    resp = requests.get(url, timeout=30)
                    resp.raise_for_status()
                    return resp.text

            try:
                body = fetcher(source_str)
            except Exception as exc:
                raise TransportFailure(f"cannot fetch {source_str}: {exc}") from exc
            names = _names_from_index(body)
            text = "\n".join(sorted(names))
            if cache:
                cache.parent.mkdir(parents=True, exist_ok=True)
                cache.write_text(text, encoding="utf-8")
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read name corpus {source}: {exc}") from exc
    names = {line.strip().lower() for line in text.splitlines()}
    return frozenset(n for n in names if n and not n.startswith("#"))


_ANCHOR = re.compile(r"<a[^>]*>([^<]+)</a>", re.I)


def _names_from_index(body: str) -> set[str]:
    anchors = [m.strip().lower() for m in _ANCHOR.findall(body)]
    if anchors:
        return set(anchors)
    return {line.strip().lower() for line in body.splitlines() if line.strip()}


def bundled_corpus_path() -> Path:
    from importlib import resources

    return Path(str(resources.files("ttpkit").joinpath("data", "popular_pypi_names.txt")))


def _containment_match(name: str, corpus: frozenset[str]) -> str | None:
    hits = []
    for legit in corpus:
        if legit == name or len(legit) >= len(name):
            continue
        if name.startswith(legit) and name[len(legit)] in _SEPARATORS:
            hits.append(legit)
        elif name.endswith(legit) and name[-len(legit) - 1] in _SEPARATORS:
            hits.append(legit)
    return min(hits) if hits else None


def _separator_swap_match(name: str, corpus: frozenset[str]) -> str | None:
    swapped = name.translate(str.maketrans("-_", "_-"))
    candidates = {swapped, name.replace("_", "-"), name.replace("-", "_")}
    hits = sorted(c for c in candidates if c != name and c in corpus)
    return hits[0] if hits else None


def detect_typosquat(
    name: str,
    corpus: frozenset[str],
    max_distance: int = DEFAULT_MAX_DISTANCE,
) -> TyposquatFinding | None:
    """Best typosquat explanation for ``name``, or None.

    Exact corpus members are never flagged.  Checks, in order: lowest
    Levenshtein distance within [1, max_distance], then containment with
    a separator boundary ("loglib-modules" matches "loglib", "loglibx"
    does not), then dash/underscore swaps.  Ties break on the
    lexicographically smallest legitimate name, so results are total.
    """
    if max_distance < 1:
        raise ValueError("max_distance must be >= 1")
    if not name:
        raise ValueError("name must be non-empty")
    folded = name.strip().lower()
    if folded in corpus:
        return None

    best: tuple[int, str] | None = None
    for legit in corpus:
        if abs(len(legit) - len(folded)) > max_distance:
            continue
        dist = levenshtein(folded, legit)
        if 1 <= dist <= max_distance and (best is None or (dist, legit) < best):
            best = (dist, legit)
    if best is not None:
        return TyposquatFinding(folded, best[1], best[0], MatchMethod.EDIT_DISTANCE)

    contained = _containment_match(folded, corpus)
    if contained is not None:
        return TyposquatFinding(
            folded, contained, levenshtein(folded, contained), MatchMethod.CONTAINMENT
        )

    swapped = _separator_swap_match(folded, corpus)
    if swapped is not None:
        return TyposquatFinding(
            folded, swapped, levenshtein(folded, swapped), MatchMethod.SEPARATOR_SWAP
        )
    return None
