"""Security-report mining: fetch pages, strip boilerplate, extract records.

Boilerplate removal is deterministic (largest contiguous text block wins;
script/style/nav subtrees are discarded) so the model only ever sees the
distilled article text.  Ground-truth records always carry their source
URL and stay at LLM-only confidence until a human promotes them.
"""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass
from enum import Enum
from html.parser import HTMLParser
from pathlib import Path
from urllib.parse import urlparse

from .errors import EmptyContent, MalformedExtraction, NotHtml, TransportFailure
from .extract import _chain_from_free_text
from .llm import ChatMessage
from .prompts import REPORT_SCHEMA, render_classify_prompt, render_extract_prompt
from .vectors import TtpSequence, parse_ttp_string, render_abstract

log = logging.getLogger(__name__)


class Confidence(str, Enum):
    LLM_ONLY = "LlmOnly"
    HUMAN_VERIFIED = "HumanVerified"


@dataclass(frozen=True)
class GroundTruthRecord:
    package_name: str
    actions_text: str
    source_url: str
    ttp: TtpSequence | None = None
    version: str = ""
    confidence: Confidence = Confidence.LLM_ONLY

    def __post_init__(self):
        if not self.package_name.strip():
            raise ValueError("package_name must be non-empty")

    def to_json(self) -> dict:
        return {
            "package": self.package_name,
            "version": self.version,
            "ttp": render_abstract(self.ttp) if self.ttp is not None else "",
            "actions": self.actions_text,
            "source_url": self.source_url,
            "confidence": self.confidence.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GroundTruthRecord":
        chain = obj.get("ttp", "")
        return cls(
            package_name=obj["package"],
            actions_text=obj.get("actions", ""),
            source_url=obj.get("source_url", ""),
            ttp=parse_ttp_string(chain, strict=True) if chain else None,
            version=obj.get("version", ""),
            confidence=Confidence(obj.get("confidence", "LlmOnly")),
        )


# -- main-content extraction -------------------------------------------------

_SKIP_TAGS = {
    "script", "style", "nav", "noscript", "header", "footer",
    "aside", "svg", "form", "button", "iframe",
}
_CONTAINER_TAGS = {"article", "main", "section", "div", "body", "td", "blockquote"}


class _DensityParser(HTMLParser):
    """Attribute text to its nearest container; the densest container wins."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self._skip_depth = 0
        self._container_stack: list[int] = [0]
        self._next_id = 1
        self.blocks: dict[int, list[str]] = {0: []}

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag in _CONTAINER_TAGS and self._skip_depth == 0:
            block_id = self._next_id
            self._next_id += 1
            self.blocks[block_id] = []
            self._container_stack.append(block_id)

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag in _CONTAINER_TAGS and len(self._container_stack) > 1:
            self._container_stack.pop()

    def handle_data(self, data):
        if self._skip_depth:
            return
        text = re.sub(r"\s+", " ", data).strip()
        if text:
            self.blocks[self._container_stack[-1]].append(text)


def extract_main_content(html: str) -> str:
    """Distill a page to its main text; raises EmptyContent when nothing is left."""
    parser = _DensityParser()
    parser.feed(html)
    parser.close()
    best = max(parser.blocks.values(), key=lambda texts: sum(len(t) for t in texts), default=[])
    content = "\n".join(best).strip()
    if not content:
        raise EmptyContent("page has no extractable text")
    return content


class ReportFetcher:
    """HTML fetcher with a per-host politeness delay.

    ``transport(url) -> (content_type, text)`` is injectable; file paths
    and file:// URLs are read from disk for desk runs and tests.
    """

    def __init__(
        self,
        min_delay: float = 1.0,
        timeout: float = 30.0,
        transport=None,
        clock=time.monotonic,
        sleeper=time.sleep,
    ):
        self.min_delay = min_delay
        self.timeout = timeout
        self._transport = transport
        self._clock = clock
        self._sleep = sleeper
        self.last_fetch: dict[str, float] = {}

    def _default_transport(self, url: str) -> tuple[str, str]:
        import requests

        response = requests.get(url, timeout=self.timeout)
        response.raise_for_status()
        return response.headers.get("Content-Type", ""), response.text

    def fetch(self, url: str) -> tuple[str, str]:
        if url.startswith("file://") or not url.startswith(("http://", "https://")):
            path = Path(url.removeprefix("file://"))
            suffix = path.suffix.lower()
            content_type = "text/html" if suffix in (".html", ".htm") else suffix.lstrip(".")
            try:
                return content_type, path.read_text(encoding="utf-8")
            except OSError as exc:
                raise TransportFailure(f"cannot read {path}: {exc}") from exc
        host = urlparse(url).netloc
        now = self._clock()
        waited = self.last_fetch.get(host)
        if waited is not None and now - waited < self.min_delay:
            self._sleep(self.min_delay - (now - waited))
        self.last_fetch[host] = self._clock()
        try:
            if self._transport is not None:
                return self._transport(url)
            return self._default_transport(url)
        except TransportFailure:
            raise
        except Exception as exc:
            raise TransportFailure(f"cannot fetch {url}: {exc}") from exc


def fetch_and_extract(url: str, fetcher: ReportFetcher | None = None) -> str:
    """Fetch one page and return its distilled main text."""
    fetcher = fetcher or ReportFetcher()
    content_type, body = fetcher.fetch(url)
    normalized = content_type.split(";")[0].strip().lower()
    if normalized and "html" not in normalized:
        raise NotHtml(f"{url} served {content_type!r}")
    return extract_main_content(body)


# -- model passes -------------------------------------------------------------

def classify_report(content: str, provider) -> bool:
    """Yes/no triage: is this a malware-package analysis report?"""
    if not content.strip():
        raise ValueError("content must be non-empty")
    response = provider.complete([ChatMessage("user", render_classify_prompt(content))])
    verdict = response.strip().lower()
    if verdict.startswith("yes"):
        return True
    if verdict.startswith("no"):
        return False
    log.warning("unparsable classification %r; defaulting to false", response[:80])
    return False


_JSON_ARRAY = re.compile(r"\[.*\]", re.S)


def extract_records(
    content: str, source_url: str, provider, schema=None
) -> list[GroundTruthRecord]:
    """One extraction call; each schema object becomes one record."""
    schema = list(schema) if schema is not None else list(REPORT_SCHEMA)
    prompt = render_extract_prompt(content, source_url, schema)
    response = provider.complete([ChatMessage("user", prompt)])
    payload = None
    try:
        payload = json.loads(response)
    except json.JSONDecodeError:
        match = _JSON_ARRAY.search(response)
        if match:
            try:
                payload = json.loads(match.group(0))
            except json.JSONDecodeError:
                payload = None
    if not isinstance(payload, list):
        raise MalformedExtraction(
            "model output is not a JSON array", raw_output=response
        )
    records = []
    for item in payload:
        if not isinstance(item, dict) or not str(item.get(schema[0], "")).strip():
            log.warning("skipping malformed extraction element: %r", item)
            continue
        actions = str(item.get(schema[1], "")) if len(schema) > 1 else ""
        records.append(
            GroundTruthRecord(
                package_name=str(item[schema[0]]).strip(),
                actions_text=actions,
                source_url=source_url,
                ttp=_chain_from_free_text(actions),
            )
        )
    return records


# -- ground-truth file I/O -----------------------------------------------------

def append_ground_truth(path: str | Path, records: list[GroundTruthRecord]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")


def read_ground_truth(path: str | Path) -> list[GroundTruthRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(GroundTruthRecord.from_json(json.loads(line)))
    return records


def write_ground_truth(path: str | Path, records: list[GroundTruthRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
