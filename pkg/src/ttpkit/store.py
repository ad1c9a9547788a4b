"""TTP document persistence and cosine-similarity retrieval.

Each package is one JSON document, embedded whole (the documents are
short, so no chunking).  Search is exact brute-force cosine over the
full index, which is instant at the corpus sizes involved; the layout on
disk is one JSON file per document plus a single binary vector file and
a versioned manifest.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyIndex, IoFailure, SchemaVersionMismatch
from .extract import ExtractionResult
from .vectors import TtpSequence, parse_ttp_string, render_annotated

SCHEMA_VERSION = 1


def fnv1a64(text: str) -> int:
    """Stable non-cryptographic 64-bit hash (FNV-1a)."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class TtpDocument:
    package_name: str
    version: str = ""
    ecosystem: str = "pypi"
    deceptive_ttp: str = ""
    execution_ttp: str = ""
    analysis: str = ""
    intent_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.package_name.strip():
            raise ValueError("package_name must be non-empty")
        # chains must be clean: strict parse or empty
        if self.deceptive_ttp:
            seq = parse_ttp_string(self.deceptive_ttp, strict=True)
            if seq.execution:
                raise ValueError("deceptive_ttp contains execution vectors")
        if self.execution_ttp:
            seq = parse_ttp_string(self.execution_ttp, strict=True)
            if seq.deceptive:
                raise ValueError("execution_ttp contains deceptive vectors")

    @property
    def doc_id(self) -> str:
        key = f"{self.package_name}@{self.version}@{self.ecosystem}".lower()
        return f"{fnv1a64(key):016x}"

    def sequence(self) -> TtpSequence:
        """Recombined full chain (deceptive prefix + execution suffix)."""
        deceptive = (
            parse_ttp_string(self.deceptive_ttp, strict=True).deceptive
            if self.deceptive_ttp
            else ()
        )
        execution = (
            parse_ttp_string(self.execution_ttp, strict=True).execution
            if self.execution_ttp
            else ()
        )
        return TtpSequence(deceptive, execution)

    def to_json(self) -> dict:
        out = {
            "package_name": self.package_name,
            "version": self.version,
            "ecosystem": self.ecosystem,
            "deceptive_ttp": self.deceptive_ttp,
            "execution_ttp": self.execution_ttp,
            "analysis": self.analysis,
        }
        if self.intent_labels is not None:
            out["intent_labels"] = list(self.intent_labels)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "TtpDocument":
        labels = obj.get("intent_labels")
        return cls(
            package_name=obj["package_name"],
            version=obj.get("version", ""),
            ecosystem=obj.get("ecosystem", "pypi"),
            deceptive_ttp=obj.get("deceptive_ttp", ""),
            execution_ttp=obj.get("execution_ttp", ""),
            analysis=obj.get("analysis", ""),
            intent_labels=tuple(labels) if labels is not None else None,
        )

    @classmethod
    def from_extraction(cls, result: ExtractionResult) -> "TtpDocument":
        name, version, ecosystem = result.identity
        deceptive = (
            render_annotated(TtpSequence(result.ttp.deceptive, ()))
            if result.ttp.deceptive
            else ""
        )
        execution = (
            render_annotated(TtpSequence((), result.ttp.execution))
            if result.ttp.execution
            else ""
        )
        return cls(
            package_name=name,
            version=version,
            ecosystem=ecosystem,
            deceptive_ttp=deceptive,
            execution_ttp=execution,
            analysis=result.analysis_text,
        )

    def serialized(self) -> str:
        """Canonical embedding text: the whole document as one JSON unit."""
        return json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


_NUM = re.compile(r"\d+")


def _version_key(version: str):
    return [int(n) for n in _NUM.findall(version)] or [0], version


class VectorIndex:
    """In-memory document + embedding index with exact top-k search."""

    def __init__(self, embedder, dimension: int | None = None):
        self.embedder = embedder
        self.dimension = dimension
        self._docs: dict[str, TtpDocument] = {}
        self._vectors: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._docs)

    @property
    def documents(self) -> list[TtpDocument]:
        return [self._docs[i] for i in sorted(self._docs)]

    def get(self, doc_id: str) -> TtpDocument | None:
        return self._docs.get(doc_id)

    def find_by_name(self, name: str) -> list[TtpDocument]:
        """All versions of a package, case-insensitive, version-sorted."""
        folded = name.lower()
        hits = [d for d in self._docs.values() if d.package_name.lower() == folded]
        return sorted(hits, key=lambda d: _version_key(d.version))

    def index_document(self, doc: TtpDocument) -> str:
        """Embed the serialized document as one unit; same identity upserts."""
        vector = self.embedder.embed(doc.serialized()).as_array()
        if self.dimension is None:
            self.dimension = vector.shape[0]
        elif vector.shape[0] != self.dimension:
            raise DimensionMismatch(
                f"vector of dimension {vector.shape[0]} in a {self.dimension}-dim index"
            )
        doc_id = doc.doc_id
        self._docs[doc_id] = doc
        self._vectors[doc_id] = vector
        return doc_id

    def search(self, query: str, k: int) -> list[tuple[TtpDocument, float]]:
        """Exact cosine top-k, ties broken by doc_id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self._docs:
            raise EmptyIndex("no documents indexed")
        query_vec = self.embedder.embed(query).as_array()
        scored = [
            (cosine_similarity(query_vec, vec), doc_id)
            for doc_id, vec in self._vectors.items()
        ]
        scored.sort(key=lambda t: (-t[0], t[1]))
        return [(self._docs[doc_id], score) for score, doc_id in scored[:k]]

    def checksum(self) -> str:
        """Content fingerprint used to assert read-only request paths."""
        joined = "\n".join(self._docs[i].serialized() for i in sorted(self._docs))
        return f"{fnv1a64(joined):016x}"

    def persist(self, path: str | Path) -> None:
        root = Path(path)
        try:
            root.mkdir(parents=True, exist_ok=True)
            docs_dir = root / "docs"
            docs_dir.mkdir(exist_ok=True)
            order = sorted(self._docs)
            manifest = {
                "schema_version": SCHEMA_VERSION,
                "dimension": self.dimension,
                "doc_ids": order,
            }
            (root / "manifest.json").write_text(
                json.dumps(manifest, indent=2), encoding="utf-8"
            )
            for doc_id in order:
                (docs_dir / f"{doc_id}.json").write_text(
                    json.dumps(self._docs[doc_id].to_json(), indent=2, ensure_ascii=False),
                    encoding="utf-8",
                )
            if order:
                matrix = np.stack([self._vectors[i] for i in order])
            else:
                matrix = np.zeros((0, self.dimension or 0))
            np.save(root / "vectors.npy", matrix)
        except OSError as exc:
            raise IoFailure(f"cannot persist index to {root}: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path, embedder) -> "VectorIndex":
        root = Path(path)
        if root.is_file():
            manifest_path = root
        elif root.is_dir():
            manifest_path = root / "manifest.json"
        else:
            raise IoFailure(f"{root} does not exist")
        try:
            raw = manifest_path.read_text(encoding="utf-8")
        except OSError as exc:
            raise SchemaVersionMismatch(f"no readable manifest at {manifest_path}") from exc
        try:
            manifest = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaVersionMismatch(f"manifest is not JSON: {exc}") from exc
        if not isinstance(manifest, dict) or manifest.get("schema_version") != SCHEMA_VERSION:
            raise SchemaVersionMismatch(
                f"expected schema_version {SCHEMA_VERSION}, "
                f"got {manifest.get('schema_version') if isinstance(manifest, dict) else None}"
            )
        index = cls(embedder, dimension=manifest.get("dimension"))
        order = manifest.get("doc_ids", [])
        try:
            matrix = np.load(root / "vectors.npy") if order else None
            for position, doc_id in enumerate(order):
                doc = TtpDocument.from_json(
                    json.loads((root / "docs" / f"{doc_id}.json").read_text("utf-8"))
                )
                index._docs[doc_id] = doc
                index._vectors[doc_id] = matrix[position]
        except OSError as exc:
            raise IoFailure(f"cannot load index payload: {exc}") from exc
        return index
