"""Unpack package archives, parse metadata, collect sources, classify size.

Everything here is static: archives are extracted and read, never
installed or executed.  Undecodable bytes in source files are replaced
lossily because obfuscated payloads often embed non-UTF-8 content; the
original bytes stay untouched on disk.
"""

from __future__ import annotations

import email.parser
import json
import re
import tarfile
import zipfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path, PurePosixPath

from .errors import CorruptArchive, IoFailure, MalformedMetadata, UnsafePath

DEFAULT_OVERSIMPLIFIED_MAX = 1
DEFAULT_OVERSIZED_MIN = 15_000

SOURCE_PATTERNS = {"pypi": ["*.py"], "npm": ["*.js"]}


class Ecosystem(str, Enum):
    PYPI = "pypi"
    NPM = "npm"
    RUBYGEMS = "rubygems"  # reserved; no metadata parser yet


class ArchiveKind(str, Enum):
    TAR_GZ = "tar-gz"
    ZIP = "zip"
    WHEEL_ZIP = "wheel-zip"


class SizeClass(str, Enum):
    EMPTY = "empty"
    OVERSIMPLIFIED = "oversimplified"
    NORMAL = "normal"
    OVERSIZED = "oversized"


@dataclass(frozen=True)
class PackageArchive:
    path: Path
    ecosystem: Ecosystem
    archive_kind: ArchiveKind

    @classmethod
    def from_path(cls, path: str | Path, ecosystem: Ecosystem = Ecosystem.PYPI) -> "PackageArchive":
        """Sniff the archive kind from magic bytes (suffix decides wheel vs zip)."""
        p = Path(path)
        if not p.is_file():
            raise IoFailure(f"{p} is not a regular file")
        try:
            magic = p.open("rb").read(4)
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        if magic[:2] == b"\x1f\x8b":
            kind = ArchiveKind.TAR_GZ
        elif magic[:2] == b"PK":
            kind = ArchiveKind.WHEEL_ZIP if p.suffix == ".whl" else ArchiveKind.ZIP
        else:
            raise CorruptArchive(f"{p} has no recognizable archive magic")
        return cls(p, ecosystem, kind)


@dataclass(frozen=True)
class MetadataRecord:
    name: str
    version: str = ""
    description: str = ""
    author_contact: str = ""
    homepage_url: str = ""
    dependencies: tuple[tuple[str, str], ...] = ()
    raw_text: str = ""


@dataclass(frozen=True)
class SourceFile:
    relative_path: str
    content: str
    loc: int

    @classmethod
    def from_content(cls, relative_path: str, content: str) -> "SourceFile":
        return cls(relative_path, content, count_loc(content))


def count_loc(content: str) -> int:
    """Non-blank lines: at least one non-whitespace character."""
    return sum(1 for line in content.splitlines() if line.strip())


@dataclass(frozen=True)
class PackageArtifact:
    identity: tuple[str, str, str]  # (name, version, ecosystem)
    metadata: MetadataRecord | None
    sources: tuple[SourceFile, ...]
    total_loc: int = field(init=False)
    size_class: SizeClass = field(init=False)
    oversimplified_max: int = DEFAULT_OVERSIMPLIFIED_MAX
    oversized_min: int = DEFAULT_OVERSIZED_MIN

    def __post_init__(self):
        total = sum(s.loc for s in self.sources)
        object.__setattr__(self, "total_loc", total)
        object.__setattr__(
            self,
            "size_class",
            classify_size(total, self.oversimplified_max, self.oversized_min),
        )

    @property
    def name(self) -> str:
        return self.identity[0]

    @property
    def version(self) -> str:
        return self.identity[1]

    def to_json(self) -> dict:
        return {
            "name": self.identity[0],
            "version": self.identity[1],
            "ecosystem": self.identity[2],
            "metadata": None
            if self.metadata is None
            else {
                "name": self.metadata.name,
                "version": self.metadata.version,
                "description": self.metadata.description,
                "author_contact": self.metadata.author_contact,
                "homepage_url": self.metadata.homepage_url,
                "dependencies": [list(d) for d in self.metadata.dependencies],
            },
            "sources": [
                {"relative_path": s.relative_path, "loc": s.loc} for s in self.sources
            ],
            "total_loc": self.total_loc,
            "size_class": self.size_class.value,
        }


def classify_size(
    total_loc: int,
    oversimplified_max: int = DEFAULT_OVERSIMPLIFIED_MAX,
    oversized_min: int = DEFAULT_OVERSIZED_MIN,
) -> SizeClass:
    """Total function of total_loc; thresholds must satisfy max < min."""
    if oversimplified_max <= 0 or oversized_min <= 0:
        raise ValueError("thresholds must be positive")
    if oversimplified_max >= oversized_min:
        raise ValueError("oversimplified_max must be below oversized_min")
    if total_loc == 0:
        return SizeClass.EMPTY
    if total_loc <= oversimplified_max:
        return SizeClass.OVERSIMPLIFIED
    if total_loc > oversized_min:
        return SizeClass.OVERSIZED
    return SizeClass.NORMAL


def _check_member_path(name: str) -> None:
    pure = PurePosixPath(name.replace("\\", "/"))
    if pure.is_absolute() or ".." in pure.parts:
        raise UnsafePath(f"archive member escapes extraction root: {name!r}")


def archive_stem(path: Path) -> str:
    name = path.name
    for suffix in (".tar.gz", ".tgz", ".tar.bz2", ".tar", ".zip", ".whl", ".gem"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def unpack_archive(archive: PackageArchive, dest: str | Path) -> Path:
    """Extract every member under ``dest/<archive stem>/``.

    Members with traversal components ("../", absolute paths) abort the
    whole extraction with :class:`UnsafePath`.
    """
    dest = Path(dest)
    if not dest.is_dir():
        raise IoFailure(f"destination {dest} is not a directory")
    target = dest / archive_stem(archive.path)
    target.mkdir(parents=True, exist_ok=True)
    try:
        if archive.archive_kind is ArchiveKind.TAR_GZ:
            with tarfile.open(archive.path, "r:*") as tf:
                for member in tf.getmembers():
                    _check_member_path(member.name)
                    if member.issym() or member.islnk():
                        _check_member_path(member.linkname)
                extract_kwargs = (
                    {"filter": "data"} if hasattr(tarfile, "data_filter") else {}
                )
                for member in tf.getmembers():
                    tf.extract(member, target, **extract_kwargs)
        else:
            with zipfile.ZipFile(archive.path) as zf:
                for info in zf.infolist():
                    _check_member_path(info.filename)
                zf.extractall(target)
    except UnsafePath:
        raise
    except (tarfile.TarError, zipfile.BadZipFile, EOFError) as exc:
        raise CorruptArchive(f"cannot decode {archive.path}: {exc}") from exc
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return target


_METADATA_FILENAMES = {
    Ecosystem.PYPI: ("PKG-INFO", "METADATA"),
    Ecosystem.NPM: ("package.json",),
}


def _find_metadata_file(root: Path, ecosystem: Ecosystem) -> Path | None:
    names = _METADATA_FILENAMES.get(ecosystem, ())
    candidates = [
        p
        for p in root.rglob("*")
        if p.is_file() and p.name in names
    ]
    if not candidates:
        return None
    # shallowest first, then lexicographic, so the top-level record wins
    candidates.sort(key=lambda p: (len(p.relative_to(root).parts), str(p)))
    return candidates[0]


_DEP_SPLIT = re.compile(r"^\s*([A-Za-z0-9._\[\]-]+)\s*(.*)$")


def _parse_pkg_info(text: str) -> MetadataRecord:
    msg = email.parser.Parser().parsestr(text)
    name = (msg.get("Name") or "").strip()
    if not name:
        raise MalformedMetadata("metadata file lacks a Name field")
    description = (msg.get("Summary") or "").strip()
    body = msg.get_payload()
    if isinstance(body, str) and body.strip():
        description = (description + "\n" + body.strip()).strip()
    author = (msg.get("Author") or "").strip()
    author_email = (msg.get("Author-email") or "").strip()
    contact = " ".join(p for p in (author, author_email) if p)
    deps = []
    for req in msg.get_all("Requires-Dist") or []:
        m = _DEP_SPLIT.match(req)
        if m:
            deps.append((m.group(1), m.group(2).strip("() ").strip()))
    return MetadataRecord(
        name=name,
        version=(msg.get("Version") or "").strip(),
        description=description,
        author_contact=contact,
        homepage_url=(msg.get("Home-page") or "").strip(),
        dependencies=tuple(deps),
        raw_text=text,
    )


def _parse_package_json(text: str) -> MetadataRecord:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedMetadata(f"package.json is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or not str(obj.get("name", "")).strip():
        raise MalformedMetadata("package.json lacks a name")
    author = obj.get("author", "")
    if isinstance(author, dict):
        author = " ".join(
            str(author[k]) for k in ("name", "email") if author.get(k)
        )
    deps = obj.get("dependencies", {})
    dep_pairs = (
        tuple((str(k), str(v)) for k, v in sorted(deps.items()))
        if isinstance(deps, dict)
        else ()
    )
    return MetadataRecord(
        name=str(obj["name"]),
        version=str(obj.get("version", "")),
        description=str(obj.get("description", "")),
        author_contact=str(author),
        homepage_url=str(obj.get("homepage", "")),
        dependencies=dep_pairs,
        raw_text=text,
    )


def locate_and_parse_metadata(
    root: str | Path, ecosystem: Ecosystem = Ecosystem.PYPI
) -> MetadataRecord | None:
    """Return the parsed metadata record, or None when no metadata file exists.

    A file that exists but cannot be decoded raises
    :class:`MalformedMetadata`; that is a different outcome from absence.
    """
    root = Path(root)
    found = _find_metadata_file(root, ecosystem)
    if found is None:
        return None
    try:
        raw = found.read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedMetadata(f"{found.name} is not valid UTF-8: {exc}") from exc
    if ecosystem is Ecosystem.NPM:
        return _parse_package_json(text)
    return _parse_pkg_info(text)


def render_pkg_info(record: MetadataRecord) -> str:
    """Write a metadata record back out in the header-field format (fixtures)."""
    lines = [f"Name: {record.name}", f"Version: {record.version}"]
    if record.description:
        summary, _, body = record.description.partition("\n")
        lines.append(f"Summary: {summary}")
    if record.author_contact:
        lines.append(f"Author: {record.author_contact}")
    if record.homepage_url:
        lines.append(f"Home-page: {record.homepage_url}")
    for dep, spec in record.dependencies:
        lines.append(f"Requires-Dist: {dep} {spec}".rstrip())
    text = "\n".join(lines) + "\n"
    if record.description and "\n" in record.description:
        text += "\n" + record.description.partition("\n")[2] + "\n"
    return text


def _looks_binary(raw: bytes) -> bool:
    return b"\x00" in raw[:8192]


def collect_sources(
    root: str | Path, extensions: list[str] | None = None
) -> list[SourceFile]:
    """Gather matching source files in lexicographic relative-path order."""
    root = Path(root)
    if not root.is_dir():
        raise IoFailure(f"{root} is not a directory")
    patterns = extensions or SOURCE_PATTERNS["pypi"]
    matched: dict[str, Path] = {}
    for pattern in patterns:
        for p in root.rglob(pattern):
            if p.is_file():
                matched[p.relative_to(root).as_posix()] = p
    out = []
    for rel in sorted(matched):
        try:
            raw = matched[rel].read_bytes()
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        if _looks_binary(raw):
            continue
        out.append(SourceFile.from_content(rel, raw.decode("utf-8", errors="replace")))
    return out


_NAME_VERSION = re.compile(r"^(?P<name>.+?)-(?P<version>\d[\w.!+]*)$")


def identity_from_stem(stem: str, ecosystem: Ecosystem) -> tuple[str, str, str]:
    m = _NAME_VERSION.match(stem)
    if m:
        return (m.group("name"), m.group("version"), ecosystem.value)
    return (stem, "", ecosystem.value)


def ingest_package(
    archive_path: str | Path,
    workdir: str | Path,
    ecosystem: Ecosystem = Ecosystem.PYPI,
    oversimplified_max: int = DEFAULT_OVERSIMPLIFIED_MAX,
    oversized_min: int = DEFAULT_OVERSIZED_MIN,
) -> PackageArtifact:
    """Unpack + parse + collect in one step; the usual entry point."""
    archive = PackageArchive.from_path(archive_path, ecosystem)
    Path(workdir).mkdir(parents=True, exist_ok=True)
    root = unpack_archive(archive, workdir)
    metadata = locate_and_parse_metadata(root, ecosystem)
    sources = collect_sources(root, SOURCE_PATTERNS.get(ecosystem.value))
    if metadata is not None and metadata.name:
        identity = (metadata.name, metadata.version, ecosystem.value)
    else:
        identity = identity_from_stem(archive_stem(archive.path), ecosystem)
    return PackageArtifact(
        identity=identity,
        metadata=metadata,
        sources=tuple(sources),
        oversimplified_max=oversimplified_max,
        oversized_min=oversized_min,
    )
