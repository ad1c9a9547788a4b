"""Offline demo corpus: fixture archives and canned mock transcripts.

The archives are small synthetic lookalikes of real-world malicious
packages (inert: nothing here is executable harm, and ttpkit never runs
package code anyway).  The canned transcripts drive the mock provider so
the full pipeline runs deterministically with zero network traffic.
"""

from __future__ import annotations

import base64
import gzip
import io
import json
import tarfile
from pathlib import Path

from .llm import MockProvider
from .prompts import (
    CHAT_MARKER,
    CLASSIFY_MARKER,
    DECEPTIVE_MARKER,
    EXECUTION_MARKER,
    EXECUTOR_MARKER,
    EXTRACT_MARKER,
    INPUT_MARKER,
)
from .store import TtpDocument

COLORAM_URL = "http://20.224.2.213//inject/ctE6toLDoHBbJApj"
COLORAM_DESCRIPTION = "Official Stanford Karel library used in CS 106A"
COLORAM_CONTACT = "tyep@XXX.XX"

COLORAM_ABSTRACT = (
    "{typosquatting→imitated-version→fake-description"
    "→fake-contact→cmd→evasion→url-ip-port}"
)

_COLORAM_PKG_INFO = f"""Name: coloram
Version: 0.2.7
Summary: {COLORAM_DESCRIPTION}
Author: tyep
Author-email: {COLORAM_CONTACT}
Home-page: https://pypi.org/project/colorama/
"""

# the encoded payload is a bare string assignment: decoding it is part of
# the analysis exercise, executing it does nothing
_PAYLOAD = base64.b64encode(f"SERVER = '{COLORAM_URL}'\n".encode()).decode()

_COLORAM_SETUP = f"""from setuptools import setup
import base64

setup(
    name="coloram",
    version="0.2.7",
    description="{COLORAM_DESCRIPTION}",
)

exec(base64.b64decode("{_PAYLOAD}"))
"""

_COLORAM_INIT = '''"""Terminal colors."""

def init():
    return True
'''


def _write_tar_gz(path: Path, members: dict[str, str]) -> Path:
    """Deterministic .tar.gz: zeroed mtimes in both tar and gzip layers."""
    buf = io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w") as tf:
        for name, content in sorted(members.items()):
            data = content.encode("utf-8")
            info = tarfile.TarInfo(name)
            info.size = len(data)
            info.mtime = 0
            tf.addfile(info, io.BytesIO(data))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        with gzip.GzipFile(fileobj=fh, mode="wb", mtime=0) as gz:
            gz.write(buf.getvalue())
    return path


def build_coloram_archive(dest_dir: str | Path) -> Path:
    return _write_tar_gz(
        Path(dest_dir) / "coloram-0.2.7.tar.gz",
        {
            "PKG-INFO": _COLORAM_PKG_INFO,
            "setup.py": _COLORAM_SETUP,
            "coloram/__init__.py": _COLORAM_INIT,
        },
    )


def build_nometa_archive(dest_dir: str | Path) -> Path:
    return _write_tar_gz(
        Path(dest_dir) / "nometa-1.0.tar.gz",
        {"runner.py": "import os\nprint(os.environ.get('HOME'))\n"},
    )


def build_emptycode_archive(dest_dir: str | Path) -> Path:
    return _write_tar_gz(
        Path(dest_dir) / "emptycode-1.0.tar.gz",
        {
            "PKG-INFO": "Name: emptycode\nVersion: 1.0\nSummary: does nothing\n",
            "emptycode/__init__.py": "\n\n\n",
        },
    )


def build_oversized_archive(dest_dir: str | Path, loc: int = 16_507) -> Path:
    body = "\n".join(f"x_{n} = {n}" for n in range(loc)) + "\n"
    return _write_tar_gz(
        Path(dest_dir) / "mirrorbot-1.3.tar.gz",
        {
            "PKG-INFO": "Name: mirrorbot\nVersion: 1.3\nSummary: mirrors things\n",
            "mirrorbot/core.py": body,
        },
    )


def coloram_rules() -> list[tuple[str, str]]:
    """Mock-provider rules replaying the coloram analysis per subtask."""
    deceptive_reply = "\n".join(
        [
            "typosquatting: Colorama",
            "imitated-version: 0.2.7",
            f"fake-description: {COLORAM_DESCRIPTION}",
            f"fake-contact: {COLORAM_CONTACT}",
        ]
    )
    execution_reply = "\n".join(
        [
            "cmd: exec()",
            "evasion: base64",
            f"url-ip-port: {COLORAM_URL}",
        ]
    )
    single_shot_reply = (
        "Step 2 found deceptive vectors; Step 3 simulated setup.py, decoded the "
        f"base64 payload and observed the remote address {COLORAM_URL}.\n"
        f"Step 4 TTP: {COLORAM_ABSTRACT}"
    )
    return [
        (INPUT_MARKER, "setup.py\ncoloram/__init__.py"),
        (DECEPTIVE_MARKER, deceptive_reply),
        (EXECUTION_MARKER, execution_reply),
        (EXECUTOR_MARKER, single_shot_reply),
        (CLASSIFY_MARKER, "yes"),
        (
            EXTRACT_MARKER,
            json.dumps(
                [
                    {
                        "malicious_package_name": "coloram",
                        "malicious_package_actions": (
                            "typosquats colorama and runs base64-hidden code; "
                            "chain {TS→CMD→EVA→Remote}"
                        ),
                    }
                ]
            ),
        ),
    ]


def echo_chat_responder(prompt: str) -> str | None:
    """Chat responder that quotes the top retrieved document's analysis."""
    if CHAT_MARKER not in prompt:
        return None
    _, _, tail = prompt.partition("Database:")
    for line in tail.splitlines():
        line = line.strip()
        if not line.startswith("{"):
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError:
            continue
        chain = "→".join(
            part for part in (doc.get("deceptive_ttp"), doc.get("execution_ttp")) if part
        )
        return (
            f"{doc.get('package_name')} {doc.get('version')}: {doc.get('analysis')} "
            f"Chain: {chain}"
        )
    return "The retrieved information is insufficient to answer that."


def demo_provider(default_response: str = "no attack vectors") -> MockProvider:
    provider = MockProvider(rules=coloram_rules(), default_response=default_response)
    provider.responder = echo_chat_responder
    return provider


def write_transcripts_fixture(path: str | Path) -> Path:
    """Serialize the canned rules so the CLI mock mode can replay them."""
    path = Path(path)
    path.write_text(
        json.dumps(
            {
                "rules": [list(r) for r in coloram_rules()],
                "default_response": "no attack vectors",
            },
            indent=2,
            ensure_ascii=False,
        ),
        encoding="utf-8",
    )
    return path


def demo_documents() -> list[TtpDocument]:
    """A small indexed corpus shaped like the common in-the-wild chains."""
    docs = [
        TtpDocument(
            package_name="coloram",
            version="0.2.7",
            ecosystem="pypi",
            deceptive_ttp="{typosquatting→imitated-version→fake-description→fake-contact}",
            execution_ttp="{cmd→evasion→url-ip-port}",
            analysis=(
                "coloram imitates the colorama package, hides a base64 payload in "
                f"setup.py and reaches out to {COLORAM_URL}."
            ),
            intent_labels=("Trojan", "Downloader"),
        ),
        TtpDocument(
            package_name="loglib-modules",
            version="1.0",
            ecosystem="pypi",
            deceptive_ttp="{typosquatting}",
            execution_ttp="{data→send-receive}",
            analysis=(
                "loglib-modules mimics the legitimate loglib package, steals local "
                "data and sends it to a web URL."
            ),
            intent_labels=("Spyware",),
        ),
        TtpDocument(
            package_name="fallguys",
            version="1.0",
            ecosystem="npm",
            execution_ttp="{evasion→data→send-receive}",
            analysis=(
                "fallguys embeds base64-obfuscated strings in index.js, steals "
                "local files and uploads them to a third-party webhook URL."
            ),
            intent_labels=("Spyware",),
        ),
        TtpDocument(
            package_name="requestw",
            version="2.28.1",
            ecosystem="pypi",
            deceptive_ttp="{typosquatting→imitated-version→fake-description}",
            execution_ttp="{pre-install→cmd→evasion→conceal}",
            analysis="requestw typosquats requests and runs an obfuscated pre-install hook.",
            intent_labels=("Trojan", "Backdoor"),
        ),
    ]
    return docs
