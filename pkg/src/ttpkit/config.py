"""CLI configuration with flags > environment > config file precedence."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IoFailure
from .ingest import DEFAULT_OVERSIMPLIFIED_MAX, DEFAULT_OVERSIZED_MIN
from .llm import ProviderConfig
from .typosquat import DEFAULT_MAX_DISTANCE, bundled_corpus_path

ENV_PREFIX = "TTPKIT_"

# env var name -> config key
_ENV_KEYS = {
    "ENDPOINT_URL": "endpoint_url",
    "MODEL": "model_name",
    "MOCK": "mock_mode",
    "INDEX_DIR": "index_dir",
    "CORPUS_DIR": "corpus_dir",
    "CORS_ORIGIN": "cors_origin",
}


@dataclass(frozen=True)
class CliConfig:
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    index_dir: Path = Path("ttp-index")
    corpus_dir: Path = Path("ttp-docs")
    oversimplified_max: int = DEFAULT_OVERSIMPLIFIED_MAX
    oversized_min: int = DEFAULT_OVERSIZED_MIN
    typosquat_corpus: Path = field(default_factory=bundled_corpus_path)
    typosquat_max_distance: int = DEFAULT_MAX_DISTANCE
    mock_mode: bool = True
    transcripts: Path | None = None
    cors_origin: str | None = None
    listen_host: str = "127.0.0.1"
    listen_port: int = 8571

    def __post_init__(self):
        object.__setattr__(self, "index_dir", Path(self.index_dir).absolute())
        object.__setattr__(self, "corpus_dir", Path(self.corpus_dir).absolute())
        object.__setattr__(self, "typosquat_corpus", Path(self.typosquat_corpus).absolute())
        if self.transcripts is not None:
            object.__setattr__(self, "transcripts", Path(self.transcripts).absolute())


def _coerce_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def load_config(
    config_file: str | Path | None = None,
    env: dict | None = None,
    **flag_overrides,
) -> CliConfig:
    """Merge defaults <- config file <- environment <- explicit flags."""
    env = os.environ if env is None else env
    merged: dict = {}

    if config_file is not None:
        try:
            file_values = json.loads(Path(config_file).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoFailure(f"cannot read config file {config_file}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise IoFailure(f"config file {config_file} is not valid JSON: {exc}") from exc
        merged.update(file_values)

    for env_suffix, key in _ENV_KEYS.items():
        value = env.get(ENV_PREFIX + env_suffix)
        if value is not None:
            merged[key] = value

    merged.update({k: v for k, v in flag_overrides.items() if v is not None})

    provider_keys = {
        "endpoint_url", "model_name", "api_key_env", "timeout",
        "max_retries", "requests_per_minute", "embedding_dimension",
    }
    provider_values = {k: merged.pop(k) for k in list(merged) if k in provider_keys}
    if "timeout" in provider_values:
        provider_values["timeout"] = float(provider_values["timeout"])
    for int_key in ("max_retries", "requests_per_minute", "embedding_dimension"):
        if int_key in provider_values:
            provider_values[int_key] = int(provider_values[int_key])

    if "mock_mode" in merged:
        merged["mock_mode"] = _coerce_bool(merged["mock_mode"])
    for int_key in ("oversimplified_max", "oversized_min", "typosquat_max_distance", "listen_port"):
        if int_key in merged:
            merged[int_key] = int(merged[int_key])

    return CliConfig(provider=ProviderConfig(**provider_values), **merged)
