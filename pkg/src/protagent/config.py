"""Runtime configuration: key=value config files with flag overrides.

API keys are never read from config files; the config only names the
environment variable that holds them.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError


@dataclass
class RunConfig:
    backend: str = "scripted"  # remote | scripted
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "PROTAGENT_API_KEY"
    script: str = ""
    temperature: float = 0.0
    max_tokens: int = 4096
    max_turns: int = 12
    tool_budget: int = 10
    store_fasta: str = ""
    store_annotations: str = ""
    store_json: str = ""
    hmm_library: str = ""
    run_dir: str = "runs"
    workers: int = 1

    def validate(self) -> None:
        if self.backend not in ("remote", "scripted"):
            raise ConfigError(f"backend must be 'remote' or 'scripted', got {self.backend!r}")
        if self.backend == "remote" and not (self.endpoint and self.model):
            raise ConfigError("remote backend requires both endpoint and model")
        if self.backend == "scripted" and not self.script:
            raise ConfigError("scripted backend requires a script file")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def load_config_file(path: str) -> dict:
    """Parse key = value lines; '#' starts a comment; unknown keys rejected."""
    values: dict = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for line_no, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key = value, got {line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{line_no}: unknown config key {key!r}")
        values[key] = _coerce(key, raw, f"{path}:{line_no}")
    return values


def _coerce(key: str, raw: str, where: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind in ("int", int):
            return int(raw)
        if kind in ("float", float):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {raw!r}") from exc
    return raw


def build_config(config_path: str | None, **overrides) -> RunConfig:
    """Config file values first, then non-None flag overrides."""
    values = load_config_file(config_path) if config_path else {}
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    return RunConfig(**values)
