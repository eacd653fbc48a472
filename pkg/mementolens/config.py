"""
Configuration Module

Shared settings for every subcommand. Values are layered, lowest precedence
first: built-in defaults, an optional TOML file, environment variables
(a .env file is honoured through python-dotenv), then explicit overrides
coming from command-line flags.
"""

import os
import sys
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from mementolens.errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PACKAGE_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_ENDPOINTS = PACKAGE_ROOT / "data" / "endpoints.json"
DEFAULT_CONFIG_FILE = Path("mementolens.toml")

# env var -> Config field
ENV_VARS = {
    "MEMENTOLENS_CACHE": "cache_dir",
    "MEMENTOLENS_RATE": "rate_limit",
    "MEMENTOLENS_RETRIES": "retry_attempts",
    "MEMENTOLENS_HOP_LIMIT": "hop_limit",
    "MEMENTOLENS_OUTPUT": "output_dir",
    "MEMENTOLENS_ENDPOINTS": "endpoints_path",
    "MEMENTOLENS_WORKERS": "workers",
}


class Config(BaseModel):
    """Settings shared by the whole pipeline."""

    endpoints_path: Path = Field(default=DEFAULT_ENDPOINTS, description="Endpoint registry JSON file")
    cache_dir: Path = Field(default=Path(".mementolens-cache"), description="Response cache directory")
    rate_limit: float = Field(default=1.0, gt=0, description="Requests per second per archive host")
    retry_attempts: int = Field(default=3, gt=0, description="Attempts per request, first one included")
    backoff_base: float = Field(default=2.0, gt=0, description="First retry wait in seconds")
    hop_limit: int = Field(default=10, gt=0, description="Maximum replay redirects followed")
    timeout: float = Field(default=60.0, gt=0, description="Per-request timeout in seconds")
    workers: int = Field(default=4, gt=0, description="Worker pool size for batch subcommands")
    probe_images: bool = True
    live_probing: bool = False
    refresh: bool = False
    output_dir: Path = Field(default=Path("runs"))
    user_agent: str = "mementolens/0.3 (web archive research)"
    account_url_template: str = "instagram.com/{handle}/"
    login_target: str = "www.instagram.com/accounts/login"

    def account_url(self, handle: str) -> str:
        return self.account_url_template.format(handle=handle)


def _read_config_file(path: Optional[Path]) -> Dict[str, Any]:
    if path is None:
        if not DEFAULT_CONFIG_FILE.exists():
            return {}
        path = DEFAULT_CONFIG_FILE
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML in {path}: {e}") from e
    # allow either a flat file or a [mementolens] table
    return dict(data.get("mementolens", data))


def _read_env(environ: Mapping[str, str]) -> Dict[str, Any]:
    return {field: environ[name] for name, field in ENV_VARS.items() if environ.get(name)}


def load_config(
    config_file: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> Config:
    """
    Build the effective configuration.

    Args:
        config_file: TOML file; when None, ./mementolens.toml is used if present
        overrides: values from command-line flags (None values are ignored)
        environ: environment mapping, defaults to os.environ after load_dotenv()

    Returns:
        Validated Config

    Raises:
        ConfigError: unreadable file or a value that fails validation
    """
    if environ is None:
        load_dotenv()
        environ = os.environ

    values: Dict[str, Any] = {}
    values.update(_read_config_file(config_file))
    values.update(_read_env(environ))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    try:
        return Config(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e
