import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError

from conewave.core.exceptions import InvalidConfigError
from conewave.models.schemas import RunConfig

logger = logging.getLogger(__name__)

LIST_KEYS = {"mus"}


def parse_config_file(path: str) -> Dict[str, Any]:
    """Flat ``key = value`` text; '#' starts a comment, list values are comma separated."""
    file = Path(path)
    if not file.is_file():
        raise InvalidConfigError(f"config file not found: {path}")
    values: Dict[str, Any] = {}
    for number, raw in enumerate(file.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"{path}:{number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key in LIST_KEYS:
            values[key] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            values[key] = value
    return values


def merge_config(command: str, flags: Dict[str, Any], config_path: Optional[str] = None) -> RunConfig:
    """Flags override config-file keys, which override the RunConfig defaults."""
    merged: Dict[str, Any] = {}
    if config_path:
        merged.update(parse_config_file(config_path))
    merged.update({k: v for k, v in flags.items() if v is not None})
    merged["command"] = command
    try:
        return RunConfig(**merged)
    except ValidationError as e:
        raise InvalidConfigError(f"invalid configuration: {e}") from e


def config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(cfg.hashed_fields(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
