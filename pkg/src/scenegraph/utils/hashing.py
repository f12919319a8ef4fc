import hashlib
import json
from typing import Any


def content_digest(data: Any) -> str:
    """SHA-256 over the canonical JSON form of ``data`` (pydantic models included)."""
    if hasattr(data, "model_dump"):
        json_str = json.dumps(data.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    elif isinstance(data, (dict, list, tuple)):
        json_str = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
    else:
        json_str = str(data)

    return hashlib.sha256(json_str.encode()).hexdigest()


def short_digest(data: Any, length: int = 12) -> str:
    return content_digest(data)[:length]

