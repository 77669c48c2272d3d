from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict


def ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_json(path: Path, data: Dict[str, Any], *, sort_keys: bool = False) -> Path:
    path = Path(path)
    ensure_dir(path.parent)
    path.write_text(json.dumps(data, indent=2, sort_keys=sort_keys) + "\n", encoding="utf-8")
    return path


def read_json(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        return {}
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        return {}


def suffixed(path: Path, suffix: str) -> Path:
    """`path` with `suffix` appended to the full file name (capture.cf32 -> capture.cf32.json)."""
    path = Path(path)
    return path.with_name(path.name + suffix)


__all__ = ["ensure_dir", "write_json", "read_json", "suffixed"]
