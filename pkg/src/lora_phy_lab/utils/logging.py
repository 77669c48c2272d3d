from __future__ import annotations

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def iso_now() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO), format=LOG_FORMAT)


def _default(value: Any) -> Any:
    if hasattr(value, "item"):
        return value.item()
    if hasattr(value, "tolist"):
        return value.tolist()
    return str(value)


def append_log(entries: Iterable[Dict[str, Any]], log_path: Path) -> Path:
    log_path = Path(log_path)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    with log_path.open("a", encoding="utf-8") as handle:
        for entry in entries:
            payload = {"timestamp": iso_now(), **entry}
            handle.write(json.dumps(payload, default=_default) + "\n")
    return log_path


__all__ = ["iso_now", "configure_logging", "append_log"]
