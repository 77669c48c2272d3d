from __future__ import annotations

import subprocess
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import pandas as pd

from .. import __version__
from ..config import ExperimentConfig
from ..utils.io import ensure_dir, suffixed, write_json
from ..utils.logging import iso_now

BER_SCHEMA = "# lora-phy-lab ber v1"
SYNC_BENCH_SCHEMA = "# lora-phy-lab sync-bench v1"
RUN_LOG_SUFFIX = ".run_log.json"


def results_frame(rows: Iterable[Any], columns: List[str]) -> pd.DataFrame:
    return pd.DataFrame([row.as_dict() for row in rows], columns=columns)


def write_result_csv(rows: Iterable[Any], path: Path, schema: str, columns: List[str]) -> Path:
    """Schema comment line, then the table; no timestamps so reruns are byte-identical."""
    path = Path(path)
    ensure_dir(path.parent)
    frame = results_frame(rows, columns)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(schema + "\n")
        frame.to_csv(handle, index=False, float_format="%.10g", lineterminator="\n")
    return path


def load_result_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def run_log_path(out_path: Path) -> Path:
    return suffixed(out_path, RUN_LOG_SUFFIX)


def _git_commit() -> str:
    try:
        return subprocess.check_output(
            ["git", "rev-parse", "HEAD"], stderr=subprocess.DEVNULL, text=True
        ).strip()
    except Exception:
        return "unknown"


def _run_id(command: str, out_path: Path) -> str:
    """<output stem>_<command>_<UTC stamp>; the stem names the run."""
    stamp = datetime.now(timezone.utc).strftime("%Y%m%d_%H%M%S")
    label = command.replace("-", "_")
    return f"{Path(out_path).stem}_{label}_{stamp}"


def write_run_log(
    out_path: Path,
    cfg: ExperimentConfig,
    command: str,
    started: float,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    payload = {
        "run_id": _run_id(command, out_path),
        "command": command,
        "timestamp": iso_now(),
        "git_commit": _git_commit(),
        "version": __version__,
        "runtime_seconds": round(time.monotonic() - started, 3),
        "output": str(out_path),
        "config": cfg.as_dict(),
    }
    if extra:
        payload.update(extra)
    return write_json(run_log_path(out_path), payload)


__all__ = [
    "BER_SCHEMA",
    "SYNC_BENCH_SCHEMA",
    "results_frame",
    "write_result_csv",
    "load_result_csv",
    "run_log_path",
    "write_run_log",
]
