"""File-backed run store: one directory per run under RUNS_DIR.

Layout of a run directory:
    manifest.json            RunRecord
    metrics.csv              evaluation rows (train / eval runs)
    report.txt               certification report or exact Q dump
    checkpoints/seed-<n>/    agent checkpoints
"""

import json
import logging
import os
from datetime import datetime, timezone
from pathlib import Path

from app.config import RUNS_DIR
from app.store.models import RunRecord

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
METRICS = "metrics.csv"
REPORT = "report.txt"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def default_run_dir(kind: str, root: str | Path = RUNS_DIR) -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
    return Path(root) / f"{kind}-{stamp}"


# ── Runs ──────────────────────────────────────────────────────────────

def save_run(run_dir: str | Path, record: RunRecord) -> None:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    _write_atomic(run_dir / MANIFEST, json.dumps(record.to_dict(), indent=2, sort_keys=True))


def create_run(
    run_dir: str | Path,
    kind: str,
    config: dict,
    seeds: list[int] | None = None,
    env_hash: str = "",
) -> RunRecord:
    """Create the run directory with a queued manifest."""
    run_dir = Path(run_dir)
    record = RunRecord(
        id=run_dir.name,
        kind=kind,
        config=config,
        seeds=list(seeds or []),
        env_hash=env_hash,
        created_at=_now(),
    )
    save_run(run_dir, record)
    return record


def get_run(run_dir: str | Path) -> RunRecord | None:
    path = Path(run_dir) / MANIFEST
    if not path.exists():
        return None
    try:
        return RunRecord.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, TypeError) as e:
        logger.warning(f"Unreadable manifest {path}: {e}")
        return None


def start_run(run_dir: str | Path) -> RunRecord:
    record = get_run(run_dir)
    record.status = "running"
    record.started_at = _now()
    save_run(run_dir, record)
    return record


def complete_run(run_dir: str | Path, error: str = "", final_return: float | None = None) -> RunRecord:
    """Mark a run completed, or failed when error is given."""
    record = get_run(run_dir)
    record.status = "failed" if error else "completed"
    record.error = error
    record.final_return = final_return
    record.completed_at = _now()
    save_run(run_dir, record)
    return record


def list_runs(root: str | Path = RUNS_DIR) -> list[RunRecord]:
    """Every readable run under root, newest first."""
    root = Path(root)
    if not root.is_dir():
        return []
    records = [r for r in (get_run(p) for p in root.iterdir() if p.is_dir()) if r is not None]
    records.sort(key=lambda r: r.created_at or "", reverse=True)
    return records


# ── Artifacts ─────────────────────────────────────────────────────────

def write_metrics(run_dir: str | Path, text: str) -> Path:
    path = Path(run_dir) / METRICS
    _write_atomic(path, text)
    return path


def read_metrics_csv(run_dir: str | Path) -> str | None:
    path = Path(run_dir) / METRICS
    return path.read_text(encoding="utf-8") if path.exists() else None


def write_report(run_dir: str | Path, text: str) -> Path:
    path = Path(run_dir) / REPORT
    _write_atomic(path, text)
    return path


def read_report(run_dir: str | Path) -> str | None:
    path = Path(run_dir) / REPORT
    return path.read_text(encoding="utf-8") if path.exists() else None


def checkpoint_dir(run_dir: str | Path, seed: int) -> Path:
    return Path(run_dir) / "checkpoints" / f"seed-{seed}"
