"""Run creation and lifecycle management."""

import logging
from pathlib import Path

from app.store import runs as store

logger = logging.getLogger(__name__)


class RunManager:
    """Creates runs in the store and moves them through queued, running and completed or failed."""

    def create_run(
        self,
        run_dir: str | Path,
        kind: str,
        config: dict,
        seeds: list[int] | None = None,
        env_hash: str = "",
    ) -> Path:
        record = store.create_run(run_dir, kind, config, seeds=seeds, env_hash=env_hash)
        logger.info(
            f"Created run {record.id}: kind={kind}, seeds={len(record.seeds)}, "
            f"env={env_hash[:12] or '-'}"
        )
        return Path(run_dir)

    def start_run(self, run_dir: Path) -> None:
        store.start_run(run_dir)
        logger.info(f"Run {run_dir.name} started")

    def complete_run(self, run_dir: Path, error: str = "", final_return: float | None = None) -> None:
        store.complete_run(run_dir, error=error, final_return=final_return)
        status = "failed" if error else "completed"
        logger.info(f"Run {run_dir.name} {status}" + (f": {error}" if error else ""))

    def get_all_runs(self, root: str | Path) -> list[dict]:
        return [r.to_dict() for r in store.list_runs(root)]
