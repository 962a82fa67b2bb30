"""Read-only FastAPI results service over the run store."""

import io
import logging
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import PlainTextResponse, StreamingResponse

from app.config import RUNS_DIR
from app.dashboard.auth import APIKeyMiddleware
from app.worker.run_manager import RunManager
from app.store import runs as store

logger = logging.getLogger(__name__)


def _run_dir(root: Path, run_id: str) -> Path:
    if not run_id or run_id in (".", "..") or "/" in run_id or "\\" in run_id:
        raise HTTPException(status_code=404, detail="run not found")
    run_dir = root / run_id
    if store.get_run(run_dir) is None:
        raise HTTPException(status_code=404, detail="run not found")
    return run_dir


def create_app(runs_dir: str | Path = RUNS_DIR, api_key: str | None = None) -> FastAPI:
    root = Path(runs_dir)
    run_manager = RunManager()

    app = FastAPI(title="Slate-MDP Results")
    app.add_middleware(APIKeyMiddleware, api_key=api_key)

    # ── Health Check ──────────────────────────────────────────────────

    @app.get("/health")
    async def health():
        return {"status": "ok", "timestamp": datetime.now(timezone.utc).isoformat()}

    # ── Runs ──────────────────────────────────────────────────────────

    @app.get("/runs")
    async def runs(
        kind: str = Query(default="", description="Filter by run kind"),
        status: str = Query(default="", description="Filter by status"),
    ):
        records = run_manager.get_all_runs(root)
        if kind:
            records = [r for r in records if r["kind"] == kind]
        if status:
            records = [r for r in records if r["status"] == status]
        return {"runs": records, "count": len(records)}

    @app.get("/runs/{run_id}")
    async def run_detail(run_id: str):
        return store.get_run(_run_dir(root, run_id)).to_dict()

    @app.get("/runs/{run_id}/metrics.csv")
    async def run_metrics(run_id: str):
        """Download the run's metrics CSV."""
        text = store.read_metrics_csv(_run_dir(root, run_id))
        if text is None:
            raise HTTPException(status_code=404, detail="run has no metrics")
        return StreamingResponse(
            io.StringIO(text),
            media_type="text/csv",
            headers={"Content-Disposition": f"attachment; filename={run_id}_metrics.csv"},
        )

    @app.get("/runs/{run_id}/report", response_class=PlainTextResponse)
    async def run_report(run_id: str):
        text = store.read_report(_run_dir(root, run_id))
        if text is None:
            raise HTTPException(status_code=404, detail="run has no report")
        return PlainTextResponse(text)

    return app


app = create_app()
