"""Experiment orchestrator: runs seed replicas concurrently and records the run.

Lifecycle of a run:
    1. Resolve the environment and create the run (queued)
    2. Start it and run one replica per seed in worker threads
    3. Aggregate the evaluation rows and write metrics and checkpoints
    4. Complete it, or mark it failed and re-raise the replica error
"""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path

import numpy as np

from app.agents.agent import load_agent
from app.config import MAX_CONCURRENT_REPLICAS, ORACLE_TOLERANCE
from app.env.io import content_hash
from app.env.simulator import GraphEnvironment, wrap_fatal_failure
from app.env.spec import EnvironmentSpec
from app.metrics import EvalRow, RunMetrics, aggregate, csv_rows, render_csv
from app.oracle.exact import dump_solution, exact_q
from app.oracle.properties import CHECK_TOLERANCE, certify
from app.oracle.report import CertificationReport
from app.store import runs as store
from app.worker.experiment import ExperimentConfig, resolve_environment
from app.worker.replica import EVAL_STREAM, ReplicaResult, ReplicaRunner, evaluate
from app.worker.run_manager import RunManager

logger = logging.getLogger(__name__)


class Orchestrator:
    """Runs experiments, evaluations and oracle jobs through the run store."""

    def __init__(self, workers: int = MAX_CONCURRENT_REPLICAS):
        self.workers = max(1, workers)
        self.run_manager = RunManager()

    # ── Training ──────────────────────────────────────────────────────

    async def _run_replicas(self, spec: EnvironmentSpec, config: ExperimentConfig) -> list[ReplicaResult]:
        sem = asyncio.Semaphore(self.workers)

        async def run_one(seed: int) -> ReplicaResult:
            async with sem:
                return await asyncio.to_thread(ReplicaRunner(spec, config, seed).run)

        results = await asyncio.gather(*(run_one(seed) for seed in config.seeds), return_exceptions=True)
        errors = [r for r in results if isinstance(r, BaseException)]
        if errors:
            for e in errors:
                logger.error(f"Replica failed: {e}")
            raise errors[0]
        return sorted(results, key=lambda r: r.seed)

    def run_experiment(self, config: ExperimentConfig) -> RunMetrics:
        spec = resolve_environment(config)
        run_dir = Path(config.out) if config.out else None
        if run_dir is not None:
            self.run_manager.create_run(
                run_dir, "train", config.model_dump(mode="json"),
                seeds=config.seeds, env_hash=content_hash(spec),
            )
            self.run_manager.start_run(run_dir)

        logger.info(
            f"Experiment: agent={config.agent.agent_kind.value}, seeds={config.seeds}, "
            f"train_steps={config.train_steps}, workers={self.workers}"
        )
        try:
            results = asyncio.run(self._run_replicas(spec, config))
        except Exception as e:
            if run_dir is not None:
                self.run_manager.complete_run(run_dir, error=str(e))
            raise

        rows = [row for r in results for row in r.rows]
        metrics = RunMetrics(rows=rows, aggregates=aggregate(rows, config.window))
        if run_dir is not None:
            store.write_metrics(run_dir, render_csv(csv_rows(rows, metrics.aggregates, config.window)))
            if config.save_checkpoints:
                for r in results:
                    r.agent.save(store.checkpoint_dir(run_dir, r.seed))
            self.run_manager.complete_run(run_dir, final_return=metrics.final_moving_avg)
        return metrics

    # ── Evaluation of a checkpoint ────────────────────────────────────

    def run_evaluation(self, checkpoint: str | Path, config: ExperimentConfig) -> RunMetrics:
        """Greedy evaluation of saved agents: a run directory (one checkpoint per seed) or a single agent."""
        spec = resolve_environment(config)
        checkpoint = Path(checkpoint)
        env = GraphEnvironment(spec)
        rows = []
        for seed in config.seeds:
            agent_dir = store.checkpoint_dir(checkpoint, seed)
            if not agent_dir.exists():
                agent_dir = checkpoint
            agent = load_agent(agent_dir, spec, np.random.default_rng(seed))
            rng = np.random.default_rng([seed, EVAL_STREAM, 0])
            returns = evaluate(agent, env, config.eval_episodes, rng, config.max_episode_steps)
            rows.append(EvalRow(step=0, seed=seed, mean_return=float(np.mean(returns)), episodes=config.eval_episodes))
            logger.info(f"[Seed {seed}] evaluation of {agent_dir}: mean return {rows[-1].mean_return:.4f}")

        metrics = RunMetrics(rows=rows, aggregates=aggregate(rows, config.window))
        if config.out:
            run_dir = Path(config.out)
            self.run_manager.create_run(
                run_dir, "eval", {**config.model_dump(mode="json"), "checkpoint": str(checkpoint)},
                seeds=config.seeds, env_hash=content_hash(spec),
            )
            self.run_manager.start_run(run_dir)
            store.write_metrics(run_dir, render_csv(csv_rows(rows, metrics.aggregates, config.window)))
            self.run_manager.complete_run(run_dir, final_return=metrics.final_moving_avg)
        return metrics

    # ── Oracle jobs ───────────────────────────────────────────────────

    def run_certification(
        self,
        spec: EnvironmentSpec,
        gamma: float,
        tolerance: float = CHECK_TOLERANCE,
        samples: int = 10_000,
        seed: int = 0,
        out: str | Path | None = None,
    ) -> CertificationReport:
        run_dir = Path(out) if out else None
        if run_dir is not None:
            config = {"gamma": gamma, "tolerance": tolerance, "samples": samples, "seed": seed}
            self.run_manager.create_run(run_dir, "certify", config, seeds=[seed], env_hash=content_hash(spec))
            self.run_manager.start_run(run_dir)
        try:
            report = certify(spec, gamma, np.random.default_rng(seed), tolerance=tolerance, samples=samples)
        except Exception as e:
            if run_dir is not None:
                self.run_manager.complete_run(run_dir, error=str(e))
            raise
        if run_dir is not None:
            store.write_report(run_dir, report.to_text())
            self.run_manager.complete_run(run_dir)
        return report

    def run_oracle(
        self,
        spec: EnvironmentSpec,
        gamma: float,
        fatal_failure: bool = True,
        tolerance: float = ORACLE_TOLERANCE,
        out: str | Path | None = None,
    ) -> str:
        """Exact Q dump of the (fatal-failure) environment."""
        env = wrap_fatal_failure(spec) if fatal_failure else GraphEnvironment(spec)
        run_dir = Path(out) if out else None
        if run_dir is not None:
            config = {"gamma": gamma, "tolerance": tolerance, "fatal_failure": fatal_failure}
            self.run_manager.create_run(run_dir, "oracle", config, env_hash=content_hash(spec))
            self.run_manager.start_run(run_dir)
        try:
            text = dump_solution(exact_q(env, gamma, tolerance))
        except Exception as e:
            if run_dir is not None:
                self.run_manager.complete_run(run_dir, error=str(e))
            raise
        if run_dir is not None:
            store.write_report(run_dir, text)
            self.run_manager.complete_run(run_dir)
        return text


def run_experiment(config: ExperimentConfig, workers: int = MAX_CONCURRENT_REPLICAS) -> RunMetrics:
    """Train and evaluate the configured agent for every seed; see Orchestrator.run_experiment."""
    return Orchestrator(workers).run_experiment(config)
