"""Entry point: logging setup, the command-line interface and the results service."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path

import numpy as np
import uvicorn

from app.agents.config import parse_knn
from app.config import LOG_LEVEL, MAX_CONCURRENT_REPLICAS, ORACLE_TOLERANCE, PORT, RUNS_DIR
from app.env.generator import chain_environment, generate_environment, parse_generator_config
from app.env.io import load_environment, save_environment
from app.errors import ConfigError, SlateMdpError
from app.oracle.properties import CHECK_TOLERANCE
from app.store import runs as store
from app.worker.experiment import parse_experiment_config
from app.worker.orchestrator import Orchestrator

logger = logging.getLogger("slate_mdp")


def setup_logging(level_name: str = LOG_LEVEL) -> None:
    """Configure root logging once: one stdout handler."""
    level = getattr(logging, level_name.upper(), logging.INFO)

    formatter = logging.Formatter(
        "%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(level)
    handler.setFormatter(formatter)

    root = logging.getLogger()
    root.setLevel(level)
    root.handlers = [handler]


async def run_dashboard(host: str, port: int, runs_dir: str) -> None:
    """Run the FastAPI results service."""
    from app.dashboard.app import create_app

    config = uvicorn.Config(
        create_app(runs_dir),
        host=host,
        port=port,
        log_level="warning",
        access_log=False,
    )
    server = uvicorn.Server(config)
    await server.serve()


# ── Argument helpers ──────────────────────────────────────────────────

def _read_json(path: str, field: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"file not found: {p}", field=field)
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"not valid JSON: {e}", field=field) from e


def parse_seeds(value: str) -> list[int]:
    try:
        seeds = [int(x) for x in value.split(",") if x.strip()]
    except ValueError as e:
        raise ConfigError(f"expected comma-separated integers, got {value!r}", field="seeds") from e
    if not seeds:
        raise ConfigError("no seeds given", field="seeds")
    return seeds


def parse_chain(value: str) -> tuple[int, float, float]:
    try:
        length, lure, goal = value.split(",")
        return int(length), float(lure), float(goal)
    except ValueError as e:
        raise ConfigError(f"expected LENGTH,LURE,GOAL, got {value!r}", field="chain") from e


def experiment_data(args: argparse.Namespace) -> dict:
    """Experiment mapping from --config, overridden by the individual flags."""
    data = _read_json(args.config, "config") if args.config else {}
    agent = dict(data.get("agent", {}))

    if getattr(args, "generator", None):
        data["generator"] = _read_json(args.generator, "generator")
    if args.env:
        data["env_path"] = args.env
    if getattr(args, "agent", None):
        agent["agent_kind"] = args.agent
    for flag, key in (
        ("slate_size", "slate_size"), ("alpha", "alpha"),
        ("gamma", "gamma"), ("epsilon", "epsilon"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            agent[key] = value
    if getattr(args, "knn", None) is not None:
        agent["knn_k"] = parse_knn(args.knn)
    if agent:
        data["agent"] = agent

    if args.seeds:
        data["seeds"] = parse_seeds(args.seeds)
    for flag in ("train_steps", "eval_episodes", "eval_every"):
        value = getattr(args, flag, None)
        if value is not None:
            data[flag] = value
    if args.out:
        data["out"] = args.out
    return data


# ── Subcommands ───────────────────────────────────────────────────────

def cmd_gen_env(args: argparse.Namespace) -> int:
    if args.chain:
        length, lure, goal = parse_chain(args.chain)
        spec = chain_environment(length, lure, goal)
    else:
        data = _read_json(args.generator, "generator") if args.generator else {}
        for flag in ("n_states", "feature_dim", "slate_size", "seed"):
            value = getattr(args, flag)
            if value is not None:
                data[flag] = value
        cfg = parse_generator_config(data)
        spec = generate_environment(cfg, np.random.default_rng(cfg.seed))
    path = save_environment(spec, args.out)
    print(f"Wrote environment N={spec.n_states}, d={spec.feature_dim}, l={spec.slate_size} to {path}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    data = experiment_data(args)
    data.setdefault("out", str(store.default_run_dir("train")))
    config = parse_experiment_config(data)
    metrics = Orchestrator(args.workers).run_experiment(config)
    last = metrics.aggregates[-1]
    print(
        f"Run {config.out}: step {last.step}, mean return {last.mean_return:.4f} "
        f"(std {last.std_return:.4f}, moving average {last.moving_avg:.4f})"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    data = experiment_data(args)
    data.setdefault("out", str(store.default_run_dir("eval")))
    config = parse_experiment_config(data)
    metrics = Orchestrator(args.workers).run_evaluation(args.checkpoint, config)
    for row in metrics.rows:
        print(f"seed {row.seed}: mean return {row.mean_return:.4f} over {row.episodes} episodes")
    agg = metrics.aggregates[-1]
    print(f"mean {agg.mean_return:.4f} (std {agg.std_return:.4f})")
    return 0


def cmd_certify(args: argparse.Namespace) -> int:
    spec = load_environment(args.env)
    report = Orchestrator().run_certification(
        spec, args.gamma, tolerance=args.tolerance, samples=args.samples,
        seed=args.seed, out=args.out,
    )
    print(report.to_text(), end="")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    spec = load_environment(args.env)
    text = Orchestrator().run_oracle(
        spec, args.gamma, fatal_failure=not args.raw, tolerance=args.tolerance, out=args.out,
    )
    print(text, end="")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    logger.info(f"Starting results service on {args.host}:{args.port} over {args.runs_dir}")
    asyncio.run(run_dashboard(args.host, args.port, args.runs_dir))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m app", description="Slate-MDP simulation and learning toolkit")
    parser.add_argument("--log-level", default=LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-env", help="generator config -> environment file")
    gen.add_argument("--generator", help="GeneratorConfig JSON file")
    gen.add_argument("--chain", help="LENGTH,LURE,GOAL for the risk-seeking chain instance")
    gen.add_argument("--n-states", type=int)
    gen.add_argument("--feature-dim", type=int)
    gen.add_argument("--slate-size", type=int)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen_env)

    def experiment_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="ExperimentConfig JSON file")
        p.add_argument("--env", help="environment file")
        p.add_argument("--slate-size", type=int)
        p.add_argument("--gamma", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--knn", help="'all', 'auto' or a positive integer")
        p.add_argument("--seeds", help="comma-separated seeds")
        p.add_argument("--eval-episodes", type=int)
        p.add_argument("--out")
        p.add_argument("--workers", type=int, default=MAX_CONCURRENT_REPLICAS)

    train = sub.add_parser("train", help="experiment config -> metrics CSV + checkpoints")
    experiment_flags(train)
    train.add_argument("--generator", help="GeneratorConfig JSON file (when --env is absent)")
    train.add_argument("--agent", choices=["topk", "full", "dpgknn", "random", "myopic"])
    train.add_argument("--train-steps", type=int)
    train.add_argument("--eval-every", type=int)
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="checkpoint + environment -> metrics")
    experiment_flags(ev)
    ev.add_argument("--checkpoint", required=True, help="run directory or agent checkpoint directory")
    ev.set_defaults(func=cmd_eval)

    cert = sub.add_parser("certify", help="environment -> oracle property report")
    cert.add_argument("--env", required=True)
    cert.add_argument("--gamma", type=float, default=0.9)
    cert.add_argument("--tolerance", type=float, default=CHECK_TOLERANCE)
    cert.add_argument("--samples", type=int, default=10_000)
    cert.add_argument("--seed", type=int, default=0)
    cert.add_argument("--out")
    cert.set_defaults(func=cmd_certify)

    orc = sub.add_parser("oracle", help="small environment -> exact Q dump")
    orc.add_argument("--env", required=True)
    orc.add_argument("--gamma", type=float, default=0.9)
    orc.add_argument("--tolerance", type=float, default=ORACLE_TOLERANCE)
    orc.add_argument("--raw", action="store_true", help="solve the raw environment, not its fatal-failure variant")
    orc.add_argument("--out")
    orc.set_defaults(func=cmd_oracle)

    serve = sub.add_parser("serve", help="results service over the run store")
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--port", type=int, default=PORT)
    serve.add_argument("--runs-dir", default=RUNS_DIR)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.func(args)
    except SlateMdpError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
