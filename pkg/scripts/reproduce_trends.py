#!/usr/bin/env python3
"""Run the three headline comparisons, print a summary table and a PASS/FAIL line per trend.

    1. full-slate vs simple top-K agents at slate sizes 10, 5 and 1
    2. DPG+kNN with k = all, 10% and 1 candidates per slot
    3. risk-seeking exponents alpha in {0.5, 1, 2, 4} on the lure/goal chain

Exits 1 when any trend check fails.

Usage:
    # Run from the repository root:
    python scripts/reproduce_trends.py

    # Fewer steps for a quick look, results under another directory:
    python scripts/reproduce_trends.py --train-steps 20000 --out runs/trends-quick
"""

import argparse
import sys
from pathlib import Path

# Add parent to path so we can import app modules
sys.path.insert(0, str(Path(__file__).parent.parent))

# Load .env if present
try:
    from dotenv import load_dotenv
    load_dotenv(Path(__file__).parent.parent / ".env")
except ImportError:
    pass

from app.env.generator import chain_environment
from app.env.io import save_environment
from app.main import setup_logging
from app.worker.experiment import parse_experiment_config
from app.worker.orchestrator import run_experiment
from app.worker.trends import (
    evaluate_trends, full_vs_top_k, neighbour_counts, risk_exponents, summarize,
)

GENERATOR = {"n_states": 200, "feature_dim": 16, "slate_size": 10, "seed": 0}
SEEDS = [0, 1, 2, 3, 4, 5]


def main():
    parser = argparse.ArgumentParser(description="Reproduce the agent comparison trends")
    parser.add_argument("--train-steps", type=int, default=50_000)
    parser.add_argument("--eval-every", type=int, default=5_000)
    parser.add_argument("--eval-episodes", type=int, default=100)
    parser.add_argument("--workers", type=int, default=6)
    parser.add_argument("--out", default="runs/trends")
    parser.add_argument("--log-level", default="WARNING")
    args = parser.parse_args()

    setup_logging(args.log_level)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = {
        "generator": GENERATOR,
        "train_steps": args.train_steps,
        "eval_every": args.eval_every,
        "eval_episodes": args.eval_episodes,
        "seeds": SEEDS,
        "save_checkpoints": False,
    }

    print("Full slate vs top-K")
    runs = full_vs_top_k(base, out, args.workers)
    print("DPG+kNN neighbour counts")
    runs |= neighbour_counts(base, out, args.workers)
    print("Risk-seeking exponents on the chain")
    chain_path = save_environment(chain_environment(5, 1.0, 100.0), out / "chain.json")
    chain_base = {**base, "env_path": str(chain_path)}
    runs |= risk_exponents(chain_base, out, args.workers)
    myopic = parse_experiment_config(
        {**chain_base, "agent": {"agent_kind": "myopic"}, "out": str(out / "chain-myopic")}
    )
    runs["chain-myopic"] = summarize("chain-myopic", run_experiment(myopic, workers=args.workers))

    print()
    print(f"{'run':<24} {'final return':>14} {'seed std':>10}")
    print("-" * 50)
    for name, run in runs.items():
        print(f"{name:<24} {run.final:14.4f} {run.seed_std:10.4f}")

    checks = evaluate_trends(runs)
    print()
    for check in checks:
        print(check.line())
    print(f"\nMetrics written under {out}/")
    if not all(check.passed for check in checks):
        sys.exit(1)


if __name__ == "__main__":
    main()
