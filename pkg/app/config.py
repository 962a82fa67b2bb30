"""Environment-driven configuration for the slate-MDP toolkit."""

import os

from dotenv import load_dotenv

load_dotenv()

# === Logging ===
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO")

# === Results service ===
DASHBOARD_API_KEY = os.environ.get("DASHBOARD_API_KEY", "changeme")
PORT = int(os.environ.get("PORT", "8080"))

# === Run store ===
RUNS_DIR = os.environ.get("RUNS_DIR", "runs")

# === Worker ===
MAX_CONCURRENT_REPLICAS = int(os.environ.get("MAX_CONCURRENT_REPLICAS", "1"))
SHOW_PROGRESS = os.environ.get("SHOW_PROGRESS", "1") not in ("0", "false", "no")

# === Environment template ===
MAX_OUT_DEGREE = 60
W_FAIL = float(os.environ.get("W_FAIL", "0.5"))
P_END_FAIL = float(os.environ.get("P_END_FAIL", "0.2"))
P_END_EXEC = float(os.environ.get("P_END_EXEC", "0.1"))
ENV_FILE_VERSION = 1

# === Generator (desk scale) ===
GEN_N_STATES = int(os.environ.get("GEN_N_STATES", "200"))
GEN_FEATURE_DIM = int(os.environ.get("GEN_FEATURE_DIM", "16"))
GEN_SLATE_SIZE = int(os.environ.get("GEN_SLATE_SIZE", "10"))

# === Learning ===
ETA = float(os.environ.get("ETA", "1e-3"))
TAU = float(os.environ.get("TAU", "1e-4"))
GAMMA = float(os.environ.get("GAMMA", "0.99"))
EPSILON = float(os.environ.get("EPSILON", "0.1"))
BATCH_SIZE = int(os.environ.get("BATCH_SIZE", "32"))
BUFFER_CAPACITY = int(os.environ.get("BUFFER_CAPACITY", "100000"))
KNN_FRACTION = 0.1
Q_HIDDEN = (100, 100)
POLICY_HIDDEN = (25, 25)
ACTIVATION = os.environ.get("ACTIVATION", "relu")
CHECKPOINT_VERSION = 1

# === Evaluation protocol ===
TRAIN_STEPS = int(os.environ.get("TRAIN_STEPS", "200000"))
EVAL_EVERY = int(os.environ.get("EVAL_EVERY", "10000"))
EVAL_EPISODES = int(os.environ.get("EVAL_EPISODES", "1000"))
DEFAULT_SEEDS = [0, 1, 2, 3, 4, 5]
WINDOW = int(os.environ.get("WINDOW", "100"))
MAX_EPISODE_STEPS = int(os.environ.get("MAX_EPISODE_STEPS", "1000"))

# === Oracle ===
ORACLE_MAX_PAIRS = int(os.environ.get("ORACLE_MAX_PAIRS", "1000000"))
ORACLE_TOLERANCE = float(os.environ.get("ORACLE_TOLERANCE", "1e-10"))
ORACLE_MAX_SWEEPS = int(os.environ.get("ORACLE_MAX_SWEEPS", "100000"))

# === Metrics CSV ===
METRICS_FIELDS = ["step", "seed", "mean_return", "std_return", "moving_avg"]
