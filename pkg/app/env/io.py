"""Environment file format: one self-describing JSON document per spec."""

import hashlib
import json
import logging
from pathlib import Path

from app.config import ENV_FILE_VERSION
from app.env.spec import EnvironmentSpec
from app.errors import ConfigError

logger = logging.getLogger(__name__)


def to_document(spec: EnvironmentSpec) -> dict:
    """Plain-JSON mapping of every spec field; floats keep full precision."""
    return {
        "version": ENV_FILE_VERSION,
        "n_states": spec.n_states,
        "feature_dim": spec.feature_dim,
        "slate_size": spec.slate_size,
        "fail_weight": spec.fail_weight,
        "p_end_fail": spec.p_end_fail,
        "p_end_exec": spec.p_end_exec,
        "discount": spec.discount,
        "execution_model": spec.execution_model,
        "start_state": spec.start_state,
        "rewards": [float(r) for r in spec.rewards],
        "features": [[float(x) for x in row] for row in spec.features],
        "edges": [[[a, w] for a, w in row] for row in spec.edges],
    }


def from_document(doc: dict) -> EnvironmentSpec:
    version = doc.get("version")
    if version != ENV_FILE_VERSION:
        raise ConfigError(f"unsupported environment file version {version!r}", field="version")
    try:
        return EnvironmentSpec(
            n_states=int(doc["n_states"]),
            feature_dim=int(doc["feature_dim"]),
            features=doc["features"],
            rewards=doc["rewards"],
            edges=tuple(tuple((int(a), float(w)) for a, w in row) for row in doc["edges"]),
            slate_size=int(doc["slate_size"]),
            fail_weight=float(doc["fail_weight"]),
            p_end_fail=float(doc["p_end_fail"]),
            p_end_exec=float(doc["p_end_exec"]),
            discount=doc.get("discount", "divide"),
            execution_model=doc.get("execution_model", "weighted"),
            start_state=doc.get("start_state"),
        )
    except KeyError as e:
        raise ConfigError("missing field in environment file", field=str(e.args[0])) from e


def content_hash(spec: EnvironmentSpec) -> str:
    """sha256 over the canonical document; stable across save/load."""
    canonical = json.dumps(to_document(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_environment(spec: EnvironmentSpec, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_document(spec)), encoding="utf-8")
    logger.info(f"Saved environment N={spec.n_states} to {path}")
    return path


def load_environment(path: str | Path) -> EnvironmentSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}", field="env")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"not valid JSON: {e}", field="env") from e
    spec = from_document(doc)
    logger.info(f"Loaded environment N={spec.n_states}, d={spec.feature_dim} from {path}")
    return spec
