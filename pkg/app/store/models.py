"""Data models for the run store."""

from dataclasses import asdict, dataclass, field


@dataclass
class RunRecord:
    """One experiment, evaluation or certification run; serialized as manifest.json."""
    id: str
    kind: str = "train"
    status: str = "queued"
    config: dict = field(default_factory=dict)
    seeds: list[int] = field(default_factory=list)
    env_hash: str = ""
    final_return: float | None = None
    error: str = ""
    created_at: str | None = None
    started_at: str | None = None
    completed_at: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)
