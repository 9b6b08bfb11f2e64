"""Engine configuration file (JSON)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .experience import ConfigError, ExperienceParams
from .ledger import DEFAULT_DECAY_EPOCH
from .reputation import ReputationParams, SolverError

CONFIG_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EngineConfig:
    experience: ExperienceParams = field(default_factory=ExperienceParams)
    reputation: ReputationParams = field(default_factory=ReputationParams)
    theta: float = 0.5
    decay_epoch: int = DEFAULT_DECAY_EPOCH
    paths: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ConfigError(f"theta must lie in (0, 1), got {self.theta}")
        if isinstance(self.decay_epoch, bool) or not isinstance(self.decay_epoch, int) \
                or self.decay_epoch < 1:
            raise ConfigError(f"decay_epoch must be a positive integer, got {self.decay_epoch!r}")

    @property
    def weights(self) -> tuple[float, float]:
        return self.reputation.w1, self.reputation.w2

    def to_dict(self) -> dict:
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "experience": asdict(self.experience),
            "reputation": asdict(self.reputation),
            "theta": self.theta,
            "decay_epoch": self.decay_epoch,
            "paths": dict(self.paths),
        }

    @classmethod
    def from_dict(cls, data: dict) -> EngineConfig:
        data = dict(data)
        version = data.pop("schema_version", None)
        if version != CONFIG_SCHEMA_VERSION:
            raise ConfigError(f"config schema_version must be {CONFIG_SCHEMA_VERSION}, "
                              f"got {version!r}")
        allowed = {"experience", "reputation", "theta", "decay_epoch", "paths"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        kwargs = {}
        if "experience" in data:
            kwargs["experience"] = _build(ExperienceParams, data["experience"], "experience")
        if "reputation" in data:
            kwargs["reputation"] = _build(ReputationParams, data["reputation"], "reputation")
        for key in ("theta", "decay_epoch", "paths"):
            if key in data:
                kwargs[key] = data[key]
        return cls(**kwargs)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> EngineConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def override(self, **flags) -> EngineConfig:
        """Return a copy with non-None flag values applied on top."""
        exp_keys = {f.name for f in fields(ExperienceParams)}
        rep_keys = {f.name for f in fields(ReputationParams)}
        exp_kw = {k: v for k, v in flags.items() if k in exp_keys and v is not None}
        rep_kw = {k: v for k, v in flags.items() if k in rep_keys and v is not None}
        top = {k: v for k, v in flags.items()
               if k in ("theta", "decay_epoch") and v is not None}
        unknown = set(flags) - exp_keys - rep_keys - {"theta", "decay_epoch"}
        if unknown:
            raise ConfigError(f"unknown override(s): {', '.join(sorted(unknown))}")
        if "w1" in rep_kw and "w2" not in rep_kw:
            rep_kw["w2"] = 1.0 - rep_kw["w1"]
        return replace(self, experience=replace(self.experience, **exp_kw),
                       reputation=replace(self.reputation, **rep_kw), **top)


def _build(cls, data, section: str):
    if not isinstance(data, dict):
        raise ConfigError(f"config section {section!r} must be an object")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in {section!r}: {', '.join(sorted(unknown))}")
    try:
        return cls(**data)
    except SolverError as exc:
        raise ConfigError(str(exc)) from None
