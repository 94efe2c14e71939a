"""Experiment configuration: corpus entries, QP ladder, objectives, profile."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .energy_model import SpecificEnergyProfile, default_profile
from .errors import ConfigError

PROFILE_ENV_VAR = "DERD_PROFILE"

DEFAULT_QP_LADDER = (15, 25, 35, 45)
FULL_QP_LADDER = tuple(range(15, 46, 5))
DEFAULT_OBJECTIVES = ("rdo", "dedo", "derdo")


@dataclass(frozen=True)
class CorpusEntry:
    path: str
    width: int
    height: int
    frames: int = 1
    fps: float = 30.0
    label: str = ""

    def __post_init__(self):
        if not Path(self.path).exists():
            raise ConfigError(f"corpus entry {self.label or self.path}: "
                              f"file not found: {self.path}")
        if self.width % 8 or self.height % 8 or self.width <= 0 or self.height <= 0:
            raise ConfigError(f"{self.label}: dimensions must be multiples of 8")
        if self.frames <= 0:
            raise ConfigError(f"{self.label}: frame count must be positive")
        if self.fps <= 0:
            raise ConfigError(f"{self.label}: frame rate must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    corpus: tuple
    qp_ladder: tuple = DEFAULT_QP_LADDER
    objectives: tuple = DEFAULT_OBJECTIVES
    profile_path: str | None = None
    out_dir: str = "results"
    lambda_e_grid: tuple | None = None
    seed: int = 1
    jobs: int = 1

    def __post_init__(self):
        if not self.corpus:
            raise ConfigError("empty corpus")
        labels = [e.label for e in self.corpus]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"corpus labels must be unique, got {labels}")
        for qp in self.qp_ladder:
            if not 0 <= qp <= 51:
                raise ConfigError(f"QP {qp} out of range [0, 51]")
        for obj in self.objectives:
            if obj not in DEFAULT_OBJECTIVES:
                raise ConfigError(f"unknown objective {obj!r}")

    def load_profile(self) -> SpecificEnergyProfile:
        return resolve_profile(self.profile_path)


def resolve_profile(path: str | None) -> SpecificEnergyProfile:
    """Explicit path, else $DERD_PROFILE, else the bundled synthetic profile."""
    if path is None:
        path = os.environ.get(PROFILE_ENV_VAR) or None
    if path is None:
        return default_profile()
    if not Path(path).exists():
        raise ConfigError(f"profile file not found: {path}")
    return SpecificEnergyProfile.load(path)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    allowed = {"corpus", "qp_ladder", "objectives", "profile", "out_dir",
               "lambda_e_grid", "seed", "jobs"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    if overrides:
        raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    entries = []
    for e in raw.get("corpus", []):
        entries.append(CorpusEntry(
            path=e["path"], width=int(e["width"]), height=int(e["height"]),
            frames=int(e.get("frames", 1)), fps=float(e.get("fps", 30.0)),
            label=e.get("label") or Path(e["path"]).stem,
        ))
    grid = raw.get("lambda_e_grid")
    return ExperimentConfig(
        corpus=tuple(entries),
        qp_ladder=tuple(raw.get("qp_ladder") or DEFAULT_QP_LADDER),
        objectives=tuple(raw.get("objectives") or DEFAULT_OBJECTIVES),
        profile_path=raw.get("profile"),
        out_dir=raw.get("out_dir") or "results",
        lambda_e_grid=tuple(grid) if grid else None,
        seed=int(raw.get("seed", 1)),
        jobs=int(raw.get("jobs", 1)),
    )
