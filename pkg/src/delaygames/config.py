"""Line-oriented experiment configuration (``key = value``, ``#`` comments)."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .automata import LearningParams, SimConfig
from .game_core import GameError, MultiLevelGame, StateVector, builtin_game, load_game


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    game: str = "2"  # builtin id or path to a matrix file
    alpha: float = 0.02
    beta: float = 0.4
    theta: float = 0.1
    tau: float = 0.0
    initial: tuple[float, float, float, float] = (0.5, 0.5, 0.5, 0.5)
    horizon: int = 10000
    t_max: float = 5000.0
    h: float | None = None
    seed: int = 1
    ensemble_size: int = 1
    decimation: int = 1
    out: str | None = None
    unchecked: bool = False

    def __post_init__(self):
        try:
            self.params()
            StateVector.of(self.initial)
        except GameError as e:
            raise ConfigError(str(e)) from None
        if self.tau < 0:
            raise ConfigError("tau must be >= 0")
        if self.horizon < 0 or self.t_max < 0:
            raise ConfigError("horizon and t_max must be >= 0")
        if self.h is not None and self.h <= 0:
            raise ConfigError("h must be positive")
        if self.ensemble_size < 1 or self.decimation < 1:
            raise ConfigError("ensemble_size and decimation must be >= 1")

    def params(self) -> LearningParams:
        return LearningParams(self.alpha, self.beta, self.theta, unchecked=self.unchecked)

    def load_game(self) -> MultiLevelGame:
        try:
            if self.game.strip().isdigit():
                return builtin_game(int(self.game))
            return load_game(self.game)
        except (GameError, OSError) as e:
            raise ConfigError(f"cannot load game {self.game!r}: {e}") from None

    def sim_config(self) -> SimConfig:
        if self.tau != int(self.tau):
            raise ConfigError(f"the stochastic process needs an integer delay, got tau={self.tau}")
        try:
            return SimConfig(
                game=self.load_game(),
                params=self.params(),
                initial=StateVector.of(self.initial),
                tau=int(self.tau),
                horizon=self.horizon,
                seed=self.seed,
                ensemble_size=self.ensemble_size,
                decimation=self.decimation,
            )
        except GameError as e:
            raise ConfigError(str(e)) from None

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "initial":
                v = ",".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _convert(key: str, raw: str):
    raw = raw.strip()
    try:
        if key == "game":
            if not raw:
                raise ValueError("empty game")
            return raw
        if key in ("out",):
            return raw or None
        if key == "h":
            return None if raw.lower() in ("", "auto", "none") else float(raw)
        if key == "initial":
            vals = tuple(float(x) for x in raw.replace(" ", "").split(","))
            if len(vals) != 4:
                raise ValueError("initial needs 4 comma-separated values")
            return vals
        if key in ("horizon", "seed", "ensemble_size", "decimation"):
            return int(raw)
        if key == "unchecked":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return float(raw)
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {e}") from None


_KEYS = {f.name for f in fields(ExperimentConfig)}


def parse_assignments(pairs, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply ``(key, value)`` string pairs on top of ``base`` (or the defaults)."""
    changes = {}
    for key, raw in pairs:
        key = key.strip()
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        changes[key] = _convert(key, raw)
    return (base or ExperimentConfig()).replace(**changes)


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        pairs.append((key, value))
    return parse_assignments(pairs, base)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    return parse_config(text)


def config_from_header(text: str) -> ExperimentConfig:
    """Recover the config echoed as ``#`` comment lines at the top of a CSV."""
    lines = []
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        lines.append(line[1:].strip())
    return parse_config("\n".join(lines))
