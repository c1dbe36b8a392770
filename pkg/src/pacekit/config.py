"""Experiment configuration: defaults, flat dotted-key config files, and
CLI overrides.

Config files are plain text, one ``section.key = value`` assignment per
line, values in Python literal syntax; ``#`` starts a comment. CLI flags
win over file values.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .auction import CampaignConfig, MarketParams


class ConfigError(Exception):
    """Invalid configuration key or value."""


DEFAULT_SWEEP_BIDS = (0.0001, 0.001, 0.01, 0.05, 0.1, 0.5, 1.0)
DEFAULT_ALGOS = ("mpc", "pid", "dogd", "optimal")


@dataclass(frozen=True)
class TuningConfig:
    """Hyperparameter grids searched on the tuning seed block."""

    episodes: int = 20
    pid_kp_grid: tuple = (0.5, 1.0, 2.0)
    pid_ki_grid: tuple = (0.0, 0.05, 0.2)
    pid_kd_grid: tuple = (0.0, 0.1, 0.3)
    dogd_eps_grid: tuple = (50.0, 100.0, 200.0, 400.0, 800.0)
    oracle_grid: Optional[tuple] = None  # None -> default log grid

    def __post_init__(self):
        if self.episodes < 1:
            raise ConfigError("tuning.episodes must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    market: MarketParams = field(default_factory=MarketParams)
    campaign: CampaignConfig = field(default_factory=CampaignConfig)
    tuning: TuningConfig = field(default_factory=TuningConfig)
    algos: tuple = DEFAULT_ALGOS
    episodes: int = 100
    seed: int = 42
    sweep_bids: tuple = DEFAULT_SWEEP_BIDS
    out_dir: Optional[str] = None  # CLI --out wins when both are given

    def __post_init__(self):
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if not self.algos:
            raise ConfigError("algorithm list must be nonempty")
        if not self.sweep_bids or any(b <= 0 for b in self.sweep_bids):
            raise ConfigError("sweep bids must be positive")


# Dotted config key -> (dataclass section attribute on ExperimentConfig,
# field name). Top-level keys use section None.
_KEY_MAP = {
    "market.mu_r": ("market", "mu_r"),
    "market.sigma_r": ("market", "sigma_r"),
    "market.mu_c": ("market", "mu_c"),
    "market.sigma_c": ("market", "sigma_c"),
    "market.total_opportunities": ("market", "total_opportunities"),
    "market.cycle_size": ("market", "cycle_size"),
    "market.request_noise": ("market", "request_noise"),
    "campaign.budget": ("campaign", "budget"),
    "campaign.cost_cap": ("campaign", "cost_cap"),
    "campaign.initial_bid": ("campaign", "initial_bid"),
    "campaign.window_n": ("campaign", "window_n"),
    "campaign.grid_max": ("campaign", "grid_max"),
    "campaign.grid_step": ("campaign", "grid_step"),
    "campaign.jitter": ("campaign", "jitter"),
    "campaign.bernoulli_conversions": ("campaign", "bernoulli_conversions"),
    "tuning.episodes": ("tuning", "episodes"),
    "tuning.pid_kp_grid": ("tuning", "pid_kp_grid"),
    "tuning.pid_ki_grid": ("tuning", "pid_ki_grid"),
    "tuning.pid_kd_grid": ("tuning", "pid_kd_grid"),
    "tuning.dogd_eps_grid": ("tuning", "dogd_eps_grid"),
    "tuning.oracle_grid": ("tuning", "oracle_grid"),
    "algos": (None, "algos"),
    "episodes": (None, "episodes"),
    "seed": (None, "seed"),
    "sweep.initial_bids": (None, "sweep_bids"),
    "out_dir": (None, "out_dir"),
}


def _parse_value(raw: str):
    raw = raw.strip()
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw  # bare string, e.g. an algorithm name


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into a {dotted key: value} mapping."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _KEY_MAP:
            raise ConfigError(f"unknown config key: {key!r}")
        values[key] = _parse_value(raw)
    return values


def build_config(overrides: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from {dotted key: value} overrides."""
    sections = {"market": {}, "campaign": {}, "tuning": {}, None: {}}
    for key, value in overrides.items():
        if key not in _KEY_MAP:
            raise ConfigError(f"unknown config key: {key!r}")
        section, attr = _KEY_MAP[key]
        if isinstance(value, list):
            value = tuple(value)
        if key == "algos" and isinstance(value, str):
            value = tuple(a.strip() for a in value.split(",") if a.strip())
        sections[section][attr] = value
    try:
        market = MarketParams(**sections["market"])
        campaign = CampaignConfig(**sections["campaign"])
        tuning = TuningConfig(**sections["tuning"])
        return ExperimentConfig(
            market=market, campaign=campaign, tuning=tuning, **sections[None]
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(
    path: Optional[Path] = None,
    cli_overrides: Optional[dict] = None,
) -> ExperimentConfig:
    """Load a config file (optional) and apply CLI overrides on top."""
    values: dict = {}
    if path is not None:
        text = Path(path).read_text()
        values.update(parse_config_text(text))
    if cli_overrides:
        for key, value in cli_overrides.items():
            if value is not None:
                values[key] = value
    return build_config(values)


def config_with(config: ExperimentConfig, **kwargs) -> ExperimentConfig:
    """Functional update helper (e.g. a new campaign for a sweep point)."""
    return replace(config, **kwargs)
