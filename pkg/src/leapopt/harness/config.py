"""Experiment configuration: flat `key = value` files with dotted namespaces.

Values are JSON-parsed (numbers, booleans, lists, quoted strings); anything
that fails to parse is kept as a bare string.  Recognized namespaces:

  problem.name       registry name; other problem.* keys go to the builder
  optimizer.name     registry name; other optimizer.* keys are its options
  run.budget         evaluation budget per seed
  run.seeds          int N (seeds 0..N-1), "a:b" range, or JSON list
  run.out            output directory

Optimizer option groups may be written nested (optimizer.cma.population_size,
optimizer.descent.learning_rate, optimizer.acquisition.beta); the group
prefixes are dropped before the options reach the optimizer registry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

__all__ = ["ConfigError", "ExperimentConfig", "load_config_file", "parse_seeds"]

# Nested spellings accepted for optimizer options, mapped to registry keys.
_OPTION_ALIASES = {
    "cma.population_size": "population_size",
    "cma.parent_count": "parent_count",
    "cma.sigma0": "sigma0",
    "descent.learning_rate": "learning_rate",
    "descent.max_steps": "max_steps",
    "descent.stagnation_window": "stagnation_window",
    "descent.stagnation_tolerance": "stagnation_tolerance",
    "descent.clip_norm": "clip_norm",
    "acquisition.beta": "beta",
    "acquisition.candidate_count": "candidate_count",
}

_NAMESPACES = ("problem", "optimizer", "run")


class ConfigError(ValueError):
    """Malformed configuration file or invalid experiment settings."""


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config_file(path) -> dict:
    """Parse one config file into a flat {dotted key: value} mapping."""
    mapping = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            if key in mapping:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            mapping[key] = _parse_value(value.strip())
    return mapping


def parse_seeds(value) -> list:
    """Seeds from an int count, an 'a:b' range string, or a list of ints."""
    if isinstance(value, bool):
        raise ConfigError("seeds must be an int, 'a:b' range, or list of ints")
    if isinstance(value, int):
        seeds = list(range(value))
    elif isinstance(value, str):
        parts = value.split(":")
        if len(parts) == 2:
            try:
                seeds = list(range(int(parts[0]), int(parts[1])))
            except ValueError:
                raise ConfigError(f"bad seed range {value!r}") from None
        else:
            try:
                seeds = [int(p) for p in value.split(",")]
            except ValueError:
                raise ConfigError(f"bad seed list {value!r}") from None
    elif isinstance(value, list):
        try:
            seeds = [int(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError("seed list must contain integers") from None
    else:
        raise ConfigError("seeds must be an int, 'a:b' range, or list of ints")
    if not seeds:
        raise ConfigError("seeds must be non-empty")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct")
    return seeds


@dataclass
class ExperimentConfig:
    """One optimizer on one problem over a list of seeds."""

    problem: str
    optimizer: str
    budget: int
    seeds: list
    out: str = "results"
    problem_options: dict = field(default_factory=dict)
    optimizer_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.budget < 1:
            raise ConfigError("run.budget must be a positive integer")
        if not self.seeds:
            raise ConfigError("run.seeds must be non-empty")

    @staticmethod
    def from_mapping(mapping: dict) -> "ExperimentConfig":
        mapping = dict(mapping)
        problem_options = {}
        optimizer_options = {}
        problem = optimizer = None
        budget = seeds = None
        out = "results"
        for key, value in mapping.items():
            head, _, rest = key.partition(".")
            if head not in _NAMESPACES or not rest:
                raise ConfigError(f"unknown config key {key!r}")
            if head == "problem":
                if rest == "name":
                    problem = str(value)
                else:
                    problem_options[rest] = value
            elif head == "optimizer":
                if rest == "name":
                    optimizer = str(value)
                else:
                    optimizer_options[_OPTION_ALIASES.get(rest, rest)] = value
            else:
                if rest == "budget":
                    budget = int(value)
                elif rest == "seeds":
                    seeds = parse_seeds(value)
                elif rest == "out":
                    out = str(value)
                else:
                    raise ConfigError(f"unknown config key {key!r}")
        if problem is None:
            raise ConfigError("missing required key problem.name")
        if optimizer is None:
            raise ConfigError("missing required key optimizer.name")
        if budget is None:
            raise ConfigError("missing required key run.budget")
        if seeds is None:
            raise ConfigError("missing required key run.seeds")
        return ExperimentConfig(
            problem=problem,
            optimizer=optimizer,
            budget=budget,
            seeds=seeds,
            out=out,
            problem_options=problem_options,
            optimizer_options=optimizer_options,
        )
