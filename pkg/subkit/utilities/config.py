"""Caps, seeds and file loading for subkit.

Effective settings are layered: module defaults, then environment
variables, then explicit overrides (CLI flags). Later layers win.
"""

import json
import logging
import os
from dataclasses import dataclass, replace

from subkit.utilities.errors import ConfigError, InputError

logger = logging.getLogger(__name__)

# ============================================================
# DEFAULT CAPS
# ============================================================
MAX_IRREDUCIBLES = 6          # join-irreducibles per lattice (lattice <= 2^6 elements)
DEPTH_LIMIT = 8               # quantifier depth below the universal closure
SAMPLE_COUNT = 200            # sampled models in the default corpus
DEFAULT_SEED = 0xDE0417C      # RNG seed for sampled corpora
EXHAUSTIVE_MAX_ELEMENTS = 4   # exhaustive relation enumeration needs |A| <= 4
GRID_LIMIT = 1 << 20          # largest assignment grid or table evaluated at once
ROLE_VARIABLE_LIMIT = 10      # variables considered by Kracht role inference

ENV_MAX_ELEMS = "SUBKIT_MAX_ELEMS"
ENV_DEPTH_LIMIT = "SUBKIT_DEPTH_LIMIT"
ENV_SEED = "SUBKIT_SEED"

CORPUS_PROFILES = ("default", "quick")


@dataclass(frozen=True)
class Settings:
    max_irreducibles: int = MAX_IRREDUCIBLES
    depth_limit: int = DEPTH_LIMIT
    sample_count: int = SAMPLE_COUNT
    seed: int = DEFAULT_SEED
    grid_limit: int = GRID_LIMIT
    corpus: str = "default"
    workers: int = 4


def _positive_int(name, raw):
    try:
        value = int(str(raw), 0)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    if value <= 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def load_settings(env=None, **overrides):
    """Build the effective Settings.

    Args:
        env: mapping used instead of os.environ (tests pass a dict)
        **overrides: explicit values; None means "not given"

    Returns:
        Settings with flags > environment > defaults.
    """
    env = os.environ if env is None else env
    settings = Settings()

    from_env = {}
    if env.get(ENV_MAX_ELEMS):
        from_env["max_irreducibles"] = _positive_int(ENV_MAX_ELEMS, env[ENV_MAX_ELEMS])
    if env.get(ENV_DEPTH_LIMIT):
        from_env["depth_limit"] = _positive_int(ENV_DEPTH_LIMIT, env[ENV_DEPTH_LIMIT])
    if env.get(ENV_SEED):
        from_env["seed"] = _positive_int(ENV_SEED, env[ENV_SEED])
    settings = replace(settings, **from_env)

    given = {k: v for k, v in overrides.items() if v is not None}
    for key in ("max_irreducibles", "depth_limit", "sample_count", "grid_limit", "workers"):
        if key in given:
            given[key] = _positive_int(key, given[key])
    if "seed" in given:
        given["seed"] = int(given["seed"])
        if given["seed"] < 0:
            raise ConfigError(f"seed must be non-negative, got {given['seed']}")
    if "corpus" in given and given["corpus"] not in CORPUS_PROFILES:
        raise ConfigError(f"unknown corpus profile {given['corpus']!r}")
    settings = replace(settings, **given)

    logger.debug("effective settings: %s", settings)
    return settings


def load_json(path):
    """Read a JSON document, turning I/O and decode failures into InputError."""
    if not os.path.exists(path):
        raise InputError(f"File not found: {path}")
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise InputError(f"Invalid JSON in {path}: {e}")


def data_path(*parts):
    """Absolute path of a file shipped under subkit/data."""
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    return os.path.join(here, "data", *parts)
