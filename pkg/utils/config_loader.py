"""
utils/config_loader.py

Loads config.yaml and deep-merges it over the built-in defaults.
Precedence (highest first): CLI flag, --config file, DEFAULTS.
"""

import copy
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from utils.exceptions import UsageError

DEFAULT_PATH = Path(__file__).resolve().parent.parent / "config.yaml"

DEFAULTS: Dict[str, Any] = {
    "phi": 1.0,
    "tail": "auto",
    "procedure": "bonferroni",
    "seed": 0,
    "reps": 0,
    "solver": {
        "tol": 1e-12,
        "max_iter": 200,
    },
    "study": {
        "n_prior": None,
        "n_current": None,
    },
    "simulate": {
        "n_tests": 1000,
        "q": 0.01,
        "phis": [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0],
        "betas": [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
        "thresholds": [0.0, -0.5, -1.0, -1.5, -2.0, -3.0, -4.0],
        "pi1_grid": [0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1],
        "small_mean": -0.001,
        "large_mean": -2.0,
        "sigma": 1.0,
    },
    "sparse_power": {
        "q": 0.001,
        "m_min": -4.0,
        "m_max": -0.05,
        "m_steps": 50,
        "pi1_min": 0.01,
        "pi1_max": 0.5,
        "pi1_steps": 50,
    },
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """Return DEFAULTS merged with the YAML file at `path`.

    With no path the repository's config.yaml is used when present. An
    explicitly given path must exist.
    """
    if path is None:
        cfg_path = DEFAULT_PATH
        if not cfg_path.exists():
            return copy.deepcopy(DEFAULTS)
    else:
        cfg_path = Path(path)
        if not cfg_path.exists():
            raise UsageError(f"config file not found: {cfg_path}")

    with open(cfg_path, "r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise UsageError(f"cannot parse {cfg_path}: {exc}") from exc

    if data is None:
        return copy.deepcopy(DEFAULTS)
    if not isinstance(data, dict):
        raise UsageError(f"{cfg_path} must contain a mapping at top level")
    return _merge(DEFAULTS, data)
