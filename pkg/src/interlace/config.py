"""Numerical tolerances and budgets, with optional JSON/YAML config overrides."""

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

CONFIG_ENV = "INTERLACE_CONFIG"


@dataclass(frozen=True)
class Tolerances:
    hermitian_tol: float = 1e-10
    psd_clamp_tol: float = 1e-8
    root_tol: float = 1e-7
    interlace_tol: float = 1e-8
    sign_tol: float = 1e-10
    fd_tol: float = 1e-5
    stab_tol: float = 1e-6
    bound_tol: float = 1e-9
    cross_check_tol: float = 1e-8
    # budgets
    interp_budget: int = 10**6
    subset_budget: int = 4096
    expansion_budget: int = 10**5
    enum_budget: int = 10**7

    def replace(self, **overrides):
        known = {f.name for f in dataclasses.fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        return dataclasses.replace(self, **overrides)

    def to_dict(self):
        return dataclasses.asdict(self)


DEFAULT = Tolerances()


def load_config(path=None):
    """Read a tolerance-override file.

    ``path`` falls back to ``$INTERLACE_CONFIG``; with neither set an empty
    dict is returned. JSON is tried first, then YAML.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        import yaml

        data = yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError("config file must hold a mapping")
    return data.get("tolerances", data)
