"""YAML benchmark configuration.

Layout (every section and key optional except ``scenario.kind`` and ``scenario.n``)::

    scenario:  {kind: hd_linear, n: 300, p: 100}
    replications: 2
    base_seed: 0
    jobs: 1
    search:    {delta_m: 30, K: null, gamma: null, M: 100, decay_a: 0.7071}
    methods:   {algorithms: [sn], oracles: [direct, "reliever:0.9"]}
    lambda:    {values: null, count: 30, lo: 1.0, hi: 5.0}
    nmcd:      {grid_points: null}

Unknown keys and wrongly typed values raise :class:`ConfigError` naming the
offending path, e.g. ``search.delta_m``.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .metrics import BenchConfig

__all__ = ["ConfigError", "config_from_dict", "config_to_dict", "load_config", "dump_config"]


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_INT = (int,)
_NUM = (int, float)

# (section, key) -> (BenchConfig field, accepted types, nullable)
_SCHEMA: dict[str | None, dict[str, tuple[str, tuple, bool]]] = {
    None: {
        "replications": ("replications", _INT, False),
        "base_seed": ("base_seed", _INT, False),
        "jobs": ("jobs", _INT, False),
    },
    "scenario": {
        "kind": ("scenario", (str,), False),
        "n": ("n", _INT, False),
        "p": ("p", _INT, True),
    },
    "search": {
        "delta_m": ("delta_m", _INT, False),
        "K": ("K", _INT, True),
        "gamma": ("gamma", _NUM, True),
        "M": ("M", _INT, False),
        "decay_a": ("decay_a", _NUM, False),
    },
    "methods": {
        "algorithms": ("algorithms", (list,), False),
        "oracles": ("oracles", (list,), False),
    },
    "lambda": {
        "values": ("lambdas", (list,), True),
        "count": ("lambda_count", _INT, False),
        "lo": ("lambda_lo", _NUM, False),
        "hi": ("lambda_hi", _NUM, False),
    },
    "nmcd": {"grid_points": ("grid_points", _INT, True)},
}

_LIST_ITEM = {"algorithms": (str,), "oracles": (str,), "lambdas": _NUM}


def _check(path, value, types, nullable):
    if value is None:
        if not nullable:
            raise ConfigError(path, "must not be null")
        return
    if isinstance(value, bool) or not isinstance(value, types):
        names = "/".join(t.__name__ for t in types)
        raise ConfigError(path, f"expected {names}, got {type(value).__name__}")


def config_from_dict(doc: dict) -> BenchConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a mapping")
    kwargs = {}
    for key, value in doc.items():
        if key in _SCHEMA and key is not None:
            if not isinstance(value, dict):
                raise ConfigError(key, "expected a mapping")
            for sub, subval in value.items():
                path = f"{key}.{sub}"
                if sub not in _SCHEMA[key]:
                    raise ConfigError(path, "unknown key")
                field, types, nullable = _SCHEMA[key][sub]
                _check(path, subval, types, nullable)
                if isinstance(subval, list):
                    for i, item in enumerate(subval):
                        _check(f"{path}[{i}]", item, _LIST_ITEM[field], False)
                kwargs[field] = subval
        elif key in _SCHEMA[None]:
            field, types, nullable = _SCHEMA[None][key]
            _check(key, value, types, nullable)
            kwargs[field] = value
        else:
            raise ConfigError(str(key), "unknown key")
    for required in ("scenario", "n"):
        if required not in kwargs:
            name = "kind" if required == "scenario" else required
            raise ConfigError(f"scenario.{name}", "required")
    if kwargs.get("lambdas") is not None:
        kwargs["lambdas"] = [float(v) for v in kwargs["lambdas"]]
    try:
        return BenchConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError("methods", str(exc)) from exc


def config_to_dict(cfg: BenchConfig) -> dict:
    doc: dict = {}
    for section, keys in _SCHEMA.items():
        values = {}
        for key, (field, _, _) in keys.items():
            v = getattr(cfg, field)
            values[key] = list(v) if isinstance(v, (list, tuple)) else v
        if section is None:
            doc.update(values)
        else:
            doc[section] = values
    return doc


def load_config(path: str | Path) -> BenchConfig:
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"invalid YAML: {exc}") from exc
    return config_from_dict(doc or {})


def dump_config(cfg: BenchConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)
