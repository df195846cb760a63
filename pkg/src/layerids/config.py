"""Layer configuration and flood scenario files (JSON).

Layer file::

    {"layers": [
      {"layer_id": "primary", "role": "primary", "scenario": "partitioned",
       "rules": "signature.rule", "service_rate": 6.0e7, "queue_capacity": 16,
       "cost": {"mode": "per_rule_scan", "alpha": 100, "beta": 1, "gamma": 0.5}}
    ]}

``service_rate`` and ``queue_capacity`` also accept ``"unbounded"``. Rule
paths are resolved relative to the config file.

Scenario file::

    {"rate_pps": 20000, "duration_us": 10000000, "attack_fraction": 0.5,
     "seed": 2010, "ruleset": "master.rule"}
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Any

from .engine import UNBOUNDED_CAPACITY, CostParams, LayerConfig
from .rules import RuleSet, read_ruleset
from .trafficgen import FloodSpec

CONFIG_DIR_ENV = "LAYERIDS_CONFIG_DIR"
_LAYER_KEYS = {"layer_id", "role", "scenario", "rules", "service_rate", "queue_capacity", "cost"}


class ConfigError(ValueError):
    pass


def default_config_dir() -> Path | None:
    d = os.environ.get(CONFIG_DIR_ENV)
    return Path(d) if d else None


def _load_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None


def _number_or_unbounded(value: Any, what: str, unbounded: float) -> float:
    if value == "unbounded":
        return unbounded
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number or 'unbounded'")
    return value


def layer_from_dict(rec: dict, rules_cache: dict[Path, RuleSet], base: Path) -> LayerConfig:
    extra = set(rec) - _LAYER_KEYS
    if extra:
        raise ConfigError(f"unknown layer keys {sorted(extra)}")
    for key in ("layer_id", "role", "rules"):
        if key not in rec:
            raise ConfigError(f"layer entry missing {key!r}")
    rules_path = (base / rec["rules"]).resolve()
    if rules_path not in rules_cache:
        rules_cache[rules_path] = read_ruleset(rules_path)
    cost = rec.get("cost", {})
    try:
        return LayerConfig(
            layer_id=str(rec["layer_id"]),
            role=rec["role"],
            ruleset=rules_cache[rules_path],
            service_rate=_number_or_unbounded(rec.get("service_rate", "unbounded"), "service_rate", math.inf),
            queue_capacity=int(_number_or_unbounded(rec.get("queue_capacity", "unbounded"),
                                                    "queue_capacity", UNBOUNDED_CAPACITY)),
            cost=CostParams(**cost),
            scenario=str(rec.get("scenario", "default")),
        )
    except TypeError as exc:
        raise ConfigError(f"layer {rec.get('layer_id')!r}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"layer {rec.get('layer_id')!r}: {exc}") from None


def load_layers(path: str | Path) -> list[LayerConfig]:
    path = Path(path)
    doc = _load_json(path)
    if not isinstance(doc, dict) or not isinstance(doc.get("layers"), list) or not doc["layers"]:
        raise ConfigError(f"{path}: expected an object with a non-empty 'layers' list")
    cache: dict[Path, RuleSet] = {}
    return [layer_from_dict(rec, cache, path.parent) for rec in doc["layers"]]


def layer_to_dict(c: LayerConfig, rules: str) -> dict:
    return {
        "layer_id": c.layer_id,
        "role": c.role,
        "scenario": c.scenario,
        "rules": rules,
        "service_rate": "unbounded" if math.isinf(c.service_rate) else c.service_rate,
        "queue_capacity": "unbounded" if c.queue_capacity >= UNBOUNDED_CAPACITY else c.queue_capacity,
        "cost": {"mode": c.cost.mode, "alpha": c.cost.alpha, "beta": c.cost.beta, "gamma": c.cost.gamma},
    }


def load_scenario(path: str | Path) -> tuple[FloodSpec, Path | None]:
    """Read a flood scenario file; returns the spec and the attack ruleset path (if any)."""
    path = Path(path)
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    extra = set(doc) - {"rate_pps", "duration_us", "attack_fraction", "seed", "ruleset"}
    if extra:
        raise ConfigError(f"{path}: unknown keys {sorted(extra)}")
    try:
        spec = FloodSpec(rate_pps=doc["rate_pps"], duration_us=int(doc["duration_us"]),
                         attack_fraction=float(doc.get("attack_fraction", 0.5)),
                         seed=int(doc.get("seed", 0)))
    except KeyError as exc:
        raise ConfigError(f"{path}: missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    rules = doc.get("ruleset")
    return spec, (path.parent / rules).resolve() if rules else None


def scenario_to_dict(spec: FloodSpec, ruleset: str | None = None) -> dict:
    doc = {"rate_pps": spec.rate_pps, "duration_us": spec.duration_us,
           "attack_fraction": spec.attack_fraction, "seed": spec.seed}
    if ruleset is not None:
        doc["ruleset"] = ruleset
    return doc
