"""
Scenario and grid file layer.

Transforms the flat `key = value` scenario and grid documents into
validated Pydantic models, serializes them back, and enumerates the sweep
grid.

File format:
- one `key = value` per line, keys exactly as the model field names
- `#` starts a comment (whole line or trailing)
- list values are comma-separated tokens
- unknown keys are a hard error
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Union

from pydantic import ValidationError

from src.schema.scenario import Algorithm, GridPoint, ScenarioConfig, SweepGrid
from src.utils import sha256_bytes


class ScenarioError(ValueError):
    pass


class ScenarioParseError(ScenarioError):
    pass


class ScenarioValidationError(ScenarioError):
    pass


_LIST_KEYS = {"algorithms", "hom_db_values", "ttt_values", "alpha_beta_values", "speeds_kmh"}


def parse_key_values(text: str, *, source: str = "<string>") -> Dict[str, str]:
    """Split a scenario/grid document into raw string values."""
    values: Dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioParseError(f"{source}:{lineno}: expected 'key = value', got '{raw_line.strip()}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ScenarioParseError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ScenarioParseError(f"{source}:{lineno}: duplicate key '{key}'")
        values[key] = value
    return values


def validation_message(exc: ValidationError) -> str:
    err = exc.errors()[0]
    loc = ".".join(str(p) for p in err.get("loc", ()))
    msg = str(err.get("msg", ""))
    if msg.startswith("Value error, "):
        msg = msg[len("Value error, "):]
    if err.get("type") == "extra_forbidden":
        return f"unknown key '{loc}'"
    return f"{loc}: {msg}" if loc else msg


def scenario_from_mapping(values: Dict[str, Any]) -> ScenarioConfig:
    try:
        return ScenarioConfig(**values)
    except ValidationError as exc:
        raise ScenarioValidationError(validation_message(exc)) from exc


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    """
    Load a scenario file. Unspecified fields take their defaults; an empty
    file yields the default scenario.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioParseError(f"scenario file not found: {path}") from None
    return scenario_from_mapping(parse_key_values(text, source=str(path)))


def loads_scenario(text: str) -> ScenarioConfig:
    return scenario_from_mapping(parse_key_values(text))


def _format_value(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, Algorithm):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_scenario(config: ScenarioConfig) -> str:
    lines = [f"{name} = {_format_value(getattr(config, name))}" for name in ScenarioConfig.model_fields]
    return "\n".join(lines) + "\n"


def config_hash(config: ScenarioConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True)
    return sha256_bytes(canonical.encode("utf-8"))


def _split_list(value: str) -> List[str]:
    return [token.strip() for token in value.split(",") if token.strip()]


def grid_from_mapping(values: Dict[str, str]) -> SweepGrid:
    parsed: Dict[str, Any] = {}
    for key, value in values.items():
        parsed[key] = _split_list(value) if key in _LIST_KEYS else value
    try:
        return SweepGrid(**parsed)
    except ValidationError as exc:
        raise ScenarioValidationError(validation_message(exc)) from exc


def load_grid(path: Union[str, Path]) -> SweepGrid:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioParseError(f"grid file not found: {path}") from None
    return grid_from_mapping(parse_key_values(text, source=str(path)))


def expand_grid(grid: SweepGrid) -> List[GridPoint]:
    """
    Cartesian product per algorithm family: HOA1/HOA4 pair HOM with TTT,
    HOA2/HOA3 pair HOM with the alpha/beta factor.
    Order: algorithm, speed, HOM, parameter.
    """
    points: List[GridPoint] = []
    for algorithm in grid.algorithms:
        params = grid.ttt_values if algorithm.uses_ttt else grid.alpha_beta_values
        for speed in grid.speeds_kmh:
            for hom in grid.hom_db_values:
                for param in params:
                    points.append(GridPoint(algorithm, float(speed), float(hom), float(param)))
    return points


def load_optima(path: Union[str, Path]) -> List[GridPoint]:
    """
    Read an optima.json list (as written by `sweep`) into grid points. Extra
    keys such as optimize_ratio are ignored.
    """
    path = Path(path)
    try:
        entries = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioParseError(f"optima file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(entries, list):
        raise ScenarioParseError(f"{path}: expected a list of optima")

    points: List[GridPoint] = []
    for n, entry in enumerate(entries):
        try:
            point = GridPoint(
                Algorithm.parse(str(entry["algorithm"])),
                float(entry["speed_kmh"]),
                float(entry["hom_db"]),
                float(entry["ttt_or_factor"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioValidationError(f"{path}[{n}]: {exc}") from None
        points.append(point)
    return points
