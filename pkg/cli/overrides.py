"""
Dotted command-line overrides.

``--train.seed 3`` and ``--sched.eps-target=0.2`` set ``train.seed`` and
``sched.eps_target``. Values are parsed as JSON when they parse, so numbers,
booleans, lists and null come through typed; anything else stays a string.
"""

import copy
import json
from pathlib import Path

from pydantic import ValidationError

from config.models import RunConfig
from utils.exceptions import ConfigError


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_overrides(args: list) -> dict:
    """['--a.b', '1', '--c.d=x'] -> {'a.b': 1, 'c.d': 'x'}"""
    overrides = {}
    i = 0
    while i < len(args):
        token = args[i]
        if not token.startswith("--") or len(token) == 2:
            raise ConfigError(f"Unexpected argument '{token}'")
        key, sep, value = token[2:].partition("=")
        if not sep:
            if i + 1 >= len(args) or args[i + 1].startswith("--"):
                raise ConfigError(f"Override '{token}' needs a value")
            value = args[i + 1]
            i += 1
        if "." not in key:
            raise ConfigError(f"Override '{token}' must name a section, like --train.seed")
        overrides[key.replace("-", "_")] = parse_value(value)
        i += 1
    return overrides


def apply_overrides(document: dict, overrides: dict) -> dict:
    result = copy.deepcopy(document)
    for dotted, value in overrides.items():
        *parents, leaf = dotted.split(".")
        node = result
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"Override '{dotted}': '{part}' is not a section")
            node = child
        node[leaf] = value
    return result


def load_document(path) -> dict:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    return document


def load_run_config(path=None, overrides: dict | None = None) -> RunConfig:
    document = load_document(path) if path is not None else {}
    document = apply_overrides(document, overrides or {})
    try:
        return RunConfig.model_validate(document)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid run configuration: {problems}") from e
