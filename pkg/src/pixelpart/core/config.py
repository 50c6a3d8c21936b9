"""Flat key/value configuration files.

One `key = value` per line, `#` starts a comment. Keys are TrainSpec field
names; AttackSpec field names configure the training attack and their
`eval_`-prefixed forms configure the evaluation attack. Values stay strings
until pydantic validates them, so `eps = 8/255` works for any budget field.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Union

from pydantic import ValidationError

from ..base.exceptions import SpecValidationError
from .specs import AttackSpec, TrainSpec

logger = logging.getLogger(__name__)

NUM_WORKERS_ENV = "PART_NUM_WORKERS"
EVAL_PREFIX = "eval_"
ATTACK_KEYS = frozenset(AttackSpec.model_fields)
TRAIN_KEYS = frozenset(
    field.alias or name for name, field in TrainSpec.model_fields.items()
) - {"attack", "eval_attack"}


def parse_config_text(text: str, source: str = "<string>") -> Dict[str, str]:
    """Parse key/value lines into a dict of raw strings.

    Raises:
        SpecValidationError: On a line without "=" or a repeated key.
    """
    values: Dict[str, str] = {}
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecValidationError(
                "malformed config line",
                f"{source}:{line_number}: expected 'key = value', got {raw_line!r}",
            )
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise SpecValidationError(
                "duplicate config key", f"{source}:{line_number}: duplicate key {key!r}"
            )
        values[key] = value
    return values


def build_train_spec(values: Mapping[str, Any]) -> TrainSpec:
    """Route flat keys into a TrainSpec with nested attack specs.

    Raises:
        SpecValidationError: On unknown keys, unparsable values, or a
            violated invariant.
    """
    train: Dict[str, Any] = {}
    attack: Dict[str, Any] = {}
    eval_attack: Dict[str, Any] = {}

    for key, value in values.items():
        if key in ATTACK_KEYS:
            attack[key] = value
        elif key.startswith(EVAL_PREFIX) and key[len(EVAL_PREFIX):] in ATTACK_KEYS:
            eval_attack[key[len(EVAL_PREFIX):]] = value
        elif key in TRAIN_KEYS:
            train[key] = value
        else:
            raise SpecValidationError("unknown config key", f"unknown config key: {key!r}")

    if attack:
        train["attack"] = attack
    if attack or eval_attack:
        eval_attack.setdefault("iterations", 20)
        for key in ("eps", "eps_low", "alpha"):
            if key in attack:
                eval_attack.setdefault(key, attack[key])
        train["eval_attack"] = eval_attack

    try:
        return TrainSpec.model_validate(train)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise SpecValidationError(
            f"invalid value for {location}", f"{location}: {first['msg']}"
        ) from exc


def load_config(path: Union[str, Path]) -> TrainSpec:
    """Read a key/value file into a validated TrainSpec."""
    path = Path(path)
    values = parse_config_text(path.read_text(), source=str(path))
    logger.debug("Loaded %d config keys from %s", len(values), path)
    return build_train_spec(values)


def num_workers() -> int:
    """Parallel job cap from PART_NUM_WORKERS (default 1)."""
    raw = os.environ.get(NUM_WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("Ignoring non-integer %s=%r", NUM_WORKERS_ENV, raw)
        return 1
