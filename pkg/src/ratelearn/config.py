"""Experiment configuration files (JSON).

A config holds the alphabet, the family, the loss class, the seed and one
section per command. Probabilities may be written as decimals or as
rational strings such as ``"1/3"``.
"""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .covering import DistributionFamily
from .losses import ClassifierFamily, FunctionClass, classification_class, regression_class
from .measures import JointPmf


class ConfigError(ValueError):
    """Malformed or incomplete configuration; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


def load(path) -> tuple[dict, bytes]:
    """Parse ``path`` and return ``(config, raw_bytes)``."""
    raw = Path(path).read_bytes()
    try:
        cfg = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ConfigError(f"not UTF-8 text ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("top level must be an object")
    return cfg, raw


def digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError("missing required field", f"{where}{key}")
    return section[key]


def number(value, field: str) -> float:
    try:
        if isinstance(value, str):
            return float(Fraction(value.strip()))
        if isinstance(value, bool):
            raise TypeError
        return float(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(f"expected a number or rational string, got {value!r}", field) from None


def integer(value, field: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", field)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}", field)
    return value


def number_list(value, field: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ConfigError("expected a nonempty list", field)
    return [number(v, f"{field}[{i}]") for i, v in enumerate(value)]


def int_list(value, field: str, minimum: int | None = None) -> list[int]:
    if not isinstance(value, list) or not value:
        raise ConfigError("expected a nonempty list", field)
    return [integer(v, f"{field}[{i}]", minimum) for i, v in enumerate(value)]


def section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError("expected an object", name)
    return sec


def alphabet(cfg: dict) -> tuple[int, int]:
    a = require(cfg, "alphabet", "")
    if not isinstance(a, dict):
        raise ConfigError("expected an object", "alphabet")
    xs = integer(require(a, "x_size", "alphabet."), "alphabet.x_size", 1)
    ys = integer(require(a, "y_size", "alphabet."), "alphabet.y_size", 2)
    return xs, ys


def _matrix(value, shape, field) -> np.ndarray:
    if not isinstance(value, list) or len(value) != shape[0]:
        raise ConfigError(f"expected {shape[0]} rows", field)
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != shape[1]:
            raise ConfigError(f"expected {shape[1]} entries", f"{field}[{i}]")
        rows.append([number(v, f"{field}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows)


def family(cfg: dict) -> DistributionFamily:
    shape = alphabet(cfg)
    members = require(cfg, "family", "")
    if not isinstance(members, list) or not members:
        raise ConfigError("expected a nonempty list of pmf matrices", "family")
    normalize = bool(cfg.get("normalize", False))
    out = []
    for k, m in enumerate(members):
        field = f"family[{k}]"
        probs = _matrix(m, shape, field)
        try:
            out.append(JointPmf.from_normalized(probs) if normalize else JointPmf(probs))
        except ValueError as exc:
            raise ConfigError(str(exc), field) from None
    return DistributionFamily(tuple(out))


def member(cfg: dict, fam: DistributionFamily, key: str, where: str) -> int:
    k = integer(cfg.get(key, 0), f"{where}{key}", 0)
    if k >= len(fam):
        raise ConfigError(f"no member {k} in a family of {len(fam)}", f"{where}{key}")
    return k


def function_class(cfg: dict) -> FunctionClass:
    xs, ys = alphabet(cfg)
    entry = require(cfg, "function_class", "")
    if not isinstance(entry, dict):
        raise ConfigError("expected an object", "function_class")
    kind = require(entry, "type", "function_class.")
    where = "function_class."
    try:
        if kind == "classification":
            maps = entry.get("classifiers", "all")
            if maps == "all":
                return classification_class(ClassifierFamily.all_maps(xs, ys))
            if not isinstance(maps, list):
                raise ConfigError("expected 'all' or a list of maps", where + "classifiers")
            return classification_class(ClassifierFamily(xs, ys, tuple(maps)))
        if kind == "regression":
            g = require(entry, "estimators", where)
            yv = number_list(require(entry, "y_values", where), where + "y_values")
            if len(yv) != ys:
                raise ConfigError(f"expected {ys} values", where + "y_values")
            if not isinstance(g, list) or not g:
                raise ConfigError("expected a nonempty list", where + "estimators")
            est = [number_list(row, f"{where}estimators[{i}]") for i, row in enumerate(g)]
            if any(len(row) != xs for row in est):
                raise ConfigError(f"each estimator needs {xs} values", where + "estimators")
            return regression_class(est, yv)
        if kind == "explicit":
            vals = require(entry, "values", where)
            if not isinstance(vals, list) or not vals:
                raise ConfigError("expected a nonempty list", where + "values")
            tensor = np.stack([_matrix(v, (xs, ys), f"{where}values[{i}]") for i, v in enumerate(vals)])
            bound = number(entry.get("bound", float(tensor.max()) or 1.0), where + "bound")
            return FunctionClass(tensor, bound)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), "function_class") from None
    raise ConfigError(f"unknown type {kind!r}", where + "type")


def seed(cfg: dict) -> int:
    s = integer(require(cfg, "seed", ""), "seed", 0)
    if s >= 2 ** 64:
        raise ConfigError("must fit in 64 bits", "seed")
    return s


def rates(cfg: dict, sec: dict, where: str) -> list[float]:
    """A section's ``rates`` list, falling back to the top-level ``rate``."""
    if "rates" in sec:
        out = number_list(sec["rates"], where + "rates")
    else:
        out = [number(require(cfg, "rate", ""), "rate")]
    if any(r < 0 for r in out):
        raise ConfigError("rates must be nonnegative", where + "rates")
    return out
