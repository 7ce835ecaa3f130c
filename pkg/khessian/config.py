"""
The MIT License (MIT)

Copyright (c) 2026-present Village

Permission is hereby granted, free of charge, to any person obtaining a
copy of this software and associated documentation files (the "Software"),
to deal in the Software without restriction, including without limitation
the rights to use, copy, modify, merge, publish, distribute, sublicense,
and/or sell copies of the Software, and to permit persons to whom the
Software is furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS
OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
DEALINGS IN THE SOFTWARE.
"""

from __future__ import annotations

import json
import logging
import math
from typing import TYPE_CHECKING, Any, List, Literal, Union, get_args, get_origin, get_type_hints

from .asymptotics import RadialSource
from .dirichlet import SolverOptions
from .entire import CompactBox
from .enums import DomainKind, PowerTailSign
from .errors import ArgumentError, ConfigError
from .fmodel import Bump, Constant, PowerTail, Sum
from .grid import GridSpec
from .symfunc import AkMatrix, normalize_to_Ak

__all__ = (
    "validate",
    "load_config",
    "parse_config",
    "build_matrix",
    "build_f",
    "build_domain",
    "build_options",
    "build_compact",
    "build_source",
)

if TYPE_CHECKING:
    from typing import Dict, Optional, Sequence, Tuple, Type, TypeVar

    from .fmodel import FModel
    from .types.config import CompactConfig, DomainConfig, FConfig, MatrixConfig, SolverConfig, SourceConfig
    from .utils import PathType

    T = TypeVar("T")

_log = logging.getLogger(__name__)


def _is_typed_dict(hint: Any) -> bool:
    return isinstance(hint, type) and issubclass(hint, dict) and hasattr(hint, "__required_keys__")


def _describe(hint: Any) -> str:
    return getattr(hint, "__name__", None) or str(hint).replace("typing.", "")


def _check(value: Any, hint: Any, path: Tuple[str, ...]) -> None:
    origin = get_origin(hint)
    if hint is Any:
        return
    if _is_typed_dict(hint):
        validate(value, hint, path)
        return
    if origin is Union:
        for option in get_args(hint):
            try:
                _check(value, option, path)
            except ConfigError:
                continue
            return
        raise ConfigError(path, f"expected {_describe(hint)}, got {value!r}")
    if origin is Literal:
        if not any(type(value) is type(option) and value == option for option in get_args(hint)):
            choices = ", ".join(repr(option) for option in get_args(hint))
            raise ConfigError(path, f"expected one of {choices}, got {value!r}")
        return
    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        (item,) = get_args(hint)
        for index, element in enumerate(value):
            _check(element, item, path + (str(index),))
        return
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected a boolean, got {value!r}")
        return
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(path, f"expected a finite number, got {value!r}")
        return
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return
    raise ConfigError(path, f"unsupported schema type {_describe(hint)}")


def validate(document: Any, schema: Type[T], path: Sequence[str] = ()) -> T:
    """Check a decoded JSON document against a TypedDict schema."""
    where = tuple(path)
    if not isinstance(document, dict):
        raise ConfigError(where, f"expected an object, got {type(document).__name__}")
    hints = get_type_hints(schema)
    required = getattr(schema, "__required_keys__", frozenset())
    for key in document:
        if key not in hints:
            raise ConfigError(where + (str(key),), "unknown key")
    for key in sorted(required):
        if key not in document:
            raise ConfigError(where + (key,), "missing required key")
    for key, value in document.items():
        _check(value, hints[key], where + (key,))
    return document  # type: ignore


def parse_config(text: str, schema: Type[T]) -> T:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError((), f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return validate(document, schema)


def load_config(path: PathType, schema: Type[T]) -> T:
    try:
        with open(path, "r", encoding="utf-8") as fp:
            text = fp.read()
    except OSError as exc:
        raise ConfigError((), f"cannot read {path}: {exc.strerror}") from None
    config = parse_config(text, schema)
    _log.debug("loaded %s from %s", schema.__name__, path)
    return config


def build_matrix(config: MatrixConfig, path: Sequence[str] = ("A",)) -> AkMatrix:
    where = tuple(path)
    a, k = config["a"], config["k"]
    if not 1 <= k <= len(a):
        raise ConfigError(where + ("k",), f"k must lie in [1, {len(a)}]")
    try:
        if config.get("normalize", False):
            return normalize_to_Ak(a, k)
        return AkMatrix(a, k)
    except ArgumentError as exc:
        raise ConfigError(where + ("a",), str(exc)) from None


def _require(config: Dict[str, Any], key: str, where: Tuple[str, ...], variant: str) -> Any:
    if key not in config:
        raise ConfigError(where + (key,), f"required for the {variant} variant")
    return config[key]


def build_f(config: FConfig, n: int, path: Sequence[str] = ("f",)) -> FModel:
    where = tuple(path)
    variant = config["variant"]
    raw: Dict[str, Any] = dict(config)
    allowed = {
        "constant": {"value"},
        "power_tail": {"C0", "beta", "sign"},
        "bump": {"center", "radius", "amplitude"},
        "sum": {"parts"},
    }[variant]
    for key in raw:
        if key != "variant" and key not in allowed:
            raise ConfigError(where + (key,), f"not a parameter of the {variant} variant")
    try:
        if variant == "constant":
            return Constant(raw.get("value", 1.0))
        if variant == "power_tail":
            sign = PowerTailSign(raw.get("sign", 1))
            return PowerTail(_require(raw, "C0", where, variant), _require(raw, "beta", where, variant), sign)
        if variant == "bump":
            center = _require(raw, "center", where, variant)
            if len(center) != n:
                raise ConfigError(where + ("center",), f"expected {n} coordinates")
            return Bump(center, _require(raw, "radius", where, variant), _require(raw, "amplitude", where, variant))
        parts = _require(raw, "parts", where, variant)
        return Sum([build_f(part, n, where + ("parts", str(i))) for i, part in enumerate(parts)])
    except ArgumentError as exc:
        raise ConfigError(where, str(exc)) from None


def build_domain(config: DomainConfig, A: AkMatrix, path: Sequence[str] = ("domain",)) -> GridSpec:  # noqa: N803
    where = tuple(path)
    nodes = config.get("nodes", 33)
    kind = DomainKind(config["kind"])
    try:
        if kind is DomainKind.BOX:
            if "s" in config:
                raise ConfigError(where + ("s",), "box domains take lower and upper corners")
            lower = _require(dict(config), "lower", where, "box")
            upper = _require(dict(config), "upper", where, "box")
            if len(lower) != A.n or len(upper) != A.n:
                raise ConfigError(where, f"box corners need {A.n} coordinates")
            return GridSpec.box(lower, upper, nodes)
        if "lower" in config or "upper" in config:
            raise ConfigError(where, "ellipsoid domains take only the level s")
        return GridSpec.ellipsoid(A, _require(dict(config), "s", where, "ellipsoid"), nodes)
    except ArgumentError as exc:
        raise ConfigError(where, str(exc)) from None


def build_options(config: Optional[SolverConfig]) -> SolverOptions:
    if not config:
        return SolverOptions()
    return SolverOptions(**config)


def build_compact(config: CompactConfig, n: int, path: Sequence[str] = ("K",)) -> CompactBox:
    where = tuple(path)
    nodes = config.get("nodes", 17)
    try:
        if "half_width" in config:
            if "lower" in config or "upper" in config:
                raise ConfigError(where, "give either half_width or the two corners")
            return CompactBox.cube(n, config["half_width"], nodes)
        lower = _require(dict(config), "lower", where, "corner")
        upper = _require(dict(config), "upper", where, "corner")
        if len(lower) != n or len(upper) != n:
            raise ConfigError(where, f"corners need {n} coordinates")
        return CompactBox(lower, upper, nodes)
    except ArgumentError as exc:
        raise ConfigError(where, str(exc)) from None


def build_source(config: SourceConfig, path: Sequence[str] = ("source",)) -> RadialSource:
    try:
        return RadialSource(config["delta"], config["n"], config.get("r0", 1.0))
    except ArgumentError as exc:
        raise ConfigError(tuple(path), str(exc)) from None
