"""Experiment configuration (YAML or JSON) and its validation.

Times and angles may be written as plain numbers or as multiples of pi,
e.g. ``"2*pi"`` or ``"2*pi/1000"``.
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Any, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .fidelity import Trial, TrialSet
from .statevector import basis_state
from .tfim import TFIMParams, single_flip_bits

_PI_EXPR = re.compile(r"^\s*([-+]?[0-9]*\.?[0-9]*(?:[eE][-+]?[0-9]+)?)\s*\*?\s*pi\s*(?:/\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?))?\s*$")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


def parse_quantity(value: Any) -> float:
    """Number, or a string like ``"2*pi"``, ``"pi/4"``, ``"-0.5pi"``."""
    if isinstance(value, bool):
        raise ValueError("expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_EXPR.match(value)
        if m:
            coeff = m.group(1)
            factor = float(coeff) if coeff not in ("", "+", "-") else (-1.0 if coeff == "-" else 1.0)
            div = float(m.group(2)) if m.group(2) else 1.0
            return factor * math.pi / div
        return float(value)
    raise ValueError(f"expected a number, got {value!r}")


Quantity = float


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelConfig(_Strict):
    model: Literal["tfim"] = "tfim"
    N: int = Field(ge=2, le=12)
    delta: float
    J: float
    lambda_range: tuple[float, float] = (0.8, 1.2)
    kappa_range: tuple[float, float] = (0.01, 0.09)
    steps: Union[int, tuple[int, int]] = (9, 9)

    @field_validator("steps")
    @classmethod
    def _positive_steps(cls, v):
        pair = (v, v) if isinstance(v, int) else v
        if min(pair) < 1:
            raise ValueError("grid steps must be >= 1")
        return pair

    def params(self) -> TFIMParams:
        return TFIMParams(self.N, self.delta, self.J)

    def lambdas(self):
        from .tfim import grid_values

        return grid_values(*self.lambda_range, self.steps[0])

    def kappas(self):
        from .tfim import grid_values

        return grid_values(*self.kappa_range, self.steps[1])


class TrialConfig(_Strict):
    initial: str
    time: Quantity

    @field_validator("time", mode="before")
    @classmethod
    def _time(cls, v):
        return parse_quantity(v)

    @field_validator("time")
    @classmethod
    def _nonnegative(cls, v):
        if v < 0:
            raise ValueError("trial time must be non-negative")
        return v


class EvolutionConfig(_Strict):
    method: Literal["exact", "trotter"] = "exact"
    trotter_steps: Optional[int] = Field(default=None, ge=1)
    tau: Optional[Quantity] = None

    @field_validator("tau", mode="before")
    @classmethod
    def _tau(cls, v):
        return None if v is None else parse_quantity(v)

    @field_validator("tau")
    @classmethod
    def _tau_positive(cls, v):
        if v is not None and v <= 0:
            raise ValueError("tau must be positive")
        return v


class SearchConfig(_Strict):
    theta_th: Optional[Quantity] = None
    fidelity_threshold: Optional[float] = Field(default=None, ge=0, le=1)
    marked: Optional[int] = Field(default=None, ge=1)
    K: int = 5000
    iterations: Optional[int] = Field(default=None, ge=0)
    mode: Literal["ideal", "leaky"] = "leaky"
    lambda_range: Optional[tuple[float, float]] = None
    kappa_range: Optional[tuple[float, float]] = None
    steps: Optional[Union[int, tuple[int, int]]] = None

    @field_validator("theta_th", mode="before")
    @classmethod
    def _theta(cls, v):
        return None if v is None else parse_quantity(v)

    @field_validator("K")
    @classmethod
    def _even_K(cls, v):
        if v < 2 or v % 2:
            raise ValueError("K must be an even integer >= 2")
        return v

    @model_validator(mode="after")
    def _one_threshold(self):
        given = [x is not None for x in (self.theta_th, self.fidelity_threshold, self.marked)]
        if sum(given) != 1:
            raise ValueError("give exactly one of theta_th, fidelity_threshold, marked")
        if self.theta_th is not None and not 0 < self.theta_th < math.pi:
            raise ValueError("theta_th must lie in (0, pi)")
        return self


class VariationalConfig(_Strict):
    t_final: Quantity = 2 * math.pi
    dt: Quantity = 2 * math.pi / 1000
    layers: int = Field(default=3, ge=1)
    integrator: Literal["euler", "heun", "rk4"] = "heun"
    regularization: float = Field(default=1e-8, ge=0)
    coefficients: Union[Literal["exact"], tuple[float, float]] = "exact"
    trotter_reference: bool = True
    record_thetas: bool = False

    @field_validator("t_final", "dt", mode="before")
    @classmethod
    def _q(cls, v):
        return parse_quantity(v)

    @field_validator("t_final", "dt")
    @classmethod
    def _positive(cls, v):
        if v <= 0:
            raise ValueError("times must be positive")
        return v


class OracleConfig(_Strict):
    K: int = 5000
    threshold_units: float = 10
    samples: int = Field(default=200, ge=2)
    span_units: float = 40

    @field_validator("K")
    @classmethod
    def _even_K(cls, v):
        if v < 2 or v % 2:
            raise ValueError("K must be an even integer >= 2")
        return v


class OutputConfig(_Strict):
    dir: str = "out"


class ExperimentConfig(_Strict):
    model: ModelConfig
    trials: list[TrialConfig] = Field(min_length=1)
    evolution: EvolutionConfig = EvolutionConfig()
    search: Optional[SearchConfig] = None
    variational: Optional[VariationalConfig] = None
    oracle: OracleConfig = OracleConfig()
    output: OutputConfig = OutputConfig()

    @field_validator("trials", mode="before")
    @classmethod
    def _expand_trials(cls, v):
        # shorthand: {initial: single_flips, time: ...} expands later, once N is known
        if isinstance(v, dict):
            return [v]
        return v

    @model_validator(mode="after")
    def _check(self):
        N = self.model.N
        for tr in self.trials:
            if tr.initial != "single_flips":
                _initial_bits(tr.initial, N)
        if self.variational is not None and self.variational.coefficients == "exact" and self.model.delta == 0:
            raise ValueError("delta = 0: exact effective coefficients are undefined")
        return self

    def trial_set(self) -> TrialSet:
        N = self.model.N
        trials = []
        for tr in self.trials:
            if tr.initial == "single_flips":
                trials += [Trial(basis_state(N, single_flip_bits(N, i)), tr.time) for i in range(1, N + 1)]
            else:
                trials.append(Trial(basis_state(N, _initial_bits(tr.initial, N)), tr.time))
        return TrialSet(trials)

    def shared_time(self) -> float:
        times = {tr.time for tr in self.trials}
        if len(times) != 1:
            raise ValueError("this command needs one evolution time shared by all trials")
        return times.pop()


def _initial_bits(spec: str, N: int) -> str:
    """``"x_3"`` (flip site 3 of the all-zeros state) or a literal bitstring."""
    m = re.fullmatch(r"[xX]_?(\d+)", spec.strip())
    if m:
        site = int(m.group(1))
        if not 1 <= site <= N:
            raise ValueError(f"initial state {spec!r}: site outside 1..{N}")
        return single_flip_bits(N, site)
    if len(spec) == N and set(spec) <= {"0", "1"}:
        return spec
    raise ValueError(f"initial state {spec!r} is neither x_i nor a {N}-bit string")


# -- loading with line numbers ------------------------------------------------------


def _line_map(node, path=(), out=None) -> dict[tuple, int]:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            k = key.value
            out[path + (k,)] = key.start_mark.line + 1
            _line_map(value, path + (k,), out)
            out[path + (k,)] = key.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _line_map(item, path + (i,), out)
    return out


def _locate(lines: dict[tuple, int], loc: tuple) -> int | None:
    loc = tuple(loc)
    while loc:
        if loc in lines:
            return lines[loc]
        loc = loc[:-1]
    return lines.get(())


def loads(text: str, source: str | None = None) -> ExperimentConfig:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"cannot parse config: {exc}", mark.line + 1 if mark else None, source) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping", 1, source)
    lines = _line_map(node) if node is not None else {}
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(err["loc"])
        field = ".".join(str(p) for p in loc) or "<root>"
        raise ConfigError(f"{field}: {err['msg']}", _locate(lines, loc), source) from None


def load(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return loads(text, str(path))
