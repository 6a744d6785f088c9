"""JSON run configuration for the command-line driver."""

from __future__ import annotations

import json
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .catalog import Payoff, TimeFunction
from .scenario import ScenarioSpec, ScenarioSpecError, VolatilityBounds, scenario_from_dict


class ConfigError(ValueError):
    """Configuration could not be parsed or failed validation."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BoundsModel(_Strict):
    sigma_lo: float = Field(ge=0)
    sigma_hi: float = Field(gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.sigma_lo > self.sigma_hi:
            raise ValueError(f"sigma_lo={self.sigma_lo} exceeds sigma_hi={self.sigma_hi}")
        return self


class Thresholds(_Strict):
    theorem_rel_rms: float = 2e-2
    min_order: float = 0.4
    exact_rel: float = 1e-12
    recursion_rel: float = 1e-10
    corollary_rel: float = 1e-12
    pde_mc_rel: float = 1e-2
    se_multiple: float = 3.0


class PdeModel(_Strict):
    space_steps: int = 800
    half_width: Optional[float] = None
    cfl_target: float = Field(default=0.9, gt=0, le=1)


class RunConfig(_Strict):
    bounds: BoundsModel
    horizon: float = Field(default=1.0, gt=0)
    grid_sizes: list[int] = Field(default=[256, 1024, 4096], min_length=1)
    scenarios: Optional[list[dict[str, Any]]] = None
    theorem_scenario: Optional[dict[str, Any]] = None
    f: Any = "one"
    chaos_orders: list[int] = Field(default=[2, 3], min_length=1)
    paths_per_scenario: int = Field(default=1000, ge=1)
    moment_paths: Optional[int] = Field(default=None, ge=1)
    seed: int
    output_dir: str = "out"
    formats: list[Literal["json", "csv"]] = ["json", "csv"]
    payoffs: list[str] = ["square", "neg-square", "abs", "call(0.5)"]
    functionals: Optional[list[dict[str, Any]]] = None
    pde: PdeModel = PdeModel()
    thresholds: Thresholds = Thresholds()

    @field_validator("grid_sizes")
    @classmethod
    def _powers_of_two(cls, v):
        for n in v:
            if n < 1 or n & (n - 1):
                raise ValueError(f"grid size {n} is not a power of two")
        if sorted(set(v)) != v:
            raise ValueError("grid sizes must be strictly increasing")
        return v

    @field_validator("chaos_orders")
    @classmethod
    def _orders(cls, v):
        if any(n < 0 for n in v):
            raise ValueError("chaos orders must be nonnegative")
        return v

    @field_validator("f")
    @classmethod
    def _f(cls, v):
        try:
            TimeFunction.parse(v)
        except (ValueError, TypeError) as exc:
            raise ValueError(str(exc)) from None
        return v

    @field_validator("payoffs")
    @classmethod
    def _payoffs(cls, v):
        for p in v:
            Payoff.parse(p)
        return v

    @field_validator("scenarios")
    @classmethod
    def _scenarios(cls, v):
        if v is not None:
            if not v:
                raise ValueError("scenario list is empty")
            for d in v:
                try:
                    scenario_from_dict(d)
                except ScenarioSpecError as exc:
                    raise ValueError(str(exc)) from None
        return v

    @field_validator("theorem_scenario")
    @classmethod
    def _theorem_scenario(cls, v):
        if v is not None:
            try:
                scenario_from_dict(v)
            except ScenarioSpecError as exc:
                raise ValueError(str(exc)) from None
        return v

    # -- resolved views --

    @property
    def volatility(self) -> VolatilityBounds:
        return VolatilityBounds(self.bounds.sigma_lo, self.bounds.sigma_hi)

    @property
    def time_function(self) -> TimeFunction:
        return TimeFunction.parse(self.f, self.horizon)

    @property
    def scenario_specs(self) -> list[ScenarioSpec]:
        from .expectation import default_scenarios

        if self.scenarios is None:
            return default_scenarios(self.volatility)
        return [scenario_from_dict(d) for d in self.scenarios]

    @property
    def theorem_spec(self) -> ScenarioSpec:
        from .scenario import BangBang, Constant

        if self.theorem_scenario is not None:
            return scenario_from_dict(self.theorem_scenario)
        b = self.volatility
        return Constant(b.sigma_hi) if b.classical else BangBang(0.1)

    @property
    def classical(self) -> bool:
        return self.bounds.sigma_lo == self.bounds.sigma_hi


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        if err["type"] == "extra_forbidden":
            lines.append(f"{loc}: unknown key {err['loc'][-1]!r}")
        elif err["type"] == "missing":
            lines.append(f"{loc}: required field missing")
        else:
            lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def parse_config(text: str, seed: int | None = None) -> RunConfig:
    """Parse and validate a JSON configuration document.

    ``seed`` overrides the document's seed when given.

    Raises
    ------
    ConfigError
        Malformed JSON or any validation failure. The message names the
        offending field path.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if seed is not None:
        data["seed"] = seed
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None
