"""Scenario configuration: TOML file validated against strict pydantic models.

Unknown keys anywhere are errors, so a misspelled tolerance cannot silently
fall back to its default.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Tolerances(_Strict):
    equality: float = 1e-8
    inequality: float = 1e-8
    asymptotic: float = 0.01
    chain: float = 1e-6


class TolerancesOverride(_Strict):
    equality: Optional[float] = None
    inequality: Optional[float] = None
    asymptotic: Optional[float] = None
    chain: Optional[float] = None


class ProfileSpec(_Strict):
    kind: Literal["zero", "rational", "euler", "linear-bump", "piecewise-min", "tabulated"]
    params: list[float] = []
    path: Optional[str] = None
    t: Optional[list[float]] = None
    values: Optional[list[float]] = None


class ManifoldSpec(_Strict):
    dimension: int = Field(ge=2)
    warp: Literal["euclidean", "comparison", "tabulated"] = "euclidean"
    warp_profile: Optional[ProfileSpec] = None
    path: Optional[str] = None
    horizon: float = 1e3


class TestFunctionSpec(_Strict):
    kind: Literal["constant", "affine", "bump"]
    params: list[float]


class ConstantsParams(_Strict):
    case: Literal["domain", "submanifold"] = "domain"
    n: int = Field(ge=2)
    p: Optional[int] = None
    theta: Optional[float] = None
    B: Optional[float] = None
    b1: Optional[float] = None
    r0: float = 0.0
    expected: Optional[float] = None


class LemmaParams(_Strict):
    random_count: int = Field(default=0, ge=0)
    profiles: list[ProfileSpec] = []
    T_asym: float = 1e4
    T_finite: float = 10.0
    seed: Optional[int] = None


class IsoParams(_Strict):
    radii: list[float]
    horizon: float = 1e3
    expect_equality: bool = False


class SobolevParams(_Strict):
    radii: list[float]
    test_functions: list[TestFunctionSpec]
    horizon: float = 1e3
    expect_equality: bool = False


class SubmanifoldParams(_Strict):
    kinds: list[Literal["flat_disk", "round_sphere"]] = ["flat_disk", "round_sphere"]
    n: int = Field(ge=2)
    p: int = Field(ge=2)
    f: float = Field(default=1.0, gt=0)


class AbpParams(_Strict):
    a: float = Field(gt=0)
    r: float = Field(gt=0)
    test_function: TestFunctionSpec = TestFunctionSpec(kind="constant", params=[1.0])
    samples: int = 801
    closed_form: bool = False


class BishopGromovParams(_Strict):
    horizon: float = 1e3
    expect_theta: Optional[float] = None
    theta_tol: float = 1e-9


class OdeEvaluation(_Strict):
    role: Literal["h1", "h2"] = "h1"
    t: float
    expected: float


class OdeParams(_Strict):
    evaluations: list[OdeEvaluation] = []
    growth_horizon: Optional[float] = None
    growth_tol: Optional[float] = None


PARAMS = {
    "constants": ConstantsParams,
    "lemmas": LemmaParams,
    "isoperimetric": IsoParams,
    "sobolev": SobolevParams,
    "submanifold": SubmanifoldParams,
    "abp": AbpParams,
    "bishop_gromov": BishopGromovParams,
    "ode": OdeParams,
}
NEEDS_GEOMETRY = {"isoperimetric", "sobolev", "abp", "bishop_gromov"}


class Scenario(_Strict):
    id: str = Field(min_length=1)
    command: Literal["constants", "lemmas", "isoperimetric", "sobolev", "submanifold", "abp", "bishop_gromov", "ode"]
    profile: Optional[ProfileSpec] = None
    manifold: Optional[ManifoldSpec] = None
    params: dict = {}
    tolerances: TolerancesOverride = TolerancesOverride()

    @model_validator(mode="after")
    def _check(self):
        PARAMS[self.command].model_validate(self.params)
        if self.command in NEEDS_GEOMETRY and (self.profile is None or self.manifold is None):
            raise ValueError(f"scenario {self.id!r}: command {self.command} needs profile and manifold")
        if self.command == "ode" and self.profile is None:
            raise ValueError(f"scenario {self.id!r}: command ode needs a profile")
        return self

    def typed_params(self):
        return PARAMS[self.command].model_validate(self.params)

    def resolved_tolerances(self, base):
        over = {k: v for k, v in self.tolerances.model_dump().items() if v is not None}
        return base.model_copy(update=over)


class RunConfig(_Strict):
    seed: int = 0
    workers: int = Field(default=1, ge=1)
    tolerances: Tolerances = Tolerances()
    scenario: list[Scenario]

    @model_validator(mode="after")
    def _unique_ids(self):
        seen = set()
        for s in self.scenario:
            if s.id in seen:
                raise ValueError(f"duplicate scenario id {s.id!r}")
            seen.add(s.id)
        return self


def _absolutize(node, base):
    if isinstance(node, dict):
        return {k: (str((base / v).resolve()) if k == "path" and isinstance(v, str) else _absolutize(v, base))
                for k, v in node.items()}
    if isinstance(node, list):
        return [_absolutize(v, base) for v in node]
    return node


def load_config(path):
    """Parse and validate a config file; raise :class:`ConfigError` on any problem."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raw = _absolutize(raw, path.resolve().parent)
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
